#include "chorus/events.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <utility>

namespace chorus {
namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 23> kKindNames{{
    {EventKind::UserMessage, "UserMessage"},
    {EventKind::ProposalCreated, "ProposalCreated"},
    {EventKind::VoteCast, "VoteCast"},
    {EventKind::MessageAccepted, "MessageAccepted"},
    {EventKind::MessageDelivered, "MessageDelivered"},
    {EventKind::FactPosted, "FactPosted"},
    {EventKind::PointsAwarded, "PointsAwarded"},
    {EventKind::SessionOpened, "SessionOpened"},
    {EventKind::SessionClosed, "SessionClosed"},
    {EventKind::HitPosted, "HitPosted"},
    {EventKind::AssignmentClaimed, "AssignmentClaimed"},
    {EventKind::RetainerEntered, "RetainerEntered"},
    {EventKind::RetainerDispatched, "RetainerDispatched"},
    {EventKind::RetainerExpired, "RetainerExpired"},
    {EventKind::SubmissionRecorded, "SubmissionRecorded"},
    {EventKind::BonusSettled, "BonusSettled"},
    {EventKind::AutoReplySent, "AutoReplySent"},
    {EventKind::UserBlocked, "UserBlocked"},
    {EventKind::WorkerHeartbeat, "WorkerHeartbeat"},
    {EventKind::RetainerPinged, "RetainerPinged"},
    {EventKind::RetainerPingMissed, "RetainerPingMissed"},
    {EventKind::UserUnblocked, "UserUnblocked"},
    {EventKind::ReportFiled, "ReportFiled"},
}};

}  // namespace

std::string_view to_string(EventKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "Unknown";
}

EventKind event_kind_from(std::string_view name) {
    for (const auto& [k, n] : kKindNames)
        if (n == name) return k;
    throw Error(ErrorCode::CorruptLog, "unknown event kind '" + std::string(name) + "'");
}

void to_json(json& j, const EventLogEntry& e) {
    j = json{{"seq", e.seq},
             {"at", e.at},
             {"session_id", e.session_id ? json(e.session_id->value) : json(nullptr)},
             {"kind", to_string(e.kind)},
             {"payload", e.payload}};
}

void from_json(const json& j, EventLogEntry& e) {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.at = j.at("at").get<TimeMs>();
    const json& s = j.at("session_id");
    e.session_id = s.is_null() ? std::nullopt : std::optional<SessionId>(SessionId{s.get<std::uint64_t>()});
    e.kind = event_kind_from(j.at("kind").get<std::string>());
    e.payload = j.at("payload");
}

const EventLogEntry& EventLog::append(TimeMs at, EventKind kind, std::optional<SessionId> session,
                                      json payload) {
    entries_.push_back(EventLogEntry{last_seq() + 1, at, session, kind, std::move(payload)});
    return entries_.back();
}

std::span<const EventLogEntry> EventLog::since(std::uint64_t seq) const {
    // seq is contiguous from 1, so entry n lives at index n-1.
    if (seq >= last_seq()) return {};
    return std::span<const EventLogEntry>(entries_).subspan(seq);
}

std::string to_jsonl_line(const EventLogEntry& e) { return json(e).dump(); }

void EventLog::write_jsonl(std::ostream& out) const {
    for (const auto& e : entries_) out << to_jsonl_line(e) << '\n';
}

std::string EventLog::to_jsonl() const {
    std::ostringstream out;
    write_jsonl(out);
    return out.str();
}

EventLog EventLog::read_jsonl(std::istream& in) {
    EventLog log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            log.entries_.push_back(json::parse(line).get<EventLogEntry>());
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::CorruptLog, "line " + std::to_string(line_no) + ": " + ex.what());
        }
        if (log.entries_.back().seq != log.entries_.size())
            throw Error(ErrorCode::CorruptLog, "line " + std::to_string(line_no) + ": expected seq " +
                                                   std::to_string(log.entries_.size()));
    }
    return log;
}

EventLog EventLog::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::CorruptLog, "cannot open " + path);
    return read_jsonl(in);
}

void EventLog::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    write_jsonl(out);
}

}  // namespace chorus
