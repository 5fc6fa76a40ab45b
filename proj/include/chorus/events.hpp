#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chorus/core.hpp"

namespace chorus {

enum class EventKind {
    UserMessage,
    ProposalCreated,
    VoteCast,
    MessageAccepted,
    MessageDelivered,
    FactPosted,
    PointsAwarded,
    SessionOpened,
    SessionClosed,
    HitPosted,
    AssignmentClaimed,
    RetainerEntered,
    RetainerDispatched,
    RetainerExpired,
    SubmissionRecorded,
    BonusSettled,
    AutoReplySent,
    UserBlocked,
    // Needed to make the log a complete record of presence, pings and admin actions.
    WorkerHeartbeat,
    RetainerPinged,
    RetainerPingMissed,
    UserUnblocked,
    ReportFiled,
};

std::string_view to_string(EventKind kind);
/// Throws Error{CorruptLog} for an unknown name.
EventKind event_kind_from(std::string_view name);

/// One protocol event. The log of these is the only persistent state; everything
/// else is a fold over it.
struct EventLogEntry {
    std::uint64_t seq = 0;
    TimeMs at = 0;
    std::optional<SessionId> session_id;
    EventKind kind = EventKind::UserMessage;
    json payload = json::object();

    bool operator==(const EventLogEntry&) const = default;
};

void to_json(json& j, const EventLogEntry& e);
void from_json(const json& j, EventLogEntry& e);

/// Append-only, globally sequenced. seq starts at 1 and is contiguous.
class EventLog {
public:
    const EventLogEntry& append(TimeMs at, EventKind kind, std::optional<SessionId> session, json payload);

    std::span<const EventLogEntry> entries() const { return entries_; }
    std::span<const EventLogEntry> since(std::uint64_t seq) const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::uint64_t last_seq() const { return entries_.empty() ? 0 : entries_.back().seq; }
    const EventLogEntry& back() const { return entries_.back(); }

    /// Adopts pre-sequenced entries verbatim (used when loading from disk).
    void push_verbatim(EventLogEntry entry) { entries_.push_back(std::move(entry)); }

    /// One JSON object per line, UTF-8.
    void write_jsonl(std::ostream& out) const;
    std::string to_jsonl() const;
    static EventLog read_jsonl(std::istream& in);
    static EventLog load(const std::string& path);
    void save(const std::string& path) const;

    bool operator==(const EventLog&) const = default;

private:
    std::vector<EventLogEntry> entries_;
};

std::string to_jsonl_line(const EventLogEntry& e);

}  // namespace chorus
