#include "chorus/invariants.hpp"

#include <map>
#include <set>
#include <sstream>

#include "chorus/consensus.hpp"
#include "chorus/incentives.hpp"
#include "chorus/recruiting.hpp"

namespace chorus {
namespace {

struct Session {
    UserId user;
    bool open = true;
    TimeMs created = 0;
    TimeMs handshake_timeout = 0, idle_timeout = 0;
    bool user_sent = false, crowd_replied = false, user_again = false;
    TimeMs last_user = 0;
    std::map<WorkerId, TimeMs> present;  // joined, not yet submitted -> last activity
    std::set<WorkerId> joined;
    std::map<WorkerId, int> points;
    int voluntary = 0;
    bool settled = false;
    std::optional<TimeMs> close_due;  // second voluntary submission seen

    TimeMs deadline() const {
        return user_sent && crowd_replied && user_again ? last_user + idle_timeout : created + handshake_timeout;
    }
};

struct Proposal {
    SessionId session;
    WorkerId author;
    std::set<WorkerId> votes;
    bool pending = true;
};

struct Slot {
    TimeMs expires = 0;
};

class Checker {
public:
    Checker(const Config& c, std::vector<std::string>& out) : config_(c), out_(out) {}

    void event(const EventLogEntry& e);
    void finish();

private:
    template <typename... Parts>
    void fail(const EventLogEntry& e, const Parts&... parts) {
        std::ostringstream os;
        os << "seq " << e.seq << " (" << to_string(e.kind) << "): ";
        (os << ... << parts);
        out_.push_back(os.str());
    }
    Session* session_of(const EventLogEntry& e) {
        if (!e.session_id) return nullptr;
        const auto it = sessions_.find(*e.session_id);
        if (it == sessions_.end()) {
            fail(e, "unknown session ", e.session_id->value);
            return nullptr;
        }
        return &it->second;
    }
    int active(const Session& s, TimeMs now) const {
        int n = 0;
        for (const auto& [w, last] : s.present) n += now - last <= config_.consensus.heartbeat_window ? 1 : 0;
        return n;
    }
    void expect_acceptance_check(std::uint64_t mid, const Session& s, TimeMs now) {
        const Proposal& p = proposals_.at(mid);
        const int threshold = acceptance_threshold(active(s, now), config_.consensus.threshold_percent);
        if (p.pending && static_cast<int>(p.votes.size()) >= threshold) must_accept_[mid] = now;
    }
    void move(const EventLogEntry& e, AssignmentId a, AssignmentState to) {
        const auto it = assignments_.find(a);
        if (it == assignments_.end()) {
            fail(e, "unknown assignment ", a.value);
            return;
        }
        if (!is_legal_transition(it->second, to))
            fail(e, "illegal assignment transition ", to_string(it->second), " -> ", to_string(to), " for ", a.value);
        it->second = to;
    }
    void join(const EventLogEntry& e, Session& s, const WorkerId& w) {
        if (const auto it = serving_.find(w); it != serving_.end())
            fail(e, "worker ", w, " joins a second conversation while serving session ", it->second.value);
        serving_[w] = *e.session_id;
        s.present[w] = e.at;
        s.joined.insert(w);
    }
    void leave(const WorkerId& w, SessionId sid) {
        if (const auto it = serving_.find(w); it != serving_.end() && it->second == sid) serving_.erase(it);
    }

    const Config& config_;
    std::vector<std::string>& out_;
    std::uint64_t last_seq_ = 0;
    TimeMs last_at_ = 0;
    std::map<SessionId, Session> sessions_;
    std::map<UserId, SessionId> open_by_user_;
    std::map<std::uint64_t, Proposal> proposals_;
    std::map<std::uint64_t, TimeMs> must_accept_;
    std::set<std::uint64_t> accepted_, delivered_;
    std::map<AssignmentId, AssignmentState> assignments_;
    std::map<AssignmentId, Slot> slots_;
    std::map<WorkerId, TimeMs> retainer_;  // waiting worker -> entry expiry
    std::map<WorkerId, SessionId> serving_;
    std::set<UserId> blocked_;
};

void Checker::event(const EventLogEntry& e) {
    if (e.seq != last_seq_ + 1) fail(e, "expected seq ", last_seq_ + 1);
    if (e.at < last_at_) fail(e, "time went backwards from ", last_at_);
    last_seq_ = e.seq;
    last_at_ = e.at;

    // A reached threshold must be acted on at the same instant.
    for (auto it = must_accept_.begin(); it != must_accept_.end();) {
        if (it->second < e.at) {
            fail(e, "message ", it->first, " reached its threshold at ", it->second, " but was not accepted");
            it = must_accept_.erase(it);
        } else {
            ++it;
        }
    }
    Session* s = e.kind == EventKind::SessionOpened ? nullptr : session_of(e);
    if (s != nullptr && s->close_due && *s->close_due < e.at && s->open)
        fail(e, "session stayed open after its second submission");
    if (s != nullptr && s->open && e.at >= s->deadline() && e.kind != EventKind::PointsAwarded &&
        e.kind != EventKind::SessionClosed)
        fail(e, "session ", e.session_id->value, " still open past its deadline ", s->deadline());
    if (s != nullptr && blocked_.contains(s->user) && e.kind != EventKind::BonusSettled &&
        e.kind != EventKind::SubmissionRecorded && e.kind != EventKind::RetainerEntered)
        fail(e, "activity in a blocked user's session");

    const json& p = e.payload;
    auto worker = [&] { return p.at("worker_id").get<WorkerId>(); };
    auto require_open = [&](const char* what) {
        if (s != nullptr && !s->open) fail(e, what, " after closure");
    };
    auto touch = [&](const WorkerId& w) {
        if (s == nullptr) return;
        const auto it = s->present.find(w);
        if (it == s->present.end())
            fail(e, "worker ", w, " acts without being present");
        else
            it->second = e.at;
    };

    switch (e.kind) {
        case EventKind::SessionOpened: {
            const UserId u = p.at("user_id").get<UserId>();
            if (open_by_user_.contains(u)) fail(e, "user ", u, " already has an open session");
            if (blocked_.contains(u)) fail(e, "session opened for a blocked user");
            if (sessions_.contains(*e.session_id)) fail(e, "session id reused");
            Session n;
            n.user = u;
            n.created = e.at;
            n.handshake_timeout = p.at("handshake_timeout_ms").get<TimeMs>();
            n.idle_timeout = p.at("idle_timeout_ms").get<TimeMs>();
            sessions_[*e.session_id] = n;
            open_by_user_[u] = *e.session_id;
            break;
        }
        case EventKind::UserMessage:
            if (p.value("dropped", false)) {
                if (e.session_id) fail(e, "dropped message attached to a session");
                break;
            }
            require_open("user message");
            if (s != nullptr) {
                if (!s->user_sent)
                    s->user_sent = true;
                else if (s->crowd_replied)
                    s->user_again = true;
                s->last_user = e.at;
            }
            break;
        case EventKind::ProposalCreated: {
            require_open("proposal");
            const WorkerId w = worker();
            touch(w);
            const auto mid = p.at("message_id").get<std::uint64_t>();
            if (proposals_.contains(mid)) fail(e, "message id reused");
            proposals_[mid] = Proposal{*e.session_id, w, {w}, true};
            if (s != nullptr) expect_acceptance_check(mid, *s, e.at);
            break;
        }
        case EventKind::VoteCast: {
            require_open("vote");
            const WorkerId w = worker();
            touch(w);
            const auto mid = p.at("message_id").get<std::uint64_t>();
            const auto it = proposals_.find(mid);
            if (it == proposals_.end()) {
                fail(e, "vote on unknown message ", mid);
                break;
            }
            if (!it->second.pending) fail(e, "vote on a message that is not pending");
            if (!it->second.votes.insert(w).second) fail(e, "duplicate vote by ", w);
            if (s != nullptr) expect_acceptance_check(mid, *s, e.at);
            break;
        }
        case EventKind::MessageAccepted: {
            require_open("acceptance");
            const auto mid = p.at("message_id").get<std::uint64_t>();
            const auto it = proposals_.find(mid);
            if (it == proposals_.end() || !it->second.pending) {
                fail(e, "acceptance of a message that is not a pending proposal");
                break;
            }
            const int n = s ? active(*s, e.at) : 0;
            const int threshold = acceptance_threshold(n, config_.consensus.threshold_percent);
            const int votes = static_cast<int>(it->second.votes.size());
            if (p.at("active_count").get<int>() != n) fail(e, "active_count ", p.at("active_count"), " != ", n);
            if (p.at("threshold").get<int>() != threshold) fail(e, "threshold ", p.at("threshold"), " != ", threshold);
            if (votes < threshold) fail(e, "accepted with ", votes, " of ", threshold, " votes");
            it->second.pending = false;
            accepted_.insert(mid);
            must_accept_.erase(mid);
            if (s != nullptr) s->crowd_replied = s->crowd_replied || s->user_sent;
            break;
        }
        case EventKind::MessageDelivered: {
            const auto mid = p.at("message_id").get<std::uint64_t>();
            if (!accepted_.contains(mid)) fail(e, "delivery of a message that was not accepted");
            if (!delivered_.insert(mid).second) fail(e, "message ", mid, " delivered twice");
            break;
        }
        case EventKind::FactPosted:
            require_open("fact");
            touch(worker());
            break;
        case EventKind::WorkerHeartbeat:
            require_open("heartbeat");
            touch(worker());
            break;
        case EventKind::PointsAwarded: {
            require_open("points award");
            const Action a = action_from(p.at("action").get<std::string>());
            const int pts = p.at("points").get<int>();
            const int expected = a == Action::Waiting ? p.at("intervals").get<int>() * config_.incentives.waiting_points
                                                      : points_for(config_.incentives, a);
            if (pts != expected) fail(e, "awarded ", pts, " points for ", to_string(a), ", expected ", expected);
            if (pts < 0) fail(e, "negative points");
            if (s != nullptr) s->points[worker()] += pts;
            break;
        }
        case EventKind::SessionClosed: {
            if (s == nullptr) break;
            if (!s->open) fail(e, "session closed twice");
            const auto reason = p.at("reason").get<std::string>();
            const auto cause = p.value("cause", "");
            if (reason == "two_submissions" && s->voluntary < 2) fail(e, "closed for submissions with ", s->voluntary);
            // The deadline closes a session at the first instant anything happens at or after it.
            if (cause == "deadline" && e.at < s->deadline())
                fail(e, "timeout at ", e.at, " before the deadline ", s->deadline());
            s->open = false;
            for (auto& [mid, prop] : proposals_)
                if (prop.session == *e.session_id) must_accept_.erase(mid);
            if (const auto it = open_by_user_.find(s->user); it != open_by_user_.end() && it->second == *e.session_id)
                open_by_user_.erase(it);
            break;
        }
        case EventKind::SubmissionRecorded: {
            if (s == nullptr) break;
            const WorkerId w = worker();
            const bool forced = p.at("forced").get<bool>();
            if (!s->present.contains(w)) fail(e, "submission by ", w, " who is not present");
            const int pts = s->points[w];
            const auto outcome = p.at("assignment_outcome").get<std::string>();
            if (!forced) {
                require_open("voluntary submission");
                if (pts < config_.incentives.min_points_to_submit) fail(e, "submitted with only ", pts, " points");
                if (++s->voluntary >= 2) s->close_due = e.at;
            } else {
                if (s->open) fail(e, "forced submission while open");
                const bool back = config_.recruiting.return_under_minimum && pts < config_.incentives.min_points_to_submit;
                if ((outcome == "retainer") != back) fail(e, "forced outcome ", outcome, " with ", pts, " points");
            }
            s->present.erase(w);
            leave(w, *e.session_id);
            if (outcome == "submitted") {
                // The assignment id is only in the engine's state; its transition is checked via RetainerEntered.
            }
            break;
        }
        case EventKind::BonusSettled: {
            if (s == nullptr) break;
            if (s->open) fail(e, "bonus settled while open");
            if (s->settled) fail(e, "bonus settled twice");
            if (!s->present.empty()) fail(e, "bonus settled before every worker submitted");
            s->settled = true;
            std::int64_t total = 0;
            for (const auto& w : s->joined) {
                const Cents want = bonus_for_points(s->points[w], config_.incentives.bonus_per_point);
                const auto got = p.at("bonuses").value(w, std::int64_t{-1});
                if (got != want.value) fail(e, "bonus for ", w, " is ", got, ", expected ", want.value);
                total += want.value;
            }
            if (p.at("total_cents").get<std::int64_t>() != total) fail(e, "bonus total mismatch");
            break;
        }
        case EventKind::HitPosted: {
            const int n = static_cast<int>(p.at("assignment_ids").size());
            const int dispatched = p.value("dispatched", 0);
            const int target = p.value("target", config_.recruiting.target_crowd_size);
            const int max = config_.recruiting.platform_max_assignments;
            if (n < 1 || n > max) fail(e, "HIT with ", n, " assignments");
            if (p.value("policy", "dynamic") == "static" ? dispatched != 0 || n != std::min(target, max)
                                                          : n != std::min(target - dispatched, max))
                fail(e, "dispatched ", dispatched, " + posted ", n, " does not match target ", target);
            for (const auto& a : p.at("assignment_ids")) {
                const AssignmentId id{a.get<std::uint64_t>()};
                if (assignments_.contains(id)) fail(e, "assignment id reused");
                assignments_[id] = AssignmentState::Unclaimed;
            }
            break;
        }
        case EventKind::AssignmentClaimed: {
            const AssignmentId a{p.at("assignment_id").get<std::uint64_t>()};
            const WorkerId w = worker();
            move(e, a, AssignmentState::Claimed);
            if (p.at("joins") == "conversation") {
                require_open("claim");
                move(e, a, AssignmentState::InConversation);
                if (s != nullptr) join(e, *s, w);
            } else {
                const auto slot = slots_.find(a);
                if (slot == slots_.end())
                    fail(e, "retainer claim without a slot");
                else if (e.at >= slot->second.expires)
                    fail(e, "slot claimed after it expired");
                if (serving_.contains(w) || retainer_.contains(w)) fail(e, "busy worker claims a slot");
                slots_.erase(a);
            }
            break;
        }
        case EventKind::RetainerEntered: {
            const AssignmentId a{p.at("assignment_id").get<std::uint64_t>()};
            const TimeMs expires = p.at("expires_at").get<TimeMs>();
            const auto w = p.at("worker_id");
            if (w.is_null()) {
                if (expires != e.at + config_.recruiting.retainer_duration) fail(e, "slot expiry is not 30 minutes out");
                if (assignments_.contains(a) && assignments_.at(a) != AssignmentState::Unclaimed)
                    fail(e, "slot from a claimed assignment");
                slots_[a] = Slot{expires};
                break;
            }
            const std::string source = p.value("source", "");
            if (source == "under_minimum" && expires != e.at + config_.recruiting.retainer_duration)
                fail(e, "retainer entry expiry is not 30 minutes out");
            if (expires > e.at + config_.recruiting.retainer_duration) fail(e, "retainer entry outlives 30 minutes");
            move(e, a, AssignmentState::InRetainer);
            if (!retainer_.emplace(w.get<WorkerId>(), expires).second) fail(e, "worker already in the retainer");
            break;
        }
        case EventKind::RetainerPinged:
            if (!retainer_.contains(worker())) fail(e, "ping to a worker outside the retainer");
            require_open("ping");
            break;
        case EventKind::RetainerDispatched: {
            require_open("dispatch");
            const WorkerId w = worker();
            const auto it = retainer_.find(w);
            if (it == retainer_.end())
                fail(e, "dispatch of a worker outside the retainer");
            else if (e.at >= it->second)
                fail(e, "dispatch after retainer expiry");
            retainer_.erase(w);
            move(e, AssignmentId{p.at("assignment_id").get<std::uint64_t>()}, AssignmentState::InConversation);
            if (s != nullptr) join(e, *s, w);
            break;
        }
        case EventKind::RetainerPingMissed:
            if (p.at("strikes").get<int>() > config_.recruiting.strike_limit) fail(e, "strikes beyond the limit");
            break;
        case EventKind::RetainerExpired: {
            const AssignmentId a{p.at("assignment_id").get<std::uint64_t>()};
            const auto w = p.at("worker_id");
            const bool timeout = p.value("reason", "") == "timeout";
            if (w.is_null()) {
                const auto it = slots_.find(a);
                if (it == slots_.end())
                    fail(e, "expiry of an unknown slot");
                else if (timeout && e.at < it->second.expires)
                    fail(e, "slot expired early");
                slots_.erase(a);
            } else {
                const auto it = retainer_.find(w.get<WorkerId>());
                if (it == retainer_.end())
                    fail(e, "expiry of a worker outside the retainer");
                else if (timeout && e.at < it->second)
                    fail(e, "retainer entry expired early");
                retainer_.erase(w.get<WorkerId>());
            }
            move(e, a, AssignmentState::Expired);
            break;
        }
        case EventKind::AutoReplySent: break;
        case EventKind::UserBlocked: {
            const UserId u = p.at("user_id").get<UserId>();
            if (open_by_user_.contains(u)) fail(e, "user blocked with an open session");
            blocked_.insert(u);
            break;
        }
        case EventKind::UserUnblocked: blocked_.erase(p.at("user_id").get<UserId>()); break;
        case EventKind::ReportFiled: break;
    }

    // Entries and slots never outlive their expiry by more than the current instant.
    if (e.kind != EventKind::RetainerExpired) {
        for (const auto& [w, expires] : retainer_)
            if (expires < e.at) fail(e, "retainer entry for ", w, " outlived its expiry ", expires);
        for (const auto& [a, slot] : slots_)
            if (slot.expires < e.at) fail(e, "retainer slot ", a.value, " outlived its expiry ", slot.expires);
    }
}

void Checker::finish() {
    for (const auto& mid : accepted_)
        if (!delivered_.contains(mid)) out_.push_back("message " + std::to_string(mid) + " accepted but never delivered");
    for (const auto& [mid, at] : must_accept_)
        out_.push_back("message " + std::to_string(mid) + " reached its threshold but was not accepted");
    for (const auto& [id, s] : sessions_)
        if (!s.open && !s.settled) out_.push_back("session " + std::to_string(id.value) + " closed without settlement");
}

}  // namespace

std::vector<std::string> check_invariants(std::span<const EventLogEntry> log, const Config& config) {
    std::vector<std::string> out;
    Checker checker(config, out);
    for (const auto& e : log) {
        try {
            checker.event(e);
        } catch (const std::exception& ex) {
            out.push_back("seq " + std::to_string(e.seq) + ": malformed event: " + ex.what());
        }
    }
    checker.finish();
    return out;
}

}  // namespace chorus
