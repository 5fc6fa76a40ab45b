#include "chorus/lifecycle.hpp"

#include <algorithm>

#include "chorus/engine.hpp"

namespace chorus {

std::string_view to_string(SessionState s) { return s == SessionState::Open ? "open" : "closed"; }

std::string_view to_string(CloseReason r) { return r == CloseReason::TwoSubmissions ? "two_submissions" : "timeout"; }

CloseReason close_reason_from(std::string_view s) {
    if (s == "two_submissions") return CloseReason::TwoSubmissions;
    if (s == "timeout") return CloseReason::Timeout;
    throw Error(ErrorCode::CorruptLog, "unknown close reason '" + std::string(s) + "'");
}

void HandshakeStatus::observe_user_message() {
    if (!user_sent)
        user_sent = true;
    else if (crowd_replied)
        user_replied_again = true;
}

void HandshakeStatus::observe_crowd_accepted() {
    if (user_sent) crowd_replied = true;
}

HandshakeStatus check_handshake(std::span<const EventLogEntry> session_events) {
    HandshakeStatus h;
    for (const auto& e : session_events) {
        if (e.kind == EventKind::UserMessage && !e.payload.value("dropped", false))
            h.observe_user_message();
        else if (e.kind == EventKind::MessageAccepted)
            h.observe_crowd_accepted();
    }
    return h;
}

TimeMs deadline_for(const SessionRecord& s) {
    if (s.handshake.complete() && s.last_user_message_at) return *s.last_user_message_at + s.idle_timeout;
    return s.created_at + s.handshake_timeout;
}

const Participant* SessionRecord::participant(const WorkerId& w) const {
    for (const auto& p : participants)
        if (p.worker_id == w) return &p;
    return nullptr;
}

Participant* SessionRecord::participant(const WorkerId& w) {
    for (auto& p : participants)
        if (p.worker_id == w) return &p;
    return nullptr;
}

void to_json(json& j, const SessionRecord& s) {
    json parts = json::array();
    for (const auto& p : s.participants) {
        parts.push_back({{"worker_id", p.worker_id},
                         {"assignment_id", p.assignment_id},
                         {"joined_at", p.joined_at},
                         {"last_heartbeat", p.last_heartbeat},
                         {"submitted", p.submitted == SubmitState::None        ? "no"
                                       : p.submitted == SubmitState::Voluntary ? "voluntary"
                                                                               : "forced"}});
    }
    j = json{{"session_id", s.session_id},
             {"user_id", s.user_id},
             {"created_at", s.created_at},
             {"state", to_string(s.state)},
             {"close_reason", s.close_reason ? json(to_string(*s.close_reason)) : json(nullptr)},
             {"closed_at", s.closed_at ? json(*s.closed_at) : json(nullptr)},
             {"handshake",
              {{"user_sent", s.handshake.user_sent},
               {"crowd_replied", s.handshake.crowd_replied},
               {"user_replied_again", s.handshake.user_replied_again}}},
             {"handshake_complete", s.handshake_complete},
             {"deadline", s.deadline},
             {"submissions", s.submissions},
             {"forced_submissions", s.forced_submissions},
             {"last_user_message_at", s.last_user_message_at ? json(*s.last_user_message_at) : json(nullptr)},
             {"participants", parts},
             {"messages", s.messages},
             {"facts", s.facts}};
}

// ---------------------------------------------------------------------------
// Engine: session state machine

SessionRecord Engine::open_session(const UserId& user, const std::string& first_message, TimeMs now) {
    advance_clock(now);
    tick(now);
    if (trim(first_message).empty()) throw Error(ErrorCode::EmptyBody, "first message is empty");
    if (const auto it = state_.users.find(user); it != state_.users.end() && it->second.blocked)
        throw Error(ErrorCode::UserBlocked, user);
    if (state_.open_session_by_user.contains(user)) throw Error(ErrorCode::SessionAlreadyOpen, user);
    return open_session_unchecked(user, first_message, now, nullptr);
}

TimeMs Engine::recompute_deadline(SessionId session, TimeMs) const {
    return deadline_for(open_session_or_throw(session));
}

SubmissionResult Engine::submit_hit(SessionId session, const WorkerId& worker, TimeMs now) {
    advance_clock(now);
    tick(now);
    open_session_or_throw(session);
    present_participant_or_throw(*state_.session(session), worker);
    credit_waiting(session, now);
    if (!eligible_to_submit(session, worker))
        throw Error(ErrorCode::NotEligible, worker + " has " + std::to_string(state_.points(session, worker)) +
                                                " points, needs " +
                                                std::to_string(config_.incentives.min_points_to_submit));

    emit(now, EventKind::SubmissionRecorded, session,
         json{{"worker_id", worker}, {"forced", false}, {"assignment_outcome", "submitted"}});

    SubmissionResult result;
    result.session_id = session;
    result.worker_id = worker;
    result.voluntary_submissions = static_cast<int>(state_.session(session)->submissions.size());
    if (result.voluntary_submissions >= 2) {
        close_session(session, CloseReason::TwoSubmissions, now, "two_submissions");
        result.session_closed = true;
        const auto& forced = state_.session(session)->forced_submissions;
        result.force_submitted.assign(forced.begin(), forced.end());
    }
    return result;
}

void Engine::close_session(SessionId session, CloseReason reason, TimeMs now, const char* cause) {
    const SessionRecord* s = state_.session(session);
    if (s == nullptr || !s->is_open()) return;

    credit_waiting(session, now);
    emit(now, EventKind::SessionClosed, session, json{{"reason", to_string(reason)}, {"cause", cause}});

    std::vector<WorkerId> remaining;
    for (const auto& p : state_.session(session)->participants)
        if (p.present()) remaining.push_back(p.worker_id);
    for (const auto& w : remaining) {
        const bool under_minimum = state_.points(session, w) < config_.incentives.min_points_to_submit;
        const bool to_retainer = config_.recruiting.return_under_minimum && under_minimum;
        emit(now, EventKind::SubmissionRecorded, session,
             json{{"worker_id", w}, {"forced", true}, {"assignment_outcome", to_retainer ? "retainer" : "submitted"}});
    }
    settle_bonus(session, now);
    convert_to_retainer(session, now);
}

std::vector<SessionId> Engine::tick(TimeMs now) {
    advance_clock(now);
    // Lapsed retainer time first, for waiting workers and unclaimed slots, so that
    // nothing later in the tick sees an entry past its expiry.
    std::vector<RetainerEntry> lapsed;
    for (const auto& r : state_.retainer.waiting)
        if (r.expires_at <= now) lapsed.push_back(r);
    for (const auto& r : lapsed) {
        emit(now, EventKind::RetainerExpired, std::nullopt,
             json{{"assignment_id", r.assignment_id}, {"worker_id", r.worker_id}, {"reason", "timeout"}});
        platform_->expire_assignment(r.assignment_id);
    }
    std::vector<AssignmentId> slots;
    for (const auto& [id, expires_at] : state_.retainer.slots)
        if (expires_at <= now) slots.push_back(id);
    for (AssignmentId id : slots) {
        emit(now, EventKind::RetainerExpired, std::nullopt,
             json{{"assignment_id", id}, {"worker_id", nullptr}, {"reason", "timeout"}});
        platform_->expire_assignment(id);
    }

    std::vector<SessionId> due;
    for (const auto& [user, id] : state_.open_session_by_user)
        if (state_.sessions.at(id).deadline <= now) due.push_back(id);
    std::sort(due.begin(), due.end());
    for (SessionId id : due) close_session(id, CloseReason::Timeout, now, "deadline");

    // Missed dispatch promises: back of the queue with a strike, expired at the strike limit.
    std::vector<std::pair<WorkerId, Ping>> missed;
    for (const auto& [w, ping] : state_.retainer.pings)
        if (now - ping.sent_at > config_.recruiting.dispatch_promise) missed.emplace_back(w, ping);
    for (const auto& [w, ping] : missed) {
        const RetainerEntry* entry = state_.retainer.find(w);
        if (entry == nullptr) continue;
        const AssignmentId a = entry->assignment_id;
        const int strikes = entry->strikes + 1;
        emit(now, EventKind::RetainerPingMissed, ping.session_id,
             json{{"worker_id", w}, {"assignment_id", a}, {"strikes", strikes}});
        if (strikes >= config_.recruiting.strike_limit) {
            emit(now, EventKind::RetainerExpired, std::nullopt,
                 json{{"assignment_id", a}, {"worker_id", w}, {"reason", "strikes"}});
            platform_->expire_assignment(a);
        }
        const SessionRecord* s = state_.session(ping.session_id);
        if (s != nullptr && s->is_open()) ping_waiting_workers(ping.session_id, 1, now, &w);
    }
    return due;
}

}  // namespace chorus
