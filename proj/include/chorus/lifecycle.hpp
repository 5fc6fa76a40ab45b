#pragma once

#include <optional>
#include <set>
#include <span>
#include <vector>

#include "chorus/core.hpp"
#include "chorus/events.hpp"

namespace chorus {

enum class SessionState { Open, Closed };
enum class CloseReason { TwoSubmissions, Timeout };

std::string_view to_string(SessionState s);
std::string_view to_string(CloseReason r);
CloseReason close_reason_from(std::string_view s);

struct HandshakeStatus {
    bool user_sent = false;
    bool crowd_replied = false;
    bool user_replied_again = false;

    bool complete() const { return user_replied_again; }
    bool operator==(const HandshakeStatus&) const = default;

    /// Advance on one chat event; conditions are satisfied strictly in order.
    void observe_user_message();
    void observe_crowd_accepted();
};

/// Scans a session's events in order: a user message, then an accepted crowd
/// message, then another user message.
HandshakeStatus check_handshake(std::span<const EventLogEntry> session_events);

enum class SubmitState { None, Voluntary, Forced };

struct Participant {
    WorkerId worker_id;
    AssignmentId assignment_id;
    TimeMs joined_at = 0;
    TimeMs last_heartbeat = 0;
    TimeMs waiting_anchor = 0;  // start of the current, not yet credited, waiting interval
    SubmitState submitted = SubmitState::None;

    bool present() const { return submitted == SubmitState::None; }
    bool operator==(const Participant&) const = default;
};

struct SessionRecord {
    SessionId session_id;
    UserId user_id;
    TimeMs created_at = 0;
    SessionState state = SessionState::Open;
    std::optional<CloseReason> close_reason;
    std::optional<TimeMs> closed_at;
    HandshakeStatus handshake;
    bool handshake_complete = false;
    TimeMs deadline = 0;
    std::set<WorkerId> submissions;  // voluntary only
    std::set<WorkerId> forced_submissions;
    std::optional<TimeMs> last_user_message_at;
    TimeMs handshake_timeout = 45 * kMinute;
    TimeMs idle_timeout = 15 * kMinute;

    std::vector<Participant> participants;  // join order
    std::vector<MessageId> messages;        // creation order
    std::vector<FactId> facts;              // posting order
    std::optional<HitId> hit_id;
    bool settled = false;

    bool is_open() const { return state == SessionState::Open; }
    const Participant* participant(const WorkerId& w) const;
    Participant* participant(const WorkerId& w);
    bool operator==(const SessionRecord&) const = default;
};

/// Post-handshake: last user message + idle timeout. Otherwise creation + handshake timeout.
TimeMs deadline_for(const SessionRecord& s);

void to_json(json& j, const SessionRecord& s);

}  // namespace chorus
