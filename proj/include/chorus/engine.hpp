#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chorus/config.hpp"
#include "chorus/events.hpp"
#include "chorus/state.hpp"

namespace chorus {

enum class IngestStatus { Routed, SessionOpened, Dropped };
std::string_view to_string(IngestStatus s);

struct IngestResult {
    IngestStatus status = IngestStatus::Routed;
    std::optional<SessionId> session_id;
    std::optional<MessageId> message_id;
    std::vector<std::string> auto_replies;  // in the order sent to the user
    std::optional<std::string> recruit_error;
};

struct DeliveryReceipt {
    MessageId message_id;
    UserId user_id;
    std::string body;
    TimeMs delivered_at = 0;
};

struct SubmissionResult {
    SessionId session_id;
    WorkerId worker_id;
    int voluntary_submissions = 0;
    bool session_closed = false;
    std::vector<WorkerId> force_submitted;
};

enum class ClaimOutcome { JoinedConversation, EnteredRetainer };

struct ClaimResult {
    ClaimOutcome outcome = ClaimOutcome::JoinedConversation;
    std::optional<SessionId> session_id;
};

/// The protocol engine. Every command validates against the current state, emits
/// events, and folds them through `apply`; nothing else mutates the state, so
/// `replay(log())` always equals `state()`.
///
/// Not thread-safe: callers serialize commands (the simulator is single-threaded,
/// the HTTP server holds one lock).
class Engine {
public:
    explicit Engine(Config config = {}, CrowdPlatformAdapter* platform = nullptr);

    /// Continue from an existing log (e.g. after a restart).
    static Engine restore(Config config, EventLog log, CrowdPlatformAdapter* platform = nullptr);

    const Config& config() const { return config_; }
    const SystemState& state() const { return state_; }
    const EventLog& log() const { return log_; }

    /// Called after each appended event (persistence, push streams, the simulator).
    void set_event_sink(std::function<void(const EventLogEntry&)> sink) { sink_ = std::move(sink); }
    /// Called once per delivered message; stands in for the user's chat connection.
    void set_delivery_sink(std::function<void(const DeliveryReceipt&)> sink) {
        delivery_sink_ = std::move(sink);
    }
    void set_platform(CrowdPlatformAdapter* platform) { platform_ = platform; }

    // -- gateway ---------------------------------------------------------
    IngestResult handle_inbound_user_message(const UserId& user, const std::string& body, TimeMs now);
    DeliveryReceipt deliver_accepted_message(MessageId message, TimeMs now);
    UserAccount block_user(const UserId& user, const std::string& reason, const std::string& admin_token,
                           TimeMs now);
    UserAccount unblock_user(const UserId& user, const std::string& admin_token, TimeMs now);
    void file_report(const WorkerId& reporter, SessionId session, std::vector<int> message_indices,
                     std::vector<int> fact_indices, const std::string& note, TimeMs now);

    // -- session lifecycle -----------------------------------------------
    SessionRecord open_session(const UserId& user, const std::string& first_message, TimeMs now);
    TimeMs recompute_deadline(SessionId session, TimeMs now) const;
    SubmissionResult submit_hit(SessionId session, const WorkerId& worker, TimeMs now);
    /// Closes every open session whose deadline has been reached, and processes
    /// missed pings and expired retainer entries. Returns the sessions it closed.
    std::vector<SessionId> tick(TimeMs now);

    // -- consensus -------------------------------------------------------
    ChatMessage propose_message(SessionId session, const WorkerId& worker, const std::string& body, TimeMs now);
    ChatMessage vote_message(SessionId session, const WorkerId& worker, MessageId message, TimeMs now);
    MessageStatus evaluate_acceptance(MessageId message, TimeMs now);
    FactEntry post_fact(SessionId session, const WorkerId& worker, const std::string& body, TimeMs now);
    void heartbeat(SessionId session, const WorkerId& worker, TimeMs now);
    int active_count(SessionId session, TimeMs now) const;
    ActiveWorkerRoster roster(SessionId session) const;
    WorkerView render_worker_view(SessionId session, const WorkerId& worker) const;

    // -- incentives ------------------------------------------------------
    PointsLedger award_action(SessionId session, const WorkerId& worker, Action action, TimeMs now);
    std::vector<PointsLedger> accrue_waiting(SessionId session, TimeMs now);
    bool eligible_to_submit(SessionId session, const WorkerId& worker) const;
    std::map<WorkerId, Cents> settle_bonus(SessionId session, TimeMs now);

    // -- recruiting ------------------------------------------------------
    HitPosting recruit_for_session(SessionId session, TimeMs now);
    std::vector<Assignment> convert_to_retainer(SessionId session, TimeMs now);
    std::vector<WorkerId> dispatch_from_retainer(SessionId session, TimeMs now);
    ClaimResult claim_assignment(AssignmentId assignment, const WorkerId& worker, TimeMs now);
    /// A pinged retainer worker answers. True if they joined within the promise.
    bool respond_to_ping(const WorkerId& worker, TimeMs now);

private:
    void emit(TimeMs at, EventKind kind, std::optional<SessionId> session, json payload);
    void advance_clock(TimeMs now);
    const SessionRecord& open_session_or_throw(SessionId session) const;
    const SessionRecord& session_or_throw(SessionId session) const;
    const Participant& present_participant_or_throw(const SessionRecord& s, const WorkerId& worker) const;
    void ingest_into_session(SessionId session, const UserId& user, const std::string& body, TimeMs now,
                             IngestResult* result);
    SessionRecord open_session_unchecked(const UserId& user, const std::string& body, TimeMs now,
                                         IngestResult* result);
    std::vector<PointsLedger> credit_waiting(SessionId session, TimeMs now);
    void award(SessionId session, const WorkerId& worker, Action action, int points, TimeMs now);
    void accept_if_reached(MessageId message, TimeMs now);
    void close_session(SessionId session, CloseReason reason, TimeMs now, const char* cause);
    void ping_waiting_workers(SessionId session, int count, TimeMs now, const WorkerId* exclude = nullptr);
    std::string choose_reply(const std::vector<std::string>& pool, std::uint64_t salt) const;

    Config config_;
    CrowdPlatformAdapter* platform_ = nullptr;
    SystemState state_;
    EventLog log_;
    std::function<void(const EventLogEntry&)> sink_;
    std::function<void(const DeliveryReceipt&)> delivery_sink_;
};

void to_json(json& j, const IngestResult& r);
void to_json(json& j, const SubmissionResult& r);
void to_json(json& j, const DeliveryReceipt& r);

}  // namespace chorus
