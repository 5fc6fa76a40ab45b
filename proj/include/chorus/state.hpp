#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chorus/consensus.hpp"
#include "chorus/events.hpp"
#include "chorus/incentives.hpp"
#include "chorus/lifecycle.hpp"
#include "chorus/recruiting.hpp"

namespace chorus {

struct UserAccount {
    UserId user_id;
    std::string display_alias;
    TimeMs first_seen_at = 0;
    bool blocked = false;
    std::optional<TimeMs> blocked_at;
    std::optional<std::string> blocked_reason;
    std::vector<SessionId> sessions;

    bool operator==(const UserAccount&) const = default;
};

struct IssueReport {
    WorkerId reporter;
    SessionId session_id;
    std::vector<int> message_indices;
    std::vector<int> fact_indices;
    std::string note;
    TimeMs at = 0;
    bool operator==(const IssueReport&) const = default;
};

/// Everything the service knows. Only `apply` mutates it.
struct SystemState {
    std::map<UserId, UserAccount> users;
    std::map<UserId, SessionId> open_session_by_user;
    std::map<SessionId, SessionRecord> sessions;
    std::map<MessageId, ChatMessage> messages;
    std::map<FactId, FactEntry> facts;
    std::map<std::pair<SessionId, WorkerId>, PointsLedger> ledgers;
    std::map<SessionId, std::map<WorkerId, Cents>> settlements;
    std::map<HitId, HitPosting> hits;
    std::map<AssignmentId, Assignment> assignments;
    RetainerPool retainer;
    std::map<WorkerId, SessionId> worker_session;  // conversation a worker currently serves
    std::map<MessageId, TimeMs> deliveries;
    std::vector<IssueReport> reports;

    std::uint64_t next_session = 1;
    std::uint64_t next_message = 1;
    std::uint64_t next_fact = 1;
    std::uint64_t next_hit = 1;
    std::uint64_t next_assignment = 1;
    std::uint64_t last_seq = 0;
    TimeMs last_at = 0;

    bool operator==(const SystemState&) const = default;

    const SessionRecord* session(SessionId id) const;
    const ChatMessage* message(MessageId id) const;
    const PointsLedger* ledger(SessionId s, const WorkerId& w) const;
    int points(SessionId s, const WorkerId& w) const;
};

/// Folds one event into the state. Deterministic: depends only on the state and the entry.
void apply(SystemState& state, const EventLogEntry& entry);

/// Rebuilds the state from a log. Throws Error{CorruptLog} on a sequence gap or
/// decreasing seq.
SystemState replay(std::span<const EventLogEntry> log);

/// Structural summary for diagnostics and the CLI.
json summarize(const SystemState& state);

}  // namespace chorus
