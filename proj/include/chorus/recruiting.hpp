#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chorus/config.hpp"
#include "chorus/core.hpp"
#include "chorus/events.hpp"

namespace chorus {

enum class AssignmentState { Unclaimed, Claimed, InConversation, InRetainer, Submitted, Expired };

std::string_view to_string(AssignmentState s);
AssignmentState assignment_state_from(std::string_view s);

/// The assignment state machine. Retainer workers move into conversations when
/// dispatched, and under-minimum workers move back to the retainer at closure.
bool is_legal_transition(AssignmentState from, AssignmentState to);

struct Assignment {
    AssignmentId assignment_id;
    HitId hit_id;
    std::optional<WorkerId> worker_id;  // set iff state is not Unclaimed/Expired
    AssignmentState state = AssignmentState::Unclaimed;
    std::optional<SessionId> session_id;  // conversation currently served, if any
    std::optional<TimeMs> claimed_at;
    std::optional<TimeMs> resolved_at;
    std::optional<TimeMs> retainer_slot_expires_at;  // converted while unclaimed
    std::vector<AssignmentState> history;            // starts with Unclaimed

    bool operator==(const Assignment&) const = default;
};

struct HitPosting {
    HitId hit_id;
    std::optional<SessionId> session_id;
    std::vector<AssignmentId> assignments;
    TimeMs posted_at = 0;
    Cents base_pay;
    std::string platform_ref;

    bool operator==(const HitPosting&) const = default;
};

struct RetainerEntry {
    WorkerId worker_id;
    AssignmentId assignment_id;
    TimeMs entered_at = 0;
    TimeMs expires_at = 0;
    int strikes = 0;
    bool operator==(const RetainerEntry&) const = default;
};

struct Ping {
    SessionId session_id;
    TimeMs sent_at = 0;
    bool operator==(const Ping&) const = default;
};

/// A closed stretch (or, while end is empty, an open one) of paid retainer waiting.
struct RetainerInterval {
    WorkerId worker_id;
    AssignmentId assignment_id;
    TimeMs start = 0;
    std::optional<TimeMs> end;
    bool operator==(const RetainerInterval&) const = default;
};

struct RetainerPool {
    std::deque<RetainerEntry> waiting;  // dispatch order: oldest first
    std::map<WorkerId, Ping> pings;
    std::map<AssignmentId, TimeMs> slots;  // unclaimed assignments converted to retainer, by expiry
    std::vector<RetainerInterval> history;

    const RetainerEntry* find(const WorkerId& w) const;
    RetainerEntry* find(const WorkerId& w);
    /// Waiting workers without an outstanding ping.
    int available() const;
    bool operator==(const RetainerPool&) const = default;
};

/// The only seam to a real crowd platform. Claims arrive inbound through
/// Engine::claim_assignment.
class CrowdPlatformAdapter {
public:
    virtual ~CrowdPlatformAdapter() = default;

    /// Returns the platform's reference for the HIT. Throws Error{PlatformUnavailable}.
    virtual std::string post_hit(HitId hit, std::span<const AssignmentId> assignments, Cents base_pay,
                                 TimeMs now) = 0;
    virtual void expire_assignment(AssignmentId assignment) = 0;
    virtual void pay_bonus(const WorkerId& worker, Cents amount) = 0;
};

/// Records calls and produces no claims; live claims come through the HTTP API.
class LoopbackPlatform : public CrowdPlatformAdapter {
public:
    std::string post_hit(HitId hit, std::span<const AssignmentId> assignments, Cents base_pay,
                         TimeMs now) override;
    void expire_assignment(AssignmentId assignment) override;
    void pay_bonus(const WorkerId& worker, Cents amount) override;

    bool available = true;
    int hits_posted = 0;
    std::vector<AssignmentId> expired;
    std::vector<std::pair<WorkerId, Cents>> bonuses;
};

/// Retainer waiting intervals reconstructed from RetainerEntered/Dispatched/Expired events.
std::vector<RetainerInterval> retainer_history(std::span<const EventLogEntry> log);

/// Pay for waiting time that overlaps [window_start, window_end), pro-rated to the
/// millisecond, plus the retainer fee; rounded to the cent once at the end.
/// Open intervals are counted up to window_end.
Cents retainer_pay_owed(std::span<const RetainerInterval> history, TimeMs window_start, TimeMs window_end,
                        const RecruitingConfig& recruiting, const FeeSchedule& fees);

/// Dynamic sizing: how many retainer workers to dispatch and how many assignments to post.
struct RecruitPlan {
    int dispatch = 0;
    int post = 0;
};
RecruitPlan plan_recruitment(const RecruitingConfig& config, int retainer_available);

void to_json(json& j, const Assignment& a);
void to_json(json& j, const HitPosting& h);

}  // namespace chorus
