#include "chorus/recruiting.hpp"

#include <algorithm>

#include "chorus/engine.hpp"

namespace chorus {

std::string_view to_string(AssignmentState s) {
    switch (s) {
        case AssignmentState::Unclaimed: return "unclaimed";
        case AssignmentState::Claimed: return "claimed";
        case AssignmentState::InConversation: return "in_conversation";
        case AssignmentState::InRetainer: return "in_retainer";
        case AssignmentState::Submitted: return "submitted";
        case AssignmentState::Expired: return "expired";
    }
    return "unknown";
}

AssignmentState assignment_state_from(std::string_view s) {
    for (auto st : {AssignmentState::Unclaimed, AssignmentState::Claimed, AssignmentState::InConversation,
                    AssignmentState::InRetainer, AssignmentState::Submitted, AssignmentState::Expired})
        if (to_string(st) == s) return st;
    throw Error(ErrorCode::CorruptLog, "unknown assignment state '" + std::string(s) + "'");
}

bool is_legal_transition(AssignmentState from, AssignmentState to) {
    using S = AssignmentState;
    switch (from) {
        case S::Unclaimed: return to == S::Claimed || to == S::Expired;
        case S::Claimed: return to == S::InConversation || to == S::InRetainer;
        case S::InConversation: return to == S::Submitted || to == S::InRetainer;
        case S::InRetainer: return to == S::InConversation || to == S::Expired;
        case S::Submitted:
        case S::Expired: return false;
    }
    return false;
}

const RetainerEntry* RetainerPool::find(const WorkerId& w) const {
    for (const auto& r : waiting)
        if (r.worker_id == w) return &r;
    return nullptr;
}

RetainerEntry* RetainerPool::find(const WorkerId& w) {
    for (auto& r : waiting)
        if (r.worker_id == w) return &r;
    return nullptr;
}

int RetainerPool::available() const {
    int n = 0;
    for (const auto& r : waiting) n += pings.contains(r.worker_id) ? 0 : 1;
    return n;
}

std::string LoopbackPlatform::post_hit(HitId hit, std::span<const AssignmentId>, Cents, TimeMs) {
    if (!available) throw Error(ErrorCode::PlatformUnavailable, "loopback platform disabled");
    ++hits_posted;
    return "loopback-" + std::to_string(hit.value);
}

void LoopbackPlatform::expire_assignment(AssignmentId assignment) { expired.push_back(assignment); }

void LoopbackPlatform::pay_bonus(const WorkerId& worker, Cents amount) { bonuses.emplace_back(worker, amount); }

std::vector<RetainerInterval> retainer_history(std::span<const EventLogEntry> log) {
    std::vector<RetainerInterval> out;
    auto close = [&](const WorkerId& w, TimeMs at) {
        for (auto it = out.rbegin(); it != out.rend(); ++it)
            if (it->worker_id == w && !it->end) {
                it->end = at;
                return;
            }
    };
    for (const auto& e : log) {
        const auto worker = e.payload.find("worker_id");
        const bool has_worker = worker != e.payload.end() && !worker->is_null();
        switch (e.kind) {
            case EventKind::RetainerEntered:
                if (has_worker)
                    out.push_back(RetainerInterval{worker->get<WorkerId>(),
                                                   AssignmentId{e.payload.at("assignment_id").get<std::uint64_t>()},
                                                   e.at, std::nullopt});
                break;
            case EventKind::RetainerDispatched:
            case EventKind::RetainerExpired:
                if (has_worker) close(worker->get<WorkerId>(), e.at);
                break;
            default: break;
        }
    }
    return out;
}

Cents retainer_pay_owed(std::span<const RetainerInterval> history, TimeMs window_start, TimeMs window_end,
                        const RecruitingConfig& recruiting, const FeeSchedule& fees) {
    std::int64_t waited = 0;
    for (const auto& r : history) {
        const TimeMs start = std::max(r.start, window_start);
        const TimeMs end = std::min(r.end.value_or(window_end), window_end);
        if (end > start) waited += end - start;
    }
    const std::int64_t numerator = waited * recruiting.retainer_rate.value * (100 + fees.retainer_percent);
    return Cents{div_round_half_up(numerator, recruiting.retainer_rate_interval * 100)};
}

RecruitPlan plan_recruitment(const RecruitingConfig& config, int retainer_available) {
    const int target = std::max(0, config.target_crowd_size);
    if (config.policy == RecruitPolicy::Static) return RecruitPlan{0, std::min(target, config.platform_max_assignments)};
    const int dispatch = std::clamp(retainer_available, 0, target);
    return RecruitPlan{dispatch, std::min(target - dispatch, config.platform_max_assignments)};
}

void to_json(json& j, const Assignment& a) {
    json history = json::array();
    for (auto s : a.history) history.push_back(to_string(s));
    j = json{{"assignment_id", a.assignment_id},
             {"hit_id", a.hit_id},
             {"worker_id", a.worker_id ? json(*a.worker_id) : json(nullptr)},
             {"state", to_string(a.state)},
             {"session_id", a.session_id ? json(a.session_id->value) : json(nullptr)},
             {"history", history}};
}

void to_json(json& j, const HitPosting& h) {
    j = json{{"hit_id", h.hit_id},
             {"session_id", h.session_id ? json(h.session_id->value) : json(nullptr)},
             {"assignments", h.assignments},
             {"posted_at", h.posted_at},
             {"base_pay_cents", h.base_pay},
             {"platform_ref", h.platform_ref}};
}

// ---------------------------------------------------------------------------
// Engine: HITs, claims and the retainer

void Engine::ping_waiting_workers(SessionId session, int count, TimeMs now, const WorkerId* exclude) {
    std::vector<RetainerEntry> chosen;
    for (const auto& r : state_.retainer.waiting) {
        if (static_cast<int>(chosen.size()) >= count) break;
        if (exclude != nullptr && r.worker_id == *exclude) continue;
        if (!state_.retainer.pings.contains(r.worker_id)) chosen.push_back(r);
    }
    for (const auto& r : chosen)
        emit(now, EventKind::RetainerPinged, session,
             json{{"worker_id", r.worker_id},
                  {"assignment_id", r.assignment_id},
                  {"respond_by", now + config_.recruiting.dispatch_promise}});
}

HitPosting Engine::recruit_for_session(SessionId session, TimeMs now) {
    advance_clock(now);
    tick(now);
    open_session_or_throw(session);
    const RecruitPlan plan = plan_recruitment(config_.recruiting, state_.retainer.available());
    ping_waiting_workers(session, plan.dispatch, now);
    if (plan.post <= 0) return HitPosting{HitId{}, session, {}, now, config_.recruiting.base_pay, ""};

    const HitId hit{state_.next_hit};
    std::vector<AssignmentId> ids;
    for (int i = 0; i < plan.post; ++i) ids.push_back(AssignmentId{state_.next_assignment + i});
    const std::string ref = platform_->post_hit(hit, ids, config_.recruiting.base_pay, now);
    emit(now, EventKind::HitPosted, session,
         json{{"hit_id", hit},
              {"n_assignments", plan.post},
              {"assignment_ids", ids},
              {"base_pay_cents", config_.recruiting.base_pay},
              {"platform_ref", ref},
              {"dispatched", plan.dispatch},
              {"target", config_.recruiting.target_crowd_size},
              {"policy", config_.recruiting.policy == RecruitPolicy::Static ? "static" : "dynamic"}});
    return state_.hits.at(hit);
}

std::vector<Assignment> Engine::convert_to_retainer(SessionId session, TimeMs now) {
    const SessionRecord& s = session_or_throw(session);
    if (s.is_open()) throw Error(ErrorCode::SessionStillOpen, "session " + std::to_string(session.value));
    advance_clock(now);
    const TimeMs expires = now + config_.recruiting.retainer_duration;

    std::vector<AssignmentId> unclaimed;
    if (s.hit_id)
        for (AssignmentId a : state_.hits.at(*s.hit_id).assignments) {
            const Assignment& asg = state_.assignments.at(a);
            if (asg.state == AssignmentState::Unclaimed && !asg.retainer_slot_expires_at) unclaimed.push_back(a);
        }
    // Force-submitted workers below the minimum whose assignment is still in this conversation.
    std::vector<std::pair<WorkerId, AssignmentId>> returning;
    for (const auto& p : s.participants) {
        const Assignment& asg = state_.assignments.at(p.assignment_id);
        if (p.submitted == SubmitState::Forced && asg.state == AssignmentState::InConversation &&
            asg.session_id == session)
            returning.emplace_back(p.worker_id, p.assignment_id);
    }

    std::vector<Assignment> converted;
    for (AssignmentId a : unclaimed) {
        emit(now, EventKind::RetainerEntered, session,
             json{{"assignment_id", a}, {"worker_id", nullptr}, {"expires_at", expires}, {"source", "unclaimed"}});
        converted.push_back(state_.assignments.at(a));
    }
    for (const auto& [w, a] : returning) {
        emit(now, EventKind::RetainerEntered, session,
             json{{"assignment_id", a}, {"worker_id", w}, {"expires_at", expires}, {"source", "under_minimum"}});
        converted.push_back(state_.assignments.at(a));
    }
    return converted;
}

std::vector<WorkerId> Engine::dispatch_from_retainer(SessionId session, TimeMs now) {
    advance_clock(now);
    tick(now);
    const SessionRecord& s = open_session_or_throw(session);
    int present = 0;
    for (const auto& p : s.participants) present += p.present() ? 1 : 0;
    int pinged = 0;
    for (const auto& [w, ping] : state_.retainer.pings) pinged += ping.session_id == session ? 1 : 0;
    const int needed = config_.recruiting.target_crowd_size - present - pinged;

    const std::uint64_t before = log_.last_seq();
    if (needed > 0) ping_waiting_workers(session, needed, now);
    std::vector<WorkerId> out;
    for (const auto& e : log_.since(before))
        if (e.kind == EventKind::RetainerPinged) out.push_back(e.payload.at("worker_id").get<WorkerId>());
    return out;
}

ClaimResult Engine::claim_assignment(AssignmentId assignment, const WorkerId& worker, TimeMs now) {
    advance_clock(now);
    tick(now);
    const auto it = state_.assignments.find(assignment);
    if (it == state_.assignments.end())
        throw Error(ErrorCode::UnknownAssignment, "assignment " + std::to_string(assignment.value));
    const Assignment& a = it->second;
    if (a.state != AssignmentState::Unclaimed)
        throw Error(ErrorCode::AssignmentUnavailable, "assignment " + std::to_string(assignment.value) + " is " +
                                                          std::string(to_string(a.state)));
    if (state_.worker_session.contains(worker) || state_.retainer.find(worker) != nullptr)
        throw Error(ErrorCode::WorkerBusy, worker);

    if (a.retainer_slot_expires_at) {
        const TimeMs expires = *a.retainer_slot_expires_at;
        emit(now, EventKind::AssignmentClaimed, std::nullopt,
             json{{"assignment_id", assignment}, {"worker_id", worker}, {"joins", "retainer"}});
        emit(now, EventKind::RetainerEntered, std::nullopt,
             json{{"assignment_id", assignment}, {"worker_id", worker}, {"expires_at", expires}, {"source", "claim"}});
        return ClaimResult{ClaimOutcome::EnteredRetainer, std::nullopt};
    }
    const HitPosting& hit = state_.hits.at(a.hit_id);
    if (!hit.session_id || !state_.session(*hit.session_id)->is_open())
        throw Error(ErrorCode::AssignmentUnavailable, "conversation already closed");
    const SessionId session = *hit.session_id;
    emit(now, EventKind::AssignmentClaimed, session,
         json{{"assignment_id", assignment}, {"worker_id", worker}, {"joins", "conversation"}});
    return ClaimResult{ClaimOutcome::JoinedConversation, session};
}

bool Engine::respond_to_ping(const WorkerId& worker, TimeMs now) {
    advance_clock(now);
    const auto it = state_.retainer.pings.find(worker);
    if (it == state_.retainer.pings.end()) throw Error(ErrorCode::NoPendingPing, worker);
    const bool on_time = now - it->second.sent_at <= config_.recruiting.dispatch_promise;
    tick(now);
    if (!on_time) return false;

    const auto ping = state_.retainer.pings.find(worker);
    if (ping == state_.retainer.pings.end()) return false;  // the conversation closed meanwhile
    const SessionId session = ping->second.session_id;
    const AssignmentId a = state_.retainer.find(worker)->assignment_id;
    emit(now, EventKind::RetainerDispatched, session, json{{"worker_id", worker}, {"assignment_id", a}});
    return true;
}

}  // namespace chorus
