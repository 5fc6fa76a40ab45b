#include "chorus/incentives.hpp"

#include "chorus/engine.hpp"

namespace chorus {

std::string_view to_string(Action a) {
    switch (a) {
        case Action::Propose: return "propose";
        case Action::Vote: return "vote";
        case Action::ProposalAccepted: return "proposal_accepted";
        case Action::PostFact: return "post_fact";
        case Action::Waiting: return "waiting";
    }
    return "unknown";
}

Action action_from(std::string_view s) {
    if (s == "propose") return Action::Propose;
    if (s == "vote") return Action::Vote;
    if (s == "proposal_accepted") return Action::ProposalAccepted;
    if (s == "post_fact") return Action::PostFact;
    if (s == "waiting") return Action::Waiting;
    throw Error(ErrorCode::CorruptLog, "unknown action '" + std::string(s) + "'");
}

int points_for(const IncentiveConfig& c, Action a) {
    switch (a) {
        case Action::Propose: return c.propose_points;
        case Action::Vote: return c.vote_points;
        case Action::ProposalAccepted: return c.proposal_accepted_points;
        case Action::PostFact: return c.post_fact_points;
        case Action::Waiting: return c.waiting_points;
    }
    return 0;
}

void PointsLedger::add(Action action, int points, TimeMs at) {
    entries.push_back(PointsEntry{action, points, at});
    total += points;
}

Cents bonus_for_points(std::int64_t points, MicroDollars per_point) {
    return Cents{div_round_half_up(points * per_point.value, 10'000)};
}

void to_json(json& j, const PointsLedger& l) {
    json entries = json::array();
    for (const auto& e : l.entries) entries.push_back({{"action", to_string(e.action)}, {"points", e.points}, {"at", e.at}});
    j = json{{"session_id", l.session_id}, {"worker_id", l.worker_id}, {"total", l.total}, {"entries", entries}};
}

// ---------------------------------------------------------------------------
// Engine: points and bonuses

void Engine::award(SessionId session, const WorkerId& worker, Action action, int points, TimeMs now) {
    emit(now, EventKind::PointsAwarded, session,
         json{{"worker_id", worker}, {"action", to_string(action)}, {"points", points}});
}

PointsLedger Engine::award_action(SessionId session, const WorkerId& worker, Action action, TimeMs now) {
    advance_clock(now);
    tick(now);
    const SessionRecord& s = open_session_or_throw(session);
    present_participant_or_throw(s, worker);
    award(session, worker, action, points_for(config_.incentives, action), now);
    return *state_.ledger(session, worker);
}

std::vector<PointsLedger> Engine::accrue_waiting(SessionId session, TimeMs now) {
    advance_clock(now);
    tick(now);
    return credit_waiting(session, now);
}

std::vector<PointsLedger> Engine::credit_waiting(SessionId session, TimeMs now) {
    const SessionRecord& s = session_or_throw(session);
    if (!s.is_open()) return {};

    const TimeMs interval = config_.incentives.waiting_interval;
    const TimeMs window = config_.consensus.heartbeat_window;
    std::vector<std::pair<WorkerId, TimeMs>> due;  // worker, new anchor
    std::vector<std::int64_t> counts;
    for (const auto& p : s.participants) {
        if (!p.present() || now - p.last_heartbeat > window) continue;
        const std::int64_t k = whole_intervals(now - p.waiting_anchor, interval);
        if (k <= 0) continue;
        due.emplace_back(p.worker_id, p.waiting_anchor + k * interval);
        counts.push_back(k);
    }

    std::vector<PointsLedger> updated;
    for (std::size_t i = 0; i < due.size(); ++i) {
        const auto& [worker, anchor] = due[i];
        emit(now, EventKind::PointsAwarded, session,
             json{{"worker_id", worker},
                  {"action", to_string(Action::Waiting)},
                  {"points", counts[i] * config_.incentives.waiting_points},
                  {"intervals", counts[i]},
                  {"waiting_anchor", anchor}});
        updated.push_back(*state_.ledger(session, worker));
    }
    return updated;
}

bool Engine::eligible_to_submit(SessionId session, const WorkerId& worker) const {
    const SessionRecord& s = session_or_throw(session);
    if (s.participant(worker) == nullptr) throw Error(ErrorCode::NotAParticipant, worker);
    return state_.points(session, worker) >= config_.incentives.min_points_to_submit;
}

std::map<WorkerId, Cents> Engine::settle_bonus(SessionId session, TimeMs now) {
    const SessionRecord& s = session_or_throw(session);
    if (s.is_open()) throw Error(ErrorCode::SessionStillOpen, "session " + std::to_string(session.value));
    if (s.settled) return state_.settlements.at(session);
    advance_clock(now);

    std::map<WorkerId, Cents> bonuses;
    for (const auto& p : s.participants)
        bonuses[p.worker_id] = bonus_for_points(state_.points(session, p.worker_id), config_.incentives.bonus_per_point);
    json payload = json::object();
    std::int64_t total = 0;
    for (const auto& [w, c] : bonuses) {
        payload[w] = c.value;
        total += c.value;
    }
    emit(now, EventKind::BonusSettled, session, json{{"bonuses", payload}, {"total_cents", total}});
    for (const auto& [w, c] : bonuses)
        if (c.value > 0) platform_->pay_bonus(w, c);
    return bonuses;
}

}  // namespace chorus
