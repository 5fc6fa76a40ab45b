#pragma once

#include <vector>

#include "chorus/config.hpp"
#include "chorus/core.hpp"

namespace chorus {

enum class Action { Propose, Vote, ProposalAccepted, PostFact, Waiting };

std::string_view to_string(Action a);
Action action_from(std::string_view s);

int points_for(const IncentiveConfig& config, Action a);

struct PointsEntry {
    Action action = Action::Waiting;
    int points = 0;
    TimeMs at = 0;
    bool operator==(const PointsEntry&) const = default;
};

/// Reward points of one worker in one session.
struct PointsLedger {
    SessionId session_id;
    WorkerId worker_id;
    std::vector<PointsEntry> entries;
    int total = 0;

    void add(Action action, int points, TimeMs at);
    bool operator==(const PointsLedger&) const = default;
};

/// Whole waiting intervals in `elapsed`; partial intervals earn nothing.
constexpr std::int64_t whole_intervals(TimeMs elapsed, TimeMs interval) {
    return elapsed <= 0 || interval <= 0 ? 0 : elapsed / interval;
}

/// points x rate, rounded half-up to the cent.
Cents bonus_for_points(std::int64_t points, MicroDollars per_point);

void to_json(json& j, const PointsLedger& l);

}  // namespace chorus
