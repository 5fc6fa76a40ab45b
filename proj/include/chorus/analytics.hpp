#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "chorus/config.hpp"
#include "chorus/core.hpp"
#include "chorus/events.hpp"

namespace chorus {

// ---------------------------------------------------------------------------
// Cost

/// n × base_pay plus the platform fee for an n-assignment HIT, rounded half-up once.
/// Throws Error{NegativeAssignments}.
Cents hit_base_cost(int n_assignments, Cents base_pay, const FeeSchedule& fees = {});

struct HitCost {
    std::optional<HitId> hit_id;  // empty: a conversation staffed only from the retainer
    std::optional<SessionId> session_id;
    int n_assignments = 0;
    Cents base;
    Cents fee;        // HIT fee plus bonus commission
    Cents base_cost;  // base plus the HIT fee, as hit_base_cost
    Cents bonus;
    Cents total;
};

struct CostReport {
    std::vector<HitCost> per_hit;
    Cents base;
    Cents fee;
    Cents bonus;
    Cents base_cost;  // rewards plus HIT fees
    Cents grand;     // sum of per_hit totals
    Cents retainer;  // waiting pay with its fee, outside per_hit
    Cents overall;   // grand + retainer
    Cents per_day;   // base_cost / period_days; bonuses and retainer excluded
    int period_days = 0;
    std::string per_day_basis = "base_cost";
};

/// Every posted assignment is charged: the platform escrows the full reward when
/// the HIT is posted. period_days <= 0 derives the period from the log's span.
CostReport deployment_cost_summary(std::span<const EventLogEntry> log, int period_days, const Config& config = {});

// ---------------------------------------------------------------------------
// Sessions

struct Histogram {
    double bin_width = 1;
    std::vector<int> counts;  // counts[i] covers [i*w, (i+1)*w)
    int overflow = 0;         // at or beyond counts.size()*w
    int total() const;
};

struct SessionStats {
    int n_sessions = 0;
    double duration_mean = 0, duration_sd = 0;  // minutes
    double messages_mean = 0, messages_sd = 0;  // user + accepted crowd
    double user_messages_mean = 0, user_messages_sd = 0;
    double crowd_messages_mean = 0, crowd_messages_sd = 0;
    double rejected_mean = 0, rejected_sd = 0;
    double share_at_most_10_min = 0;
    Histogram duration_histogram;  // 5-minute bins
    Histogram message_histogram;   // 10-message bins
    Histogram latency_histogram;   // 30-second bins, responded sessions only
    int n_with_response = 0;
    double first_response_mean = 0;             // seconds
    std::map<int, double> first_response_quantiles;  // percentile -> seconds, nearest rank
    double within_30s = 0, within_60s = 0, within_120s = 0;  // share of responded sessions
};

/// Per-session numbers the statistics are built from.
struct SessionFigures {
    SessionId session_id;
    TimeMs created_at = 0;
    TimeMs duration = 0;  // last chat message minus creation
    int user_messages = 0;
    int crowd_messages = 0;  // accepted proposals
    int rejected = 0;        // proposals never accepted
    std::optional<TimeMs> first_response;
};

std::vector<SessionFigures> session_figures(std::span<const EventLogEntry> log);
SessionStats session_statistics(std::span<const EventLogEntry> log);

/// Nearest-rank percentile of an unsorted sample; p in (0, 100].
double nearest_rank(std::vector<double> sample, double p);

// ---------------------------------------------------------------------------
// Workers

enum class QualityFlag { MessageSpammer, FactSpammer, VoteSpammer };
std::string_view to_string(QualityFlag f);

struct QualityThresholds {
    int min_proposals = 10;
    double min_acceptance_ratio = 0.6;
    int min_facts = 10;
    double duplicate_share = 0.8;
    double near_duplicate_distance = 0.2;  // normalized edit distance
    double max_median_fact_length = 2;
    double vote_coverage = 0.9;
    int vote_sessions = 2;
    int min_vote_opportunities = 5;  // per session, to count it at all
};

struct WorkerQuality {
    WorkerId worker_id;
    int sessions = 0;
    int proposals = 0;
    int accepted = 0;
    std::optional<double> acceptance_ratio;
    int fact_posts = 0;
    double fact_spam_score = 0;  // share of facts with a near-duplicate
    double median_fact_length = 0;
    int vote_count = 0;
    double vote_rate_per_minute = 0;
    int high_coverage_sessions = 0;
    std::set<QualityFlag> flags;
};

std::vector<WorkerQuality> worker_quality(std::span<const EventLogEntry> log, const QualityThresholds& t = {});

/// Levenshtein distance over bytes, divided by the longer length (0 for two empty strings).
double normalized_edit_distance(std::string_view a, std::string_view b);

void to_json(json& j, const HitCost& c);
void to_json(json& j, const CostReport& r);
void to_json(json& j, const Histogram& h);
void to_json(json& j, const SessionStats& s);
void to_json(json& j, const WorkerQuality& w);

}  // namespace chorus
