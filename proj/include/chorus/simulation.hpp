#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chorus/analytics.hpp"
#include "chorus/config.hpp"
#include "chorus/engine.hpp"
#include "chorus/platform_sim.hpp"

namespace chorus {

enum class Behavior { Diligent, Confirmer, SpammerMessage, SpammerFact, SpammerVote, Idler, EarlySubmitter };
std::string_view to_string(Behavior b);
Behavior behavior_from(std::string_view s);

struct Range {
    double lo = 0;
    double hi = 0;
};

struct AgentProfile {
    Behavior behavior = Behavior::Diligent;
    int count = 1;
    std::string id_prefix;  // defaults to the behavior name
    Range first_step_s{3, 8};   // after joining
    Range step_s{5, 15};        // between decisions
    Range heartbeat_s{20, 25};
    double propose_p = 0.9;
    double vote_p = 0.7;
    double fact_p = 0.01;
    bool submits = true;
    double submit_idle_s = 180;  // user silent this long before an eligible worker leaves
    Range ping_response_s{2, 12};
    double ping_miss_p = 0.05;
};

/// Defaults that make each behavior recognizable: vote spammers vote on everything, fast.
AgentProfile profile_defaults(Behavior b);

struct TimedLine {
    TimeMs at = 0;  // from the start of the run
    std::string body;
};

struct CrowdLine {
    TimeMs at = 0;
    std::string body;
    bool accept = true;
};

/// A user who answers every delivered crowd message, then thanks the crowd and
/// goes quiet; optionally comes back for further conversations.
struct ReactiveUser {
    TimeMs start = 0;
    int turns = 3;  // replies before the closing message
    Range reply_delay_s{10, 60};
    int sessions = 1;
    Range return_gap_min{20, 40};  // after the closing message
    std::string closing = "Thanks!";
};

struct UserScript {
    UserId user_id;
    std::vector<TimedLine> messages;
    std::vector<CrowdLine> crowd_lines;  // proposed by present workers, voted through when accepted
    std::optional<ReactiveUser> reactive;
};

enum class AdminActionType { Block, Unblock };

struct AdminAction {
    TimeMs at = 0;
    AdminActionType type = AdminActionType::Block;
    UserId user_id;
    std::string reason;
};

struct Scenario {
    std::string name;
    std::string description;
    std::uint64_t seed = 1;
    TimeMs duration = kHour;
    json config_overrides = json::object();
    ClaimLatencyModel platform;
    std::vector<AgentProfile> workers;
    std::vector<UserScript> users;
    std::vector<AdminAction> admin_actions;
};

/// The published scenario format; load_scenario reads JSON, or YAML for .yaml/.yml
/// paths. Throws Error{InvalidScenario}.
Scenario scenario_from_json(const json& j);
json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);
json yaml_text_to_json(const std::string& text);

struct RunSummary {
    std::string scenario;
    std::uint64_t seed = 0;
    std::size_t events = 0;
    TimeMs ended_at = 0;
    SessionStats sessions;
    CostReport cost;
    std::vector<WorkerId> planted_spammers;  // ground truth: workers by spammer behavior
};

struct RunResult {
    EventLog log;
    SystemState final_state;
    RunSummary summary;
    Config config;
};

/// Drives the engine over a virtual clock until `duration` has passed and every
/// session has closed. Same scenario and seed, same bytes in the log.
RunResult run_scenario(const Scenario& scenario, std::optional<std::uint64_t> seed_override = std::nullopt);

void to_json(json& j, const RunSummary& s);

// ---------------------------------------------------------------------------
// Agents

enum class AgentActionType { Propose, Vote, PostFact, Submit };

struct AgentAction {
    AgentActionType type = AgentActionType::Propose;
    std::string body;
    MessageId message;
    bool operator==(const AgentAction&) const = default;
};

/// What an agent sees of its session when it decides.
struct Observation {
    SessionId session;
    WorkerId self;
    TimeMs now = 0;
    std::vector<ChatMessage> messages;  // chronological
    int points = 0;
    int min_points = 40;
    TimeMs last_user_message_at = 0;
};

Observation observe(const Engine& engine, SessionId session, const WorkerId& worker, TimeMs now);

/// One decision of a scripted agent. Random choices come from `rng`.
std::vector<AgentAction> scripted_step(const AgentProfile& agent, const Observation& obs, std::mt19937_64& rng);

/// Text pools the agents draw from.
const std::vector<std::string>& vague_replies();
const std::vector<std::string>& helpful_replies();
const std::vector<std::string>& fact_notes();
inline constexpr const char* kConfirmationQuestion = "Is there anything else I can help you with?";

// ---------------------------------------------------------------------------
// Corpora and fuzzing

struct CorpusTargets {
    double duration_mean_min = 10.63, duration_sd_min = 8.38;
    double messages_mean = 25.87, messages_sd = 27.27;
    double user_mean = 7.82, user_sd = 7.83;
    double crowd_mean = 18.22, crowd_sd = 20.67;
    double rejected_mean = 1.93, rejected_sd = 6.42;
    int sessions = 320;
    int period_days = 31;
};

/// A scenario whose sessions follow the targets in expectation: per-session message
/// counts are negative-binomial, durations gamma, timings uniform within a session.
/// Throws Error{InfeasibleTargets}.
Scenario generate_corpus(const CorpusTargets& targets, std::uint64_t seed);

/// A random but valid scenario, for protocol fuzzing.
Scenario random_scenario(std::uint64_t seed);

/// Spam-detection corpus: mostly diligent crowds with planted spammers of each kind.
Scenario spam_corpus(int sessions, std::uint64_t seed);

/// Many one-question conversations against a platform whose first-claim latency is
/// fitted to `quantiles` (seconds to first crowd response). `offset_s` is the
/// expected agent time between joining and the first accepted reply.
Scenario latency_scenario(int sessions, std::span<const QuantilePoint> quantiles, double offset_s, std::uint64_t seed);

/// What went wrong with one run: invariant violations, a replay that disagrees
/// with the live state, or a second run with the same seed that wrote different bytes.
struct RunCheck {
    std::string scenario;
    std::uint64_t seed = 0;
    std::size_t events = 0;
    std::vector<std::string> violations;
    bool replay_matches = true;
    bool deterministic = true;
    bool ok() const { return violations.empty() && replay_matches && deterministic; }
};

RunCheck check_run(const Scenario& scenario, std::optional<std::uint64_t> seed_override = std::nullopt);

struct FuzzReport {
    int runs = 0;
    int failed = 0;
    std::size_t events = 0;
    std::vector<RunCheck> failures;  // at most the first 20
};

/// Runs random_scenario(seed + i) for i in [0, runs).
FuzzReport fuzz(int runs, std::uint64_t seed);

void to_json(json& j, const RunCheck& c);
void to_json(json& j, const FuzzReport& r);

}  // namespace chorus
