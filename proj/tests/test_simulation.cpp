#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "chorus/simulation.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace chorus;
using testing_support::error_of;

namespace {

std::string scenario_dir() { return std::string(CHORUS_SOURCE_DIR) + "/scenarios"; }

std::vector<std::string> shipped_scenarios() {
    std::vector<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(scenario_dir())) out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

json minimal() {
    return json::parse(R"({
        "name": "t", "seed": 3, "duration_min": 30,
        "workers": [{"behavior": "diligent", "count": 3}],
        "users": [{"user_id": "u", "messages": [{"at_s": 0, "body": "hi"}]}]
    })");
}

}  // namespace

TEST(ScenarioFormat, RoundTripsThroughJson) {
    const Scenario s = scenario_from_json(minimal());
    EXPECT_EQ(s.name, "t");
    EXPECT_EQ(s.seed, 3u);
    EXPECT_EQ(s.duration, 30 * kMinute);
    ASSERT_EQ(s.workers.size(), 1u);
    EXPECT_EQ(s.workers[0].behavior, Behavior::Diligent);
    EXPECT_EQ(s.workers[0].count, 3);
    EXPECT_EQ(scenario_to_json(scenario_from_json(scenario_to_json(s))), scenario_to_json(s));
}

TEST(ScenarioFormat, YamlAndJsonAgree) {
    const json from_yaml = yaml_text_to_json(R"(
name: t
seed: 3
duration_min: 30
workers:
  - {behavior: diligent, count: 3}
users:
  - user_id: u
    messages:
      - {at_s: 0, body: hi}
)");
    EXPECT_EQ(scenario_to_json(scenario_from_json(from_yaml)), scenario_to_json(scenario_from_json(minimal())));
}

TEST(ScenarioFormat, RejectsBadInput) {
    auto bad = [](const std::function<void(json&)>& edit) {
        json j = minimal();
        edit(j);
        return error_of([&] { scenario_from_json(j); });
    };
    EXPECT_EQ(bad([](json& j) { j["workers"][0]["behavior"] = "saboteur"; }), ErrorCode::InvalidScenario);
    EXPECT_EQ(bad([](json& j) { j["workers"][0]["count"] = -1; }), ErrorCode::InvalidScenario);
    EXPECT_EQ(bad([](json& j) { j["surprise"] = 1; }), ErrorCode::InvalidScenario);
    EXPECT_EQ(bad([](json& j) { j["seed"] = "three"; }), ErrorCode::InvalidScenario);
    EXPECT_EQ(bad([](json& j) { j["users"][0]["messages"][0]["body"] = ""; }), ErrorCode::InvalidScenario);
    EXPECT_EQ(bad([](json& j) { j.erase("users"); j.erase("workers"); j["duration_min"] = -5; }),
              ErrorCode::InvalidScenario);
    EXPECT_EQ(error_of([] { yaml_text_to_json("a: [1, 2"); }), ErrorCode::InvalidScenario);
    EXPECT_EQ(error_of([] { load_scenario("/nonexistent/scenario.json"); }), ErrorCode::InvalidScenario);
}

TEST(ScenarioFormat, EveryShippedScenarioLoads) {
    const auto files = shipped_scenarios();
    EXPECT_GE(files.size(), 9u);
    for (const auto& f : files) EXPECT_NO_THROW(load_scenario(f)) << f;
}

TEST(Simulation, EveryShippedScenarioReplaysAndIsDeterministic) {
    for (const auto& f : shipped_scenarios()) {
        const RunCheck c = check_run(load_scenario(f));
        EXPECT_TRUE(c.ok()) << f << ": " << json(c).dump();
        EXPECT_GT(c.events, 0u);
    }
}

TEST(Simulation, SeedChangesTheRun) {
    const Scenario s = load_scenario(scenario_dir() + "/spam-mix.json");
    const RunResult a = run_scenario(s, 1);
    const RunResult b = run_scenario(s, 2);
    EXPECT_NE(a.log.to_jsonl(), b.log.to_jsonl());
    EXPECT_EQ(a.log.to_jsonl(), run_scenario(s, 1).log.to_jsonl());
}

TEST(Simulation, LogStartsAtSequenceOne) {
    const RunResult r = run_scenario(load_scenario(scenario_dir() + "/idle-timeout.json"));
    ASSERT_FALSE(r.log.empty());
    EXPECT_EQ(r.log.entries().front().seq, 1u);
    for (std::size_t i = 0; i < r.log.size(); ++i) EXPECT_EQ(r.log.entries()[i].seq, i + 1);
    for (const auto& [id, s] : r.final_state.sessions) EXPECT_FALSE(s.is_open());
}

TEST(Simulation, IdleTimeoutScenarioClosesFifteenMinutesAfterTheLastUserMessage) {
    const RunResult r = run_scenario(load_scenario(scenario_dir() + "/idle-timeout.json"));
    for (const auto& [id, s] : r.final_state.sessions) {
        ASSERT_TRUE(s.closed_at && s.last_user_message_at);
        EXPECT_TRUE(s.handshake_complete);
        EXPECT_EQ(*s.closed_at, *s.last_user_message_at + 15 * kMinute);
    }
}

TEST(Simulation, SmallFuzzFindsNothing) {
    const FuzzReport r = fuzz(40, 9000);
    EXPECT_EQ(r.runs, 40);
    EXPECT_EQ(r.failed, 0) << json(r).dump();
}

TEST(Agents, VoteSpammersVoteOnEverythingPending) {
    Observation o;
    o.self = "v";
    ChatMessage m;
    m.kind = MessageKind::WorkerProposal;
    m.author = "x";
    m.votes = {"x"};
    m.message_id = MessageId{4};
    o.messages = {m};
    std::mt19937_64 rng(1);
    const auto acts = scripted_step(profile_defaults(Behavior::SpammerVote), o, rng);
    ASSERT_FALSE(acts.empty());
    EXPECT_TRUE(std::any_of(acts.begin(), acts.end(), [](const AgentAction& a) {
        return a.type == AgentActionType::Vote && a.message == MessageId{4};
    }));
}

TEST(Agents, IdlersDoNothing) {
    Observation o;
    o.self = "i";
    ChatMessage m;
    m.kind = MessageKind::User;
    m.author = "u";
    m.body = "hello?";
    o.messages = {m};
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) EXPECT_TRUE(scripted_step(profile_defaults(Behavior::Idler), o, rng).empty());
}

TEST(Platform, LognormalFitRecoversItsOwnQuantiles) {
    const double mu = 3.4, sigma = 0.8, offset = 6;
    std::vector<QuantilePoint> pts;
    for (double share : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        // Inverse of the oracle CDF by bisection.
        double lo = offset, hi = 1e6;
        for (int i = 0; i < 200; ++i) {
            const double mid = (lo + hi) / 2;
            (oracle::phi((std::log(mid - offset) - mu) / sigma) < share ? lo : hi) = mid;
        }
        pts.push_back({lo, share});
    }
    const LognormalFit f = fit_lognormal_quantiles(pts, offset);
    EXPECT_NEAR(f.mu, mu, 1e-6);
    EXPECT_NEAR(f.sigma, sigma, 1e-6);
    for (double x : {10.0, 30.0, 100.0})
        EXPECT_NEAR(lognormal_cdf(f, x, offset), oracle::phi((std::log(x - offset) - mu) / sigma), 1e-9);
}

TEST(Platform, SampledFirstClaimsFollowTheFit) {
    std::mt19937_64 rng(11);
    ClaimLatencyModel m;
    m.first_claim = {std::log(40.0), 0.5};
    SimulatedPlatform p(m, rng, [](TimeMs, AssignmentId) {});
    int below = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) below += p.sample_first_claim_s() <= 40.0;
    EXPECT_NEAR(double(below) / n, 0.5, 0.02);
}

TEST(Corpus, InfeasibleTargetsAreRejected) {
    CorpusTargets t;
    t.duration_mean_min = 60;  // beyond the 45-minute ceiling
    EXPECT_EQ(error_of([&] { generate_corpus(t, 1); }), ErrorCode::InfeasibleTargets);
    t = {};
    t.sessions = 0;
    EXPECT_EQ(error_of([&] { generate_corpus(t, 1); }), ErrorCode::InfeasibleTargets);
}

TEST(Corpus, SmallCorpusHitsItsMeans) {
    CorpusTargets t;
    t.sessions = 40;
    t.period_days = 4;
    const RunResult r = run_scenario(generate_corpus(t, 3));
    const SessionStats& s = r.summary.sessions;
    EXPECT_EQ(s.n_sessions, 40);
    EXPECT_NEAR(s.duration_mean, t.duration_mean_min, 0.05 * t.duration_mean_min);
    EXPECT_NEAR(s.user_messages_mean, t.user_mean, 0.05 * t.user_mean);
    EXPECT_NEAR(s.crowd_messages_mean, t.crowd_mean, 0.05 * t.crowd_mean);
}
