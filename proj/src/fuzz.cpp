#include "chorus/invariants.hpp"
#include "chorus/simulation.hpp"

namespace chorus {

RunCheck check_run(const Scenario& scenario, std::optional<std::uint64_t> seed_override) {
    RunCheck check;
    check.scenario = scenario.name;
    check.seed = seed_override.value_or(scenario.seed);
    const RunResult first = run_scenario(scenario, seed_override);
    check.events = first.log.size();
    check.violations = check_invariants(first.log.entries(), first.config);
    check.replay_matches = replay(first.log.entries()) == first.final_state;
    const RunResult second = run_scenario(scenario, seed_override);
    check.deterministic = second.log.to_jsonl() == first.log.to_jsonl();
    return check;
}

FuzzReport fuzz(int runs, std::uint64_t seed) {
    FuzzReport report;
    for (int i = 0; i < runs; ++i) {
        const Scenario sc = random_scenario(seed + static_cast<std::uint64_t>(i));
        RunCheck c;
        try {
            c = check_run(sc);
        } catch (const std::exception& e) {
            c.scenario = sc.name;
            c.seed = sc.seed;
            c.violations.push_back(std::string("run aborted: ") + e.what());
        }
        ++report.runs;
        report.events += c.events;
        if (!c.ok()) {
            ++report.failed;
            if (report.failures.size() < 20) report.failures.push_back(std::move(c));
        }
    }
    return report;
}

void to_json(json& j, const RunCheck& c) {
    j = json{{"scenario", c.scenario},         {"seed", c.seed},
             {"events", c.events},             {"violations", c.violations},
             {"replay_matches", c.replay_matches}, {"deterministic", c.deterministic}};
}

void to_json(json& j, const FuzzReport& r) {
    j = json{{"runs", r.runs}, {"failed", r.failed}, {"events", r.events}, {"failures", r.failures}};
}

}  // namespace chorus
