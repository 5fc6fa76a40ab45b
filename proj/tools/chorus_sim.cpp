// chorus-sim: run scenarios on a virtual clock, fuzz the protocol.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "chorus/invariants.hpp"
#include "chorus/simulation.hpp"

using namespace chorus;

namespace {

int run(const std::string& scenario_path, std::optional<std::uint64_t> seed, const std::string& out,
        const std::string& summary_path, bool check) {
    const Scenario sc = load_scenario(scenario_path);
    const RunResult r = run_scenario(sc, seed);
    r.log.save(out);
    if (!summary_path.empty()) {
        std::ofstream s(summary_path);
        if (!s) throw std::runtime_error("cannot write " + summary_path);
        s << json(r.summary).dump(2) << '\n';
    }
    std::cerr << sc.name << ": " << r.log.size() << " events, " << r.summary.sessions.n_sessions << " sessions, "
              << format_dollars(r.summary.cost.overall) << " total\n";
    if (!check) return 0;
    const auto violations = check_invariants(r.log.entries(), r.config);
    for (const auto& v : violations) std::cerr << "violation: " << v << '\n';
    const bool replay_ok = replay(r.log.entries()) == r.final_state;
    if (!replay_ok) std::cerr << "replay disagrees with the live state\n";
    return violations.empty() && replay_ok ? 0 : 1;
}

int fuzz_runs(int runs, std::uint64_t seed, bool as_json) {
    const FuzzReport report = fuzz(runs, seed);
    if (as_json) {
        std::cout << json(report).dump(2) << '\n';
    } else {
        std::cout << report.runs << " runs, " << report.events << " events, " << report.failed << " failed\n";
        for (const auto& f : report.failures) {
            std::cout << "  " << f.scenario << " seed " << f.seed << (f.replay_matches ? "" : " [replay]")
                      << (f.deterministic ? "" : " [nondeterministic]") << '\n';
            for (const auto& v : f.violations) std::cout << "    " << v << '\n';
        }
    }
    return report.failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chorus simulation harness"};
    app.require_subcommand(1);

    std::string scenario_path, out, summary_path;
    std::optional<std::uint64_t> seed;
    bool check = false;
    auto* run_cmd = app.add_subcommand("run", "Run one scenario and write its event log");
    run_cmd->add_option("--scenario", scenario_path, "Scenario file (.json, .yaml)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", seed, "Overrides the scenario's seed");
    run_cmd->add_option("--out", out, "Event log (JSONL)")->required();
    run_cmd->add_option("--summary", summary_path, "Summary JSON");
    run_cmd->add_flag("--check", check, "Also check invariants and replay; exit 1 on failure");

    int runs = 1000;
    std::uint64_t fuzz_seed = 1;
    bool as_json = false;
    auto* fuzz_cmd = app.add_subcommand("fuzz", "Random scenarios: invariants, replay and determinism");
    fuzz_cmd->add_option("--runs", runs)->check(CLI::PositiveNumber);
    fuzz_cmd->add_option("--seed", fuzz_seed);
    fuzz_cmd->add_flag("--json", as_json);

    std::string kind = "corpus";
    std::uint64_t gen_seed = 1;
    int sessions = 0;
    auto* gen_cmd = app.add_subcommand("generate", "Print a generated scenario as JSON");
    gen_cmd->add_option("kind", kind)->check(CLI::IsMember({"corpus", "spam", "latency", "fuzz"}));
    gen_cmd->add_option("--seed", gen_seed);
    gen_cmd->add_option("--sessions", sessions);
    double offset_s = 6;
    gen_cmd->add_option("--offset-s", offset_s, "Latency scenario: agent time before the first reply");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run_cmd) return run(scenario_path, seed, out, summary_path, check);
        if (*fuzz_cmd) return fuzz_runs(runs, fuzz_seed, as_json);
        Scenario sc;
        if (kind == "corpus") {
            CorpusTargets t;
            if (sessions > 0) t.sessions = sessions;
            sc = generate_corpus(t, gen_seed);
        } else if (kind == "spam") {
            sc = spam_corpus(sessions > 0 ? sessions : 100, gen_seed);
        } else if (kind == "latency") {
            const QuantilePoint targets[] = {{30, 0.25}, {60, 0.60}, {120, 0.883}};
            sc = latency_scenario(sessions > 0 ? sessions : 240, targets, offset_s, gen_seed);
        } else {
            sc = random_scenario(gen_seed);
        }
        std::cout << scenario_to_json(sc).dump(2) << '\n';
    } catch (const std::exception& e) {
        std::cerr << "chorus-sim: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
