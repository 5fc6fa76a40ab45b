// chorus-stats: cost, session and worker reports over an event log.
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "chorus/analytics.hpp"

using namespace chorus;

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::string fixed(double v, int digits = 2) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(digits) << v;
    return o.str();
}

template <typename T>
std::string opt_id(const std::optional<T>& id) {
    return id ? std::to_string(id->value) : "";
}

void cost_text(const CostReport& r, std::ostream& out) {
    out << "HITs and sessions: " << r.per_hit.size() << '\n'
        << "  base          " << format_dollars(r.base) << '\n'
        << "  fees          " << format_dollars(r.fee) << '\n'
        << "  base cost     " << format_dollars(r.base_cost) << '\n'
        << "  bonuses       " << format_dollars(r.bonus) << '\n'
        << "  subtotal      " << format_dollars(r.grand) << '\n'
        << "  retainer      " << format_dollars(r.retainer) << '\n'
        << "  overall       " << format_dollars(r.overall) << '\n'
        << "  cost per day  " << format_dollars(r.per_day) << " over " << r.period_days << " days\n";
}

void cost_csv(const CostReport& r, std::ostream& out) {
    out << "hit_id,session_id,n_assignments,base_cents,fee_cents,base_cost_cents,bonus_cents,total_cents\n";
    for (const auto& h : r.per_hit)
        out << opt_id(h.hit_id) << ',' << opt_id(h.session_id) << ',' << h.n_assignments << ',' << h.base.value << ','
            << h.fee.value << ',' << h.base_cost.value << ',' << h.bonus.value << ',' << h.total.value << '\n';
}

void sessions_text(const SessionStats& s, std::ostream& out) {
    out << "sessions: " << s.n_sessions << '\n'
        << "  duration min   mean " << fixed(s.duration_mean) << "  sd " << fixed(s.duration_sd) << '\n'
        << "  messages       mean " << fixed(s.messages_mean) << "  sd " << fixed(s.messages_sd) << '\n'
        << "  user messages  mean " << fixed(s.user_messages_mean) << "  sd " << fixed(s.user_messages_sd) << '\n'
        << "  crowd messages mean " << fixed(s.crowd_messages_mean) << "  sd " << fixed(s.crowd_messages_sd) << '\n'
        << "  rejected       mean " << fixed(s.rejected_mean) << "  sd " << fixed(s.rejected_sd) << '\n'
        << "  share <= 10 min " << fixed(100 * s.share_at_most_10_min, 1) << "%\n"
        << "first response (" << s.n_with_response << " sessions): mean " << fixed(s.first_response_mean, 1) << " s\n"
        << "  <= 30 s " << fixed(100 * s.within_30s, 1) << "%   <= 60 s " << fixed(100 * s.within_60s, 1)
        << "%   <= 120 s " << fixed(100 * s.within_120s, 1) << "%\n";
    for (auto [p, v] : s.first_response_quantiles) out << "  p" << p << ' ' << fixed(v, 1) << " s\n";
}

void sessions_csv(std::span<const EventLogEntry> log, std::ostream& out) {
    out << "session_id,created_at_ms,duration_ms,user_messages,crowd_messages,rejected,first_response_ms\n";
    for (const auto& f : session_figures(log))
        out << f.session_id.value << ',' << f.created_at << ',' << f.duration << ',' << f.user_messages << ','
            << f.crowd_messages << ',' << f.rejected << ',' << (f.first_response ? std::to_string(*f.first_response) : "")
            << '\n';
}

std::string flag_list(const WorkerQuality& w) {
    std::string s;
    for (auto f : w.flags) s += (s.empty() ? "" : ";") + std::string(to_string(f));
    return s;
}

void workers_text(const std::vector<WorkerQuality>& ws, std::ostream& out) {
    out << std::left << std::setw(28) << "worker" << std::right << std::setw(9) << "sessions" << std::setw(10)
        << "proposals" << std::setw(9) << "accept%" << std::setw(7) << "facts" << std::setw(7) << "votes"
        << "  flags\n";
    for (const auto& w : ws)
        out << std::left << std::setw(28) << w.worker_id << std::right << std::setw(9) << w.sessions << std::setw(10)
            << w.proposals << std::setw(9) << (w.acceptance_ratio ? fixed(100 * *w.acceptance_ratio, 0) : "-")
            << std::setw(7) << w.fact_posts << std::setw(7) << w.vote_count << "  " << flag_list(w) << '\n';
}

void workers_csv(const std::vector<WorkerQuality>& ws, std::ostream& out) {
    out << "worker_id,sessions,proposals,accepted,acceptance_ratio,fact_posts,fact_spam_score,median_fact_length,"
           "vote_count,vote_rate_per_minute,high_coverage_sessions,flags\n";
    for (const auto& w : ws)
        out << csv_field(w.worker_id) << ',' << w.sessions << ',' << w.proposals << ',' << w.accepted << ','
            << (w.acceptance_ratio ? fixed(*w.acceptance_ratio, 4) : "") << ',' << w.fact_posts << ','
            << fixed(w.fact_spam_score, 4) << ',' << fixed(w.median_fact_length, 1) << ',' << w.vote_count << ','
            << fixed(w.vote_rate_per_minute, 3) << ',' << w.high_coverage_sessions << ',' << flag_list(w) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reports over a Chorus event log"};
    std::string log_path, report = "cost", config_path;
    int period_days = 0;
    bool as_json = false, as_csv = false, flagged_only = false;
    app.add_option("--log", log_path, "Event log (JSONL)")->required()->check(CLI::ExistingFile);
    app.add_option("--report", report)->check(CLI::IsMember({"cost", "sessions", "workers"}));
    auto* j = app.add_flag("--json", as_json);
    auto* c = app.add_flag("--csv", as_csv);
    j->excludes(c);
    app.add_option("--config", config_path, "Config the log was produced under (fees, rates)")
        ->check(CLI::ExistingFile);
    app.add_option("--period-days", period_days, "Days for the per-day cost; default: the log's span");
    app.add_flag("--flagged", flagged_only, "Workers report: only flagged workers");
    CLI11_PARSE(app, argc, argv);

    try {
        const Config config = config_path.empty() ? apply_env_overrides(Config{}) : load_config(config_path);
        const EventLog log = EventLog::load(log_path);
        const auto entries = log.entries();
        if (report == "cost") {
            const CostReport r = deployment_cost_summary(entries, period_days, config);
            if (as_json) std::cout << json(r).dump(2) << '\n';
            else if (as_csv) cost_csv(r, std::cout);
            else cost_text(r, std::cout);
        } else if (report == "sessions") {
            if (as_csv) {
                sessions_csv(entries, std::cout);
            } else {
                const SessionStats s = session_statistics(entries);
                if (as_json) std::cout << json(s).dump(2) << '\n';
                else sessions_text(s, std::cout);
            }
        } else {
            auto ws = worker_quality(entries);
            if (flagged_only) std::erase_if(ws, [](const WorkerQuality& w) { return w.flags.empty(); });
            if (as_json) std::cout << json(ws).dump(2) << '\n';
            else if (as_csv) workers_csv(ws, std::cout);
            else workers_text(ws, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "chorus-stats: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
