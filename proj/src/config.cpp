#include "chorus/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>

namespace chorus {
namespace {

double seconds(TimeMs t) { return static_cast<double>(t) / kSecond; }
double minutes(TimeMs t) { return static_cast<double>(t) / kMinute; }
double dollars(Cents c) { return static_cast<double>(c.value) / 100.0; }
double dollars(MicroDollars m) { return static_cast<double>(m.value) / 1e6; }

void reject_if(bool bad, const std::string& what) {
    if (bad) throw Error(ErrorCode::InvalidConfig, what);
}

}  // namespace

void Config::validate() const {
    reject_if(consensus.threshold_percent < 0 || consensus.threshold_percent > 100,
              "consensus.threshold_percent must be within [0, 100]");
    reject_if(consensus.heartbeat_window < 0, "consensus.heartbeat_window_s < 0");
    reject_if(session.handshake_timeout < 0 || session.idle_timeout < 0, "negative session timeout");
    const auto& i = incentives;
    reject_if(i.propose_points < 0 || i.vote_points < 0 || i.proposal_accepted_points < 0 ||
                  i.post_fact_points < 0 || i.waiting_points < 0,
              "negative point value");
    reject_if(i.waiting_interval <= 0, "incentives.waiting_interval_s must be positive");
    reject_if(i.min_points_to_submit < 0 || i.bonus_per_point.value < 0, "negative incentive setting");
    const auto& r = recruiting;
    reject_if(r.target_crowd_size < 0 || r.platform_max_assignments < 1, "bad crowd size");
    reject_if(r.base_pay.value < 0 || r.retainer_rate.value < 0, "negative pay");
    reject_if(r.retainer_duration < 0 || r.dispatch_promise < 0 || r.retainer_rate_interval <= 0,
              "bad retainer timing");
    reject_if(r.strike_limit < 1, "recruiting.strike_limit must be >= 1");
    reject_if(fees.small_hit_percent < 0 || fees.large_hit_percent < 0 || fees.retainer_percent < 0 ||
                  fees.bonus_percent < 0,
              "negative fee");
    reject_if(gateway.welcome_messages.empty() || gateway.wait_messages.empty(),
              "auto-reply pools must be non-empty");
}

void to_json(json& j, const Config& c) {
    j = json{
        {"consensus",
         {{"threshold_percent", c.consensus.threshold_percent},
          {"heartbeat_window_s", seconds(c.consensus.heartbeat_window)}}},
        {"session",
         {{"handshake_timeout_min", minutes(c.session.handshake_timeout)},
          {"idle_timeout_min", minutes(c.session.idle_timeout)}}},
        {"incentives",
         {{"points_per_action",
           {{"propose", c.incentives.propose_points},
            {"vote", c.incentives.vote_points},
            {"proposal_accepted", c.incentives.proposal_accepted_points},
            {"post_fact", c.incentives.post_fact_points},
            {"waiting", c.incentives.waiting_points}}},
          {"waiting_interval_s", seconds(c.incentives.waiting_interval)},
          {"min_points_to_submit", c.incentives.min_points_to_submit},
          {"bonus_per_point", dollars(c.incentives.bonus_per_point)}}},
        {"recruiting",
         {{"policy", c.recruiting.policy == RecruitPolicy::Static ? "static" : "dynamic"},
          {"target_crowd_size", c.recruiting.target_crowd_size},
          {"platform_max_assignments", c.recruiting.platform_max_assignments},
          {"base_pay", dollars(c.recruiting.base_pay)},
          {"retainer_duration_min", minutes(c.recruiting.retainer_duration)},
          {"dispatch_promise_s", seconds(c.recruiting.dispatch_promise)},
          {"retainer_rate", dollars(c.recruiting.retainer_rate)},
          {"retainer_rate_interval_min", minutes(c.recruiting.retainer_rate_interval)},
          {"strike_limit", c.recruiting.strike_limit},
          {"return_under_minimum", c.recruiting.return_under_minimum}}},
        {"fees",
         {{"small_hit_percent", c.fees.small_hit_percent},
          {"large_hit_percent", c.fees.large_hit_percent},
          {"large_hit_min_assignments", c.fees.large_hit_min_assignments},
          {"retainer_percent", c.fees.retainer_percent},
          {"bonus_percent", c.fees.bonus_percent}}},
        {"gateway",
         {{"welcome_messages", c.gateway.welcome_messages},
          {"wait_messages", c.gateway.wait_messages},
          {"rng_seed", c.gateway.rng_seed},
          {"admin_token", c.gateway.admin_token}}},
    };
}

void from_json(const json& j, Config& c) {
    // Every key is optional; missing keys keep their current value.
    auto section = [&](const char* name) -> const json& {
        static const json empty = json::object();
        return j.contains(name) ? j.at(name) : empty;
    };
    auto get = [](const json& s, const char* key, auto& out) {
        if (s.contains(key)) out = s.at(key).get<std::decay_t<decltype(out)>>();
    };
    auto get_time = [](const json& s, const char* key, TimeMs& out, TimeMs unit) {
        if (s.contains(key)) out = static_cast<TimeMs>(std::llround(s.at(key).get<double>() * unit));
    };
    auto get_cents = [](const json& s, const char* key, Cents& out) {
        if (s.contains(key)) out = cents_from(s.at(key).get<double>());
    };

    const json& con = section("consensus");
    get(con, "threshold_percent", c.consensus.threshold_percent);
    get_time(con, "heartbeat_window_s", c.consensus.heartbeat_window, kSecond);

    const json& ses = section("session");
    get_time(ses, "handshake_timeout_min", c.session.handshake_timeout, kMinute);
    get_time(ses, "idle_timeout_min", c.session.idle_timeout, kMinute);

    const json& inc = section("incentives");
    if (inc.contains("points_per_action")) {
        const json& p = inc.at("points_per_action");
        get(p, "propose", c.incentives.propose_points);
        get(p, "vote", c.incentives.vote_points);
        get(p, "proposal_accepted", c.incentives.proposal_accepted_points);
        get(p, "post_fact", c.incentives.post_fact_points);
        get(p, "waiting", c.incentives.waiting_points);
    }
    get_time(inc, "waiting_interval_s", c.incentives.waiting_interval, kSecond);
    get(inc, "min_points_to_submit", c.incentives.min_points_to_submit);
    if (inc.contains("bonus_per_point"))
        c.incentives.bonus_per_point = micro_dollars_from(inc.at("bonus_per_point").get<double>());

    const json& rec = section("recruiting");
    if (rec.contains("policy")) {
        const auto p = rec.at("policy").get<std::string>();
        if (p != "static" && p != "dynamic")
            throw Error(ErrorCode::InvalidConfig, "recruiting.policy must be static or dynamic");
        c.recruiting.policy = p == "static" ? RecruitPolicy::Static : RecruitPolicy::Dynamic;
    }
    get(rec, "target_crowd_size", c.recruiting.target_crowd_size);
    get(rec, "platform_max_assignments", c.recruiting.platform_max_assignments);
    get_cents(rec, "base_pay", c.recruiting.base_pay);
    get_time(rec, "retainer_duration_min", c.recruiting.retainer_duration, kMinute);
    get_time(rec, "dispatch_promise_s", c.recruiting.dispatch_promise, kSecond);
    get_cents(rec, "retainer_rate", c.recruiting.retainer_rate);
    get_time(rec, "retainer_rate_interval_min", c.recruiting.retainer_rate_interval, kMinute);
    get(rec, "strike_limit", c.recruiting.strike_limit);
    get(rec, "return_under_minimum", c.recruiting.return_under_minimum);

    const json& fee = section("fees");
    get(fee, "small_hit_percent", c.fees.small_hit_percent);
    get(fee, "large_hit_percent", c.fees.large_hit_percent);
    get(fee, "large_hit_min_assignments", c.fees.large_hit_min_assignments);
    get(fee, "retainer_percent", c.fees.retainer_percent);
    get(fee, "bonus_percent", c.fees.bonus_percent);

    const json& gw = section("gateway");
    get(gw, "welcome_messages", c.gateway.welcome_messages);
    get(gw, "wait_messages", c.gateway.wait_messages);
    get(gw, "rng_seed", c.gateway.rng_seed);
    get(gw, "admin_token", c.gateway.admin_token);
}

namespace {

// Every key in `overrides` must exist in `known`, at the same depth.
void reject_unknown_keys(const json& overrides, const json& known, const std::string& where) {
    if (!overrides.is_object()) throw Error(ErrorCode::InvalidConfig, (where.empty() ? "config" : where) + " must be an object");
    for (const auto& [key, value] : overrides.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!known.contains(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key " + path);
        if (known.at(key).is_object()) reject_unknown_keys(value, known.at(key), path);
    }
}

}  // namespace

Config merge_config(const Config& base, const json& overrides) {
    reject_unknown_keys(overrides, json(base), "");
    Config merged = base;
    try {
        from_json(overrides, merged);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
    merged.validate();
    return merged;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
    }
    return apply_env_overrides(merge_config(Config{}, j));
}

Config apply_env_overrides(const Config& base) {
    // CHORUS_RECRUITING_TARGET_CROWD_SIZE=6 overrides recruiting.target_crowd_size.
    // Values are parsed as JSON first, falling back to a plain string.
    json current = base;
    json overrides = json::object();
    for (auto& [section, fields] : current.items()) {
        for (auto& [key, value] : fields.items()) {
            std::string name = "CHORUS_" + section + "_" + key;
            for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            const char* raw = std::getenv(name.c_str());
            if (raw == nullptr) continue;
            json parsed = json::parse(raw, nullptr, false);
            overrides[section][key] = parsed.is_discarded() ? json(raw) : parsed;
        }
    }
    return overrides.empty() ? base : merge_config(base, overrides);
}

}  // namespace chorus
