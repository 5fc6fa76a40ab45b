#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "chorus/simulation.hpp"

namespace chorus {

std::string_view to_string(Behavior b) {
    switch (b) {
        case Behavior::Diligent: return "diligent";
        case Behavior::Confirmer: return "confirmer";
        case Behavior::SpammerMessage: return "spammer_message";
        case Behavior::SpammerFact: return "spammer_fact";
        case Behavior::SpammerVote: return "spammer_vote";
        case Behavior::Idler: return "idler";
        case Behavior::EarlySubmitter: return "early_submitter";
    }
    return "unknown";
}

Behavior behavior_from(std::string_view s) {
    for (auto b : {Behavior::Diligent, Behavior::Confirmer, Behavior::SpammerMessage, Behavior::SpammerFact,
                   Behavior::SpammerVote, Behavior::Idler, Behavior::EarlySubmitter})
        if (to_string(b) == s) return b;
    throw Error(ErrorCode::InvalidScenario, "unknown behavior '" + std::string(s) + "'");
}

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidScenario, what); }

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) invalid(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) invalid("unknown key '" + key + "' in " + where);
    }
}

TimeMs ms_from(double seconds) { return static_cast<TimeMs>(std::llround(seconds * kSecond)); }

double number(const json& j, const char* key, double fallback, double lo, double hi, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) invalid(where + "." + key + " must be a number");
    const double v = j.at(key).get<double>();
    if (!(v >= lo && v <= hi)) invalid(where + "." + key + " out of range");
    return v;
}

Range range(const json& j, const char* key, Range fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const json& r = j.at(key);
    if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
        invalid(where + "." + key + " must be [low, high]");
    Range out{r[0].get<double>(), r[1].get<double>()};
    if (out.lo < 0 || out.hi < out.lo) invalid(where + "." + key + " must satisfy 0 <= low <= high");
    return out;
}

json range_json(Range r) { return json::array({r.lo, r.hi}); }

std::string text(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_string()) invalid(where + "." + key + " must be a string");
    return j.at(key).get<std::string>();
}

std::string chat_text(const json& j, const char* key, const std::string& where) {
    std::string s = text(j, key, where);
    if (trim(s).empty()) invalid(where + "." + key + " must not be blank");
    return s;
}

AgentProfile parse_agent(const json& j, const std::string& where) {
    only_keys(j,
              {"behavior", "count", "id_prefix", "first_step_s", "step_s", "heartbeat_s", "propose_p", "vote_p",
               "fact_p", "submits", "submit_idle_s", "ping_response_s", "ping_miss_p"},
              where);
    AgentProfile a = profile_defaults(behavior_from(text(j, "behavior", where)));
    a.count = static_cast<int>(number(j, "count", 1, 0, 100000, where));
    a.id_prefix = j.value("id_prefix", std::string(to_string(a.behavior)));
    a.first_step_s = range(j, "first_step_s", a.first_step_s, where);
    a.step_s = range(j, "step_s", a.step_s, where);
    a.heartbeat_s = range(j, "heartbeat_s", a.heartbeat_s, where);
    if (a.step_s.lo <= 0 || a.heartbeat_s.lo <= 0) invalid(where + ": step_s and heartbeat_s must be positive");
    a.propose_p = number(j, "propose_p", a.propose_p, 0, 1, where);
    a.vote_p = number(j, "vote_p", a.vote_p, 0, 1, where);
    a.fact_p = number(j, "fact_p", a.fact_p, 0, 1, where);
    if (j.contains("submits")) a.submits = j.at("submits").get<bool>();
    a.submit_idle_s = number(j, "submit_idle_s", a.submit_idle_s, 0, 1e7, where);
    a.ping_response_s = range(j, "ping_response_s", a.ping_response_s, where);
    a.ping_miss_p = number(j, "ping_miss_p", a.ping_miss_p, 0, 1, where);
    return a;
}

UserScript parse_user(const json& j, const std::string& where) {
    only_keys(j, {"user_id", "messages", "crowd_lines", "reactive"}, where);
    UserScript u;
    u.user_id = text(j, "user_id", where);
    if (u.user_id.empty()) invalid(where + ".user_id is empty");
    for (const auto& m : j.value("messages", json::array())) {
        only_keys(m, {"at_s", "body"}, where + ".messages[]");
        u.messages.push_back({ms_from(number(m, "at_s", 0, 0, 1e9, where)), chat_text(m, "body", where)});
    }
    for (const auto& c : j.value("crowd_lines", json::array())) {
        only_keys(c, {"at_s", "body", "accept"}, where + ".crowd_lines[]");
        u.crowd_lines.push_back({ms_from(number(c, "at_s", 0, 0, 1e9, where)), chat_text(c, "body", where),
                                 c.value("accept", true)});
    }
    if (j.contains("reactive")) {
        const json& r = j.at("reactive");
        const std::string w = where + ".reactive";
        only_keys(r, {"start_s", "turns", "reply_delay_s", "sessions", "return_gap_min", "closing"}, w);
        ReactiveUser ru;
        ru.start = ms_from(number(r, "start_s", 0, 0, 1e9, w));
        ru.turns = static_cast<int>(number(r, "turns", ru.turns, 0, 10000, w));
        ru.reply_delay_s = range(r, "reply_delay_s", ru.reply_delay_s, w);
        ru.sessions = static_cast<int>(number(r, "sessions", ru.sessions, 1, 10000, w));
        ru.return_gap_min = range(r, "return_gap_min", ru.return_gap_min, w);
        ru.closing = r.value("closing", ru.closing);
        u.reactive = ru;
    }
    if (u.messages.empty() && !u.reactive) invalid(where + " has neither messages nor a reactive model");
    return u;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
    only_keys(j,
              {"$schema", "name", "description", "seed", "duration_s", "duration_min", "config", "platform", "workers",
               "users", "admin"},
              "scenario");
    Scenario s;
    s.name = j.value("name", "");
    s.description = j.value("description", "");
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) invalid("seed must be a non-negative integer");
        s.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("duration_s")) s.duration = ms_from(number(j, "duration_s", 0, 0, 1e9, "scenario"));
    if (j.contains("duration_min")) s.duration = ms_from(60 * number(j, "duration_min", 0, 0, 1e8, "scenario"));
    if (j.contains("config")) {
        s.config_overrides = j.at("config");
        try {
            merge_config(Config{}, s.config_overrides);
        } catch (const Error& e) {
            invalid(std::string("config: ") + e.what());
        }
    }

    if (j.contains("platform")) {
        const json& p = j.at("platform");
        only_keys(p,
                  {"first_claim", "next_claim_gap_s", "tutorial_delay_s", "heavy_tail", "slot_claim_gap_s",
                   "failure_probability"},
                  "platform");
        ClaimLatencyModel& m = s.platform;
        if (p.contains("first_claim")) {
            const json& f = p.at("first_claim");
            only_keys(f, {"mu", "sigma", "fit", "offset_s"}, "platform.first_claim");
            if (f.contains("fit")) {
                std::vector<QuantilePoint> points;
                for (const auto& q : f.at("fit")) {
                    only_keys(q, {"seconds", "share"}, "platform.first_claim.fit[]");
                    points.push_back({number(q, "seconds", 0, 0, 1e9, "fit"), number(q, "share", 0, 0, 1, "fit")});
                }
                m.first_claim = fit_lognormal_quantiles(points, number(f, "offset_s", 0, 0, 1e6, "first_claim"));
            } else {
                m.first_claim.mu = number(f, "mu", m.first_claim.mu, -50, 50, "first_claim");
                m.first_claim.sigma = number(f, "sigma", m.first_claim.sigma, 1e-6, 50, "first_claim");
            }
        }
        m.next_claim_gap_s = number(p, "next_claim_gap_s", m.next_claim_gap_s, 0.001, 1e7, "platform");
        m.tutorial_delay_s = number(p, "tutorial_delay_s", m.tutorial_delay_s, 0, 1e7, "platform");
        m.slot_claim_gap_s = number(p, "slot_claim_gap_s", m.slot_claim_gap_s, 0.001, 1e7, "platform");
        m.failure_probability = number(p, "failure_probability", m.failure_probability, 0, 1, "platform");
        if (p.contains("heavy_tail")) {
            const json& h = p.at("heavy_tail");
            only_keys(h, {"probability", "min_s", "max_s"}, "platform.heavy_tail");
            m.heavy_tail_probability = number(h, "probability", 0, 0, 1, "heavy_tail");
            m.heavy_min_s = number(h, "min_s", m.heavy_min_s, 0, 1e7, "heavy_tail");
            m.heavy_max_s = number(h, "max_s", m.heavy_max_s, m.heavy_min_s, 1e7, "heavy_tail");
        }
    }

    int i = 0;
    std::set<std::string> prefixes;
    for (const auto& w : j.value("workers", json::array())) {
        s.workers.push_back(parse_agent(w, "workers[" + std::to_string(i++) + "]"));
        if (!prefixes.insert(s.workers.back().id_prefix).second)
            invalid("two worker groups share the id prefix '" + s.workers.back().id_prefix + "'");
    }
    i = 0;
    std::set<UserId> ids;
    for (const auto& u : j.value("users", json::array())) {
        s.users.push_back(parse_user(u, "users[" + std::to_string(i++) + "]"));
        if (!ids.insert(s.users.back().user_id).second) invalid("duplicate user_id " + s.users.back().user_id);
    }
    for (const auto& a : j.value("admin", json::array())) {
        only_keys(a, {"at_s", "action", "user_id", "reason"}, "admin[]");
        AdminAction act;
        act.at = ms_from(number(a, "at_s", 0, 0, 1e9, "admin"));
        const std::string type = text(a, "action", "admin[]");
        if (type != "block" && type != "unblock") invalid("admin action must be block or unblock");
        act.type = type == "block" ? AdminActionType::Block : AdminActionType::Unblock;
        act.user_id = text(a, "user_id", "admin[]");
        act.reason = a.value("reason", "");
        s.admin_actions.push_back(act);
    }
    return s;
}

json scenario_to_json(const Scenario& s) {
    json workers = json::array();
    for (const auto& a : s.workers)
        workers.push_back({{"behavior", to_string(a.behavior)},
                           {"count", a.count},
                           {"id_prefix", a.id_prefix},
                           {"first_step_s", range_json(a.first_step_s)},
                           {"step_s", range_json(a.step_s)},
                           {"heartbeat_s", range_json(a.heartbeat_s)},
                           {"propose_p", a.propose_p},
                           {"vote_p", a.vote_p},
                           {"fact_p", a.fact_p},
                           {"submits", a.submits},
                           {"submit_idle_s", a.submit_idle_s},
                           {"ping_response_s", range_json(a.ping_response_s)},
                           {"ping_miss_p", a.ping_miss_p}});
    json users = json::array();
    for (const auto& u : s.users) {
        json msgs = json::array(), crowd = json::array();
        for (const auto& m : u.messages) msgs.push_back({{"at_s", m.at / 1000.0}, {"body", m.body}});
        for (const auto& c : u.crowd_lines)
            crowd.push_back({{"at_s", c.at / 1000.0}, {"body", c.body}, {"accept", c.accept}});
        json uj{{"user_id", u.user_id}, {"messages", msgs}};
        if (!crowd.empty()) uj["crowd_lines"] = crowd;
        if (u.reactive)
            uj["reactive"] = {{"start_s", u.reactive->start / 1000.0},
                              {"turns", u.reactive->turns},
                              {"reply_delay_s", range_json(u.reactive->reply_delay_s)},
                              {"sessions", u.reactive->sessions},
                              {"return_gap_min", range_json(u.reactive->return_gap_min)},
                              {"closing", u.reactive->closing}};
        users.push_back(uj);
    }
    json admin = json::array();
    for (const auto& a : s.admin_actions)
        admin.push_back({{"at_s", a.at / 1000.0},
                         {"action", a.type == AdminActionType::Block ? "block" : "unblock"},
                         {"user_id", a.user_id},
                         {"reason", a.reason}});
    const auto& m = s.platform;
    return json{{"name", s.name},
                {"description", s.description},
                {"seed", s.seed},
                {"duration_s", s.duration / 1000.0},
                {"config", s.config_overrides},
                {"platform",
                 {{"first_claim", {{"mu", m.first_claim.mu}, {"sigma", m.first_claim.sigma}}},
                  {"next_claim_gap_s", m.next_claim_gap_s},
                  {"tutorial_delay_s", m.tutorial_delay_s},
                  {"heavy_tail",
                   {{"probability", m.heavy_tail_probability}, {"min_s", m.heavy_min_s}, {"max_s", m.heavy_max_s}}},
                  {"slot_claim_gap_s", m.slot_claim_gap_s},
                  {"failure_probability", m.failure_probability}}},
                {"workers", workers},
                {"users", users},
                {"admin", admin}};
}

namespace {

json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined: return nullptr;
        case YAML::NodeType::Sequence: {
            json out = json::array();
            for (const auto& item : n) out.push_back(yaml_to_json(item));
            return out;
        }
        case YAML::NodeType::Map: {
            json out = json::object();
            for (const auto& kv : n) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
            return out;
        }
        case YAML::NodeType::Scalar: break;
    }
    const std::string& s = n.Scalar();
    if (n.Tag() == "!") return s;  // quoted
    if (s == "true" || s == "True") return true;
    if (s == "false" || s == "False") return false;
    if (s == "null" || s == "~") return nullptr;
    json parsed = json::parse(s, nullptr, false);
    if (!parsed.is_discarded() && parsed.is_number()) return parsed;
    return s;
}

}  // namespace

json yaml_text_to_json(const std::string& text) {
    try {
        return yaml_to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
        invalid(std::string("YAML: ") + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) invalid("cannot open scenario " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const bool yaml = path.ends_with(".yaml") || path.ends_with(".yml");
    json j;
    if (yaml) {
        j = yaml_text_to_json(text);
    } else {
        j = json::parse(text, nullptr, false);
        if (j.is_discarded()) invalid(path + " is not valid JSON");
    }
    try {
        return scenario_from_json(j);
    } catch (const json::exception& e) {
        invalid(path + ": " + e.what());
    }
}

}  // namespace chorus
