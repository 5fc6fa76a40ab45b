#include <algorithm>
#include <cmath>
#include <numeric>

#include "chorus/simulation.hpp"

namespace chorus {
namespace {

using Rng = std::mt19937_64;

// Count with the given mean and SD: Poisson when the spread allows no more,
// otherwise negative binomial drawn as a gamma-Poisson mixture.
int overdispersed_count(double mean, double sd, Rng& rng) {
    if (mean <= 0) return 0;
    const double var = sd * sd;
    double lambda = mean;
    if (var > mean) lambda = std::gamma_distribution<double>(mean * mean / (var - mean), (var - mean) / mean)(rng);
    if (lambda <= 0) return 0;
    return static_cast<int>(std::poisson_distribution<long long>(lambda)(rng));
}

double uniform(double lo, double hi, Rng& rng) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

int uniform_int(int lo, int hi, Rng& rng) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <typename T>
const T& pick(const std::vector<T>& pool, Rng& rng) {
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

// Adds or removes single counts, picked in proportion to size, until the sum is
// round(target * n). Values never drop below `floor`.
void match_mean(std::vector<int>& v, int floor, double target, Rng& rng) {
    const long long want = std::llround(target * static_cast<double>(v.size()));
    long long have = std::accumulate(v.begin(), v.end(), 0LL);
    while (have != want) {
        std::vector<double> w(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            w[i] = have < want ? v[i] + 1.0 : (v[i] > floor ? static_cast<double>(v[i]) : 0.0);
        std::discrete_distribution<std::size_t> which(w.begin(), w.end());
        const long long step = std::min<long long>(std::llabs(want - have), 16);
        for (long long k = 0; k < step; ++k) {
            const std::size_t i = which(rng);
            if (have < want) {
                ++v[i];
                ++have;
            } else if (v[i] > floor) {
                --v[i];
                --have;
            }
        }
    }
}

TimeMs minutes_ms(double m) { return static_cast<TimeMs>(std::llround(m * kMinute)); }

const std::vector<std::string>& corpus_user_lines() {
    static const std::vector<std::string> pool = {
        "hello",           "Can you help me plan a trip?", "what about the weekend?", "ok",
        "How far is it?",  "Is there parking?",            "thanks, anything else?",   "Which one is better?",
        "sounds good",     "What about the price?",
    };
    return pool;
}

}  // namespace

Scenario generate_corpus(const CorpusTargets& t, std::uint64_t seed) {
    const double values[] = {t.duration_mean_min, t.messages_mean, t.user_mean, t.crowd_mean, t.rejected_mean};
    for (double v : values)
        if (!(v >= 0) || !std::isfinite(v)) throw Error(ErrorCode::InfeasibleTargets, "means must be non-negative");
    const double sds[] = {t.duration_sd_min, t.messages_sd, t.user_sd, t.crowd_sd, t.rejected_sd};
    for (double v : sds)
        if (!(v >= 0) || !std::isfinite(v)) throw Error(ErrorCode::InfeasibleTargets, "SDs must be non-negative");
    if (t.duration_mean_min <= 0) throw Error(ErrorCode::InfeasibleTargets, "duration mean must be positive");
    if (t.duration_mean_min > 44) throw Error(ErrorCode::InfeasibleTargets, "sessions end by 45 minutes");
    if (t.user_mean < 1) throw Error(ErrorCode::InfeasibleTargets, "every session starts with a user message");
    if (t.sessions < 1 || t.period_days < 1) throw Error(ErrorCode::InfeasibleTargets, "need sessions and a period");

    Rng rng(seed);
    Scenario sc;
    sc.name = "corpus";
    sc.description = "Generated corpus: per-session message counts and durations drawn around the targets";
    sc.seed = seed;
    sc.duration = static_cast<TimeMs>(t.period_days) * 24 * kHour;
    sc.config_overrides = json{{"recruiting", {{"policy", "static"}}}};
    // A quick platform: corpus sessions should not wait long for a crowd.
    sc.platform.first_claim = LognormalFit{std::log(8.0), 0.3};
    sc.platform.next_claim_gap_s = 5;

    AgentProfile crowd = profile_defaults(Behavior::Idler);
    crowd.count = 24;
    crowd.id_prefix = "crowd";
    crowd.heartbeat_s = {24, 28};
    crowd.ping_miss_p = 0;
    sc.workers.push_back(crowd);

    const int n_users = std::max(1, (t.sessions + 3) / 4);
    for (int u = 0; u < n_users; ++u) sc.users.push_back(UserScript{"user-" + std::to_string(u + 1), {}, {}, {}});

    // Draw every session's shape first, then nudge the sample so its means hit the
    // targets exactly: at n = 320 the sampling error alone is about 5%.
    const int n = t.sessions;
    std::vector<int> n_user(n), n_crowd(n), n_rejected(n);
    std::vector<double> duration(n), cap(n);
    const double shape = std::pow(t.duration_mean_min / std::max(t.duration_sd_min, 1e-9), 2);
    const double scale = t.duration_mean_min / shape;
    const int crowd_min = t.crowd_mean >= 1 ? 1 : 0;
    for (int i = 0; i < n; ++i) {
        n_user[i] = 1 + overdispersed_count(t.user_mean - 1, t.user_sd, rng);
        n_crowd[i] = crowd_min + overdispersed_count(t.crowd_mean - crowd_min, t.crowd_sd, rng);
        n_rejected[i] = overdispersed_count(t.rejected_mean, t.rejected_sd, rng);
    }
    match_mean(n_user, 1, t.user_mean, rng);
    match_mean(n_crowd, crowd_min, t.crowd_mean, rng);
    match_mean(n_rejected, 0, t.rejected_mean, rng);
    for (int i = 0; i < n; ++i) {
        duration[i] = t.duration_sd_min > 0 ? std::gamma_distribution<double>(shape, scale)(rng) : t.duration_mean_min;
        // After the handshake every user gap and the crowd's tail must stay inside the 15-minute idle timeout.
        cap[i] = n_user[i] >= 2 ? std::min(44.0, 14.0 * n_user[i]) : 44.0;
        duration[i] = std::min(duration[i], cap[i]);
    }
    if (std::accumulate(cap.begin(), cap.end(), 0.0) < t.duration_mean_min * n)
        throw Error(ErrorCode::InfeasibleTargets, "duration mean unreachable under the session timeouts");
    for (int round = 0; round < 50; ++round) {
        const double mean = std::accumulate(duration.begin(), duration.end(), 0.0) / n;
        if (std::abs(mean - t.duration_mean_min) < 1e-6) break;
        for (int i = 0; i < n; ++i) duration[i] = std::min(cap[i], duration[i] * t.duration_mean_min / mean);
    }

    const TimeMs slot = sc.duration / n;
    for (int i = 0; i < n; ++i) {
        UserScript& user = sc.users[i % n_users];
        const TimeMs start = i * slot + minutes_ms(uniform(0, 10, rng));
        const double d = duration[i];

        std::vector<double> user_times{0};
        bool spaced = false;
        for (int attempt = 0; attempt < 100 && !spaced && n_user[i] >= 2; ++attempt) {
            user_times.assign(1, 0);
            for (int k = 1; k < n_user[i]; ++k) user_times.push_back(uniform(0, d, rng));
            std::sort(user_times.begin(), user_times.end());
            spaced = d - user_times.back() <= 14;
            for (std::size_t k = 1; k < user_times.size() && spaced; ++k) spaced = user_times[k] - user_times[k - 1] <= 14;
        }
        if (n_user[i] >= 2 && !spaced) {
            user_times.clear();
            for (int k = 0; k < n_user[i]; ++k) user_times.push_back(d * k / n_user[i]);
        }
        if (n_crowd[i] == 0) user_times.back() = d;  // no crowd reply: the user's last message ends the session
        for (double m : user_times) user.messages.push_back({start + minutes_ms(m), pick(corpus_user_lines(), rng)});

        // The last chat message is the crowd's, exactly at the drawn duration.
        for (int k = 0; k < n_crowd[i]; ++k) {
            const double m = k == 0 ? d : uniform(0, d, rng);
            user.crowd_lines.push_back({start + minutes_ms(m), pick(helpful_replies(), rng), true});
        }
        for (int k = 0; k < n_rejected[i]; ++k)
            user.crowd_lines.push_back({start + minutes_ms(uniform(0, d, rng)), pick(vague_replies(), rng), false});
    }
    for (auto& u : sc.users) {
        std::stable_sort(u.messages.begin(), u.messages.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
        std::stable_sort(u.crowd_lines.begin(), u.crowd_lines.end(),
                         [](const auto& a, const auto& b) { return a.at < b.at; });
    }
    return sc;
}

Scenario random_scenario(std::uint64_t seed) {
    Rng rng(seed);
    Scenario sc;
    sc.name = "fuzz-" + std::to_string(seed);
    sc.seed = seed;
    sc.duration = minutes_ms(uniform(10, 60, rng));

    const int idle = uniform_int(2, 15, rng);
    sc.config_overrides = json{
        {"consensus", {{"threshold_percent", uniform_int(20, 60, rng)}, {"heartbeat_window_s", uniform_int(20, 60, rng)}}},
        {"session", {{"idle_timeout_min", idle}, {"handshake_timeout_min", uniform_int(idle, 45, rng)}}},
        {"incentives",
         {{"min_points_to_submit", uniform_int(5, 60, rng)}, {"waiting_interval_s", uniform_int(10, 60, rng)}}},
        {"recruiting",
         {{"policy", uniform_int(0, 3, rng) == 0 ? "static" : "dynamic"},
          {"target_crowd_size", uniform_int(1, 12, rng)},
          {"retainer_duration_min", uniform_int(5, 30, rng)},
          {"dispatch_promise_s", uniform_int(10, 30, rng)},
          {"strike_limit", uniform_int(1, 3, rng)},
          {"return_under_minimum", uniform_int(0, 1, rng) == 1}}},
    };

    sc.platform.first_claim = LognormalFit{std::log(uniform(5, 120, rng)), uniform(0.2, 1.2, rng)};
    sc.platform.next_claim_gap_s = uniform(2, 60, rng);
    sc.platform.failure_probability = uniform_int(0, 4, rng) == 0 ? uniform(0, 0.3, rng) : 0;
    if (uniform_int(0, 3, rng) == 0) {
        sc.platform.heavy_tail_probability = uniform(0, 0.2, rng);
        sc.platform.heavy_min_s = uniform(60, 300, rng);
        sc.platform.heavy_max_s = sc.platform.heavy_min_s + uniform(0, 300, rng);
    }
    sc.platform.slot_claim_gap_s = uniform(20, 600, rng);

    const Behavior all[] = {Behavior::Diligent,    Behavior::Confirmer, Behavior::SpammerMessage,
                            Behavior::SpammerFact, Behavior::SpammerVote, Behavior::Idler,
                            Behavior::EarlySubmitter};
    const int groups = uniform_int(1, 4, rng);
    for (int g = 0; g < groups; ++g) {
        AgentProfile a = profile_defaults(all[uniform_int(0, 6, rng)]);
        a.count = uniform_int(1, 8, rng);
        a.id_prefix = std::string(to_string(a.behavior)) + "-g" + std::to_string(g);
        a.submit_idle_s = uniform(0, 300, rng);
        a.ping_miss_p = uniform(0, 0.5, rng);
        a.fact_p = uniform(0, 0.3, rng);
        sc.workers.push_back(a);
    }

    const int n_users = uniform_int(1, 5, rng);
    for (int u = 0; u < n_users; ++u) {
        UserScript user;
        user.user_id = "fuzz-user-" + std::to_string(u + 1);
        if (uniform_int(0, 1, rng) == 0) {
            ReactiveUser r;
            r.start = minutes_ms(uniform(0, sc.duration / static_cast<double>(kMinute), rng));
            r.turns = uniform_int(0, 5, rng);
            r.reply_delay_s = {uniform(1, 30, rng), uniform(30, 120, rng)};
            r.sessions = uniform_int(1, 3, rng);
            r.return_gap_min = {1, uniform(1, 30, rng)};
            user.reactive = r;
        } else {
            const int n = uniform_int(1, 6, rng);
            for (int k = 0; k < n; ++k)
                user.messages.push_back(
                    {minutes_ms(uniform(0, sc.duration / static_cast<double>(kMinute), rng)), pick(corpus_user_lines(), rng)});
            std::sort(user.messages.begin(), user.messages.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
            const int lines = uniform_int(0, 4, rng);
            for (int k = 0; k < lines; ++k)
                user.crowd_lines.push_back({minutes_ms(uniform(0, sc.duration / static_cast<double>(kMinute), rng)),
                                            pick(helpful_replies(), rng), uniform_int(0, 3, rng) != 0});
        }
        sc.users.push_back(user);
    }
    if (uniform_int(0, 3, rng) == 0) {
        const UserId who = sc.users[uniform_int(0, n_users - 1, rng)].user_id;
        const TimeMs when = minutes_ms(uniform(0, sc.duration / static_cast<double>(kMinute), rng));
        sc.admin_actions.push_back({when, AdminActionType::Block, who, "abusive messages"});
        if (uniform_int(0, 1, rng) == 0)
            sc.admin_actions.push_back({when + minutes_ms(uniform(1, 20, rng)), AdminActionType::Unblock, who, ""});
    }
    return sc;
}

Scenario spam_corpus(int sessions, std::uint64_t seed) {
    if (sessions < 1) throw Error(ErrorCode::InvalidScenario, "spam corpus needs at least one session");
    Rng rng(seed);
    Scenario sc;
    sc.name = "spam-mix";
    sc.description = "Mostly diligent crowds with three planted spammers of each kind";
    sc.seed = seed;
    const int n_users = (sessions + 1) / 2;
    // Every user comes twice; about three conversations overlap at any time.
    const double spacing_min = 8;
    const double round_min = spacing_min * n_users;
    sc.duration = minutes_ms(2 * round_min + 60);
    sc.platform.first_claim = LognormalFit{std::log(30.0), 0.6};
    sc.platform.next_claim_gap_s = 10;

    auto group = [&](Behavior b, int count) {
        AgentProfile a = profile_defaults(b);
        a.count = count;
        sc.workers.push_back(a);
    };
    group(Behavior::Diligent, 28);
    group(Behavior::Confirmer, 6);
    group(Behavior::SpammerMessage, 3);
    group(Behavior::SpammerFact, 3);
    group(Behavior::SpammerVote, 3);

    for (int u = 0; u < n_users; ++u) {
        UserScript user;
        user.user_id = "user-" + std::to_string(u + 1);
        ReactiveUser r;
        r.start = minutes_ms(spacing_min * u + uniform(0, 2, rng));
        r.turns = uniform_int(3, 8, rng);
        r.sessions = sessions - 2 * u >= 2 ? 2 : 1;
        r.return_gap_min = {round_min - 40, round_min - 20};
        user.reactive = r;
        sc.users.push_back(user);
    }
    return sc;
}

Scenario latency_scenario(int sessions, std::span<const QuantilePoint> quantiles, double offset_s,
                          std::uint64_t seed) {
    if (sessions < 1) throw Error(ErrorCode::InvalidScenario, "latency scenario needs at least one session");
    Rng rng(seed);
    Scenario sc;
    sc.name = "latency-" + std::to_string(sessions);
    sc.description = "One-question conversations against a platform calibrated to the first-response quantiles";
    sc.seed = seed;
    const double spacing_min = 4;
    sc.duration = minutes_ms(spacing_min * sessions + 30);
    sc.config_overrides = json{{"recruiting", {{"policy", "static"}}}};
    sc.platform.first_claim = fit_lognormal_quantiles(quantiles, offset_s);
    sc.platform.next_claim_gap_s = 20;

    AgentProfile crowd = profile_defaults(Behavior::Diligent);
    crowd.count = 150;
    crowd.id_prefix = "crowd";
    crowd.propose_p = 1;
    crowd.fact_p = 0;
    crowd.ping_miss_p = 0;
    crowd.submit_idle_s = 60;
    sc.workers.push_back(crowd);

    for (int i = 0; i < sessions; ++i) {
        UserScript user;
        user.user_id = "user-" + std::to_string(i + 1);
        ReactiveUser r;
        r.start = minutes_ms(spacing_min * i + uniform(0, 1, rng));
        r.turns = 1;
        user.reactive = r;
        sc.users.push_back(user);
    }
    return sc;
}

}  // namespace chorus
