#pragma once

#include <string>
#include <vector>

#include "chorus/core.hpp"

namespace chorus {

struct ConsensusConfig {
    int threshold_percent = 40;
    TimeMs heartbeat_window = 30 * kSecond;
};

struct SessionConfig {
    TimeMs handshake_timeout = 45 * kMinute;  // before the three-way handshake, from creation
    TimeMs idle_timeout = 15 * kMinute;       // after it, from the latest user message
};

struct IncentiveConfig {
    int propose_points = 2;
    int vote_points = 1;
    int proposal_accepted_points = 5;
    int post_fact_points = 2;
    int waiting_points = 1;
    TimeMs waiting_interval = 30 * kSecond;
    int min_points_to_submit = 40;
    MicroDollars bonus_per_point{5'000};  // $0.005
};

enum class RecruitPolicy { Dynamic, Static };

struct RecruitingConfig {
    RecruitPolicy policy = RecruitPolicy::Dynamic;
    int target_crowd_size = 10;
    int platform_max_assignments = 100;
    Cents base_pay{20};
    TimeMs retainer_duration = 30 * kMinute;
    TimeMs dispatch_promise = 20 * kSecond;
    Cents retainer_rate{20};  // per retainer_rate_interval of waiting
    TimeMs retainer_rate_interval = 30 * kMinute;
    int strike_limit = 2;
    bool return_under_minimum = true;
};

struct FeeSchedule {
    int small_hit_percent = 20;
    int large_hit_percent = 40;
    int large_hit_min_assignments = 10;
    int retainer_percent = 20;
    int bonus_percent = 20;  // commission charged on bonus payments

    int percent_for(int n_assignments) const {
        return n_assignments >= large_hit_min_assignments ? large_hit_percent : small_hit_percent;
    }
};

struct GatewayConfig {
    std::vector<std::string> welcome_messages = {
        "Hi! I'm Chorus, an assistant you can ask about anything, anytime.",
        "Welcome to Chorus! Ask me anything and I'll do my best to help.",
    };
    std::vector<std::string> wait_messages = {
        "What can I help you with? I'll be able to chat in a few minutes.",
        "Give me a moment to get ready, I'll be with you shortly.",
        "Hang on a minute, I'll reply as soon as I can.",
    };
    std::uint64_t rng_seed = 2016;
    std::string admin_token = "chorus-admin";
};

struct Config {
    ConsensusConfig consensus;
    SessionConfig session;
    IncentiveConfig incentives;
    RecruitingConfig recruiting;
    FeeSchedule fees;
    GatewayConfig gateway;

    /// Throws Error{InvalidConfig} on a negative value or an empty reply pool.
    void validate() const;
};

// The on-disk layout uses human units: seconds/minutes and dollars.
void to_json(json& j, const Config& c);
void from_json(const json& j, Config& c);

/// Merge `overrides` (same layout, any subset of keys) into `base`.
Config merge_config(const Config& base, const json& overrides);

/// Reads a JSON config file, then applies CHORUS_<SECTION>_<KEY> environment overrides.
Config load_config(const std::string& path);
Config apply_env_overrides(const Config& base);

}  // namespace chorus
