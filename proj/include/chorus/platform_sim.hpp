#pragma once

#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "chorus/recruiting.hpp"

namespace chorus {

struct QuantilePoint {
    double seconds = 0;
    double share = 0;  // P(latency <= seconds)
};

struct LognormalFit {
    double mu = 0;
    double sigma = 1;
};

/// Least-squares fit of ln(q - offset) = mu + sigma * z(share) over the given points.
/// The offset absorbs a fixed delay added after the sampled latency (for example
/// the time a worker takes to write the first reply).
LognormalFit fit_lognormal_quantiles(std::span<const QuantilePoint> points, double offset_s = 0);

/// P(X <= x) for X = offset + lognormal(mu, sigma).
double lognormal_cdf(const LognormalFit& fit, double x, double offset_s = 0);

struct ClaimLatencyModel {
    LognormalFit first_claim{3.905, 0.747};  // seconds until the first assignment is taken
    double next_claim_gap_s = 15;             // mean exponential gap between later claims
    double tutorial_delay_s = 0;              // fixed per-worker delay before claiming
    double heavy_tail_probability = 0;        // first claim drawn from [heavy_min_s, heavy_max_s] instead
    double heavy_min_s = 1200;
    double heavy_max_s = 1800;
    double slot_claim_gap_s = 300;            // mean wait before a retainer slot is taken
    double failure_probability = 0;           // post_hit throws PlatformUnavailable
};

/// Deterministic stand-in for a crowd marketplace. Every random draw comes from the
/// generator it is given, so a seeded simulation reproduces the same claims.
class SimulatedPlatform : public CrowdPlatformAdapter {
public:
    using ClaimScheduler = std::function<void(TimeMs at, AssignmentId assignment)>;

    SimulatedPlatform(ClaimLatencyModel model, std::mt19937_64& rng, ClaimScheduler schedule);

    std::string post_hit(HitId hit, std::span<const AssignmentId> assignments, Cents base_pay,
                         TimeMs now) override;
    void expire_assignment(AssignmentId assignment) override;
    void pay_bonus(const WorkerId& worker, Cents amount) override;

    /// A retainer slot opened at `now`; maybe schedules one claim before `expires_at`.
    void offer_slot(AssignmentId assignment, TimeMs now, TimeMs expires_at);

    /// Seconds until the first claim of a fresh HIT.
    double sample_first_claim_s();

    const ClaimLatencyModel& model() const { return model_; }
    Cents bonuses_paid() const { return bonuses_paid_; }
    int hits_posted() const { return hits_posted_; }
    int expired() const { return expired_; }

private:
    ClaimLatencyModel model_;
    std::mt19937_64& rng_;
    ClaimScheduler schedule_;
    Cents bonuses_paid_;
    int hits_posted_ = 0;
    int expired_ = 0;
};

}  // namespace chorus
