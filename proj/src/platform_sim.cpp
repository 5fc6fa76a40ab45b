#include "chorus/platform_sim.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>

namespace chorus {

LognormalFit fit_lognormal_quantiles(std::span<const QuantilePoint> points, double offset_s) {
    const boost::math::normal standard;
    std::vector<double> z, y;
    for (const auto& p : points) {
        if (p.share <= 0 || p.share >= 1 || p.seconds <= offset_s)
            throw Error(ErrorCode::InvalidScenario, "quantile point outside (0, 1) or below the offset");
        z.push_back(boost::math::quantile(standard, p.share));
        y.push_back(std::log(p.seconds - offset_s));
    }
    if (z.size() == 1) return LognormalFit{y[0] - z[0], 1.0};
    if (z.empty()) throw Error(ErrorCode::InvalidScenario, "no quantile points to fit");
    double zm = 0, ym = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        zm += z[i];
        ym += y[i];
    }
    zm /= z.size();
    ym /= z.size();
    double szz = 0, szy = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        szz += (z[i] - zm) * (z[i] - zm);
        szy += (z[i] - zm) * (y[i] - ym);
    }
    if (szz == 0) throw Error(ErrorCode::InvalidScenario, "quantile shares must differ");
    const double sigma = szy / szz;
    if (sigma <= 0) throw Error(ErrorCode::InvalidScenario, "quantiles must increase with their shares");
    return LognormalFit{ym - sigma * zm, sigma};
}

double lognormal_cdf(const LognormalFit& fit, double x, double offset_s) {
    if (x <= offset_s) return 0;
    return boost::math::cdf(boost::math::normal(fit.mu, fit.sigma), std::log(x - offset_s));
}

SimulatedPlatform::SimulatedPlatform(ClaimLatencyModel model, std::mt19937_64& rng, ClaimScheduler schedule)
    : model_(model), rng_(rng), schedule_(std::move(schedule)) {}

double SimulatedPlatform::sample_first_claim_s() {
    if (model_.heavy_tail_probability > 0 &&
        std::bernoulli_distribution(model_.heavy_tail_probability)(rng_))
        return model_.tutorial_delay_s + std::uniform_real_distribution<double>(model_.heavy_min_s, model_.heavy_max_s)(rng_);
    return model_.tutorial_delay_s +
           std::lognormal_distribution<double>(model_.first_claim.mu, model_.first_claim.sigma)(rng_);
}

std::string SimulatedPlatform::post_hit(HitId hit, std::span<const AssignmentId> assignments, Cents, TimeMs now) {
    if (model_.failure_probability > 0 && std::bernoulli_distribution(model_.failure_probability)(rng_))
        throw Error(ErrorCode::PlatformUnavailable, "simulated outage");
    ++hits_posted_;
    double at_s = sample_first_claim_s();
    std::exponential_distribution<double> gap(1.0 / std::max(model_.next_claim_gap_s, 1e-3));
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (i > 0) at_s += gap(rng_);
        schedule_(now + static_cast<TimeMs>(std::llround(at_s * kSecond)), assignments[i]);
    }
    return "sim-" + std::to_string(hit.value);
}

void SimulatedPlatform::offer_slot(AssignmentId assignment, TimeMs now, TimeMs expires_at) {
    std::exponential_distribution<double> wait(1.0 / std::max(model_.slot_claim_gap_s, 1e-3));
    const TimeMs at = now + static_cast<TimeMs>(std::llround((model_.tutorial_delay_s + wait(rng_)) * kSecond));
    if (at < expires_at) schedule_(at, assignment);
}

void SimulatedPlatform::expire_assignment(AssignmentId) { ++expired_; }

void SimulatedPlatform::pay_bonus(const WorkerId&, Cents amount) { bonuses_paid_ += amount; }

}  // namespace chorus
