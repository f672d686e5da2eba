#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "distill/rng.hpp"
#include "distill/vec.hpp"

namespace distill {

/// Discrete-time noising schedule. alpha[t] is the signal coefficient
/// (the square root of the cumulative signal-variance product) and
/// sigma[t] = sqrt(1 - alpha[t]^2) the matching noise scale, so a noised
/// sample is x_t = alpha[t] * x0 + sigma[t] * eps with unit total variance.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> alpha;  // size T+1, alpha[0] = 1
    std::vector<double> sigma;  // size T+1, sigma[0] = 0

    double alpha_at(int t) const {
        check_t(t);
        return alpha[static_cast<std::size_t>(t)];
    }

    double sigma_at(int t) const {
        check_t(t);
        return sigma[static_cast<std::size_t>(t)];
    }

    void check_t(int t) const {
        if (t < 0 || t > T) {
            throw std::invalid_argument("timestep out of range: t=" + std::to_string(t) +
                                        ", valid range is [0, " + std::to_string(T) + "]");
        }
    }

    /// Throws if the table violates the schedule contract.
    void validate() const {
        if (T < 2) throw std::invalid_argument("schedule: T must be at least 2");
        if (alpha.size() != static_cast<std::size_t>(T) + 1 || sigma.size() != alpha.size()) {
            throw std::invalid_argument("schedule: table size must be T+1");
        }
        if (alpha[0] != 1.0) throw std::invalid_argument("schedule: alpha[0] must equal 1");
        for (int t = 0; t <= T; ++t) {
            const double a = alpha[static_cast<std::size_t>(t)];
            const double s = sigma[static_cast<std::size_t>(t)];
            if (!(a > 0.0 && a <= 1.0)) {
                throw std::invalid_argument("schedule: alpha[" + std::to_string(t) +
                                            "] outside (0, 1]");
            }
            if (t > 0 && !(a < alpha[static_cast<std::size_t>(t) - 1])) {
                throw std::invalid_argument("schedule: alpha must be strictly decreasing at t=" +
                                            std::to_string(t));
            }
            if (std::abs(a * a + s * s - 1.0) > 1e-12) {
                throw std::invalid_argument("schedule: alpha^2 + sigma^2 != 1 at t=" +
                                            std::to_string(t));
            }
        }
        if (alpha[static_cast<std::size_t>(T)] > 1e-2) {
            throw std::invalid_argument("schedule: alpha[T] must not exceed 1e-2 (got " +
                                        std::to_string(alpha[static_cast<std::size_t>(T)]) + ")");
        }
    }
};

enum class ScheduleFamily { ScaledLinear, Cosine };

struct ScheduleParams {
    double beta_1 = 1e-4;         // scaled-linear: first-step variance increment
    double beta_T = 2e-2;         // scaled-linear: last-step variance increment
    double cosine_offset = 0.008; // cosine: small offset keeping early ratios < 1
    double max_beta = 0.999;      // cosine: per-step variance clip
};

/// Builds the schedule table for the requested family and validates it.
/// The scaled-linear family interpolates beta linearly between beta_1 and
/// beta_T; the cosine family follows the squared-cosine signal curve with
/// per-step ratios clipped so the final step keeps a positive signal.
inline NoiseSchedule build_schedule(int T, ScheduleFamily family, const ScheduleParams& params = {}) {
    if (T < 2) throw std::invalid_argument("build_schedule: T must be at least 2");

    NoiseSchedule s;
    s.T = T;
    s.alpha.assign(static_cast<std::size_t>(T) + 1, 0.0);
    s.sigma.assign(static_cast<std::size_t>(T) + 1, 0.0);

    std::vector<double> abar(static_cast<std::size_t>(T) + 1, 1.0);
    if (family == ScheduleFamily::ScaledLinear) {
        if (!(params.beta_1 > 0.0) || !(params.beta_T < 1.0) || !(params.beta_1 < params.beta_T)) {
            throw std::invalid_argument(
                "build_schedule: scaled-linear requires 0 < beta_1 < beta_T < 1");
        }
        for (int t = 1; t <= T; ++t) {
            const double frac = static_cast<double>(t - 1) / static_cast<double>(T - 1);
            const double beta = params.beta_1 + frac * (params.beta_T - params.beta_1);
            abar[static_cast<std::size_t>(t)] = abar[static_cast<std::size_t>(t) - 1] * (1.0 - beta);
        }
    } else {
        if (!(params.cosine_offset > 0.0) || !(params.max_beta > 0.0 && params.max_beta < 1.0)) {
            throw std::invalid_argument(
                "build_schedule: cosine requires cosine_offset > 0 and max_beta in (0, 1)");
        }
        const double kHalfPi = 1.57079632679489661923;
        auto f = [&](double t) {
            const double z = (t / T + params.cosine_offset) / (1.0 + params.cosine_offset);
            const double c = std::cos(z * kHalfPi);
            return c * c;
        };
        for (int t = 1; t <= T; ++t) {
            double ratio = f(static_cast<double>(t)) / f(static_cast<double>(t - 1));
            const double min_ratio = 1.0 - params.max_beta;
            if (ratio < min_ratio) ratio = min_ratio;
            abar[static_cast<std::size_t>(t)] = abar[static_cast<std::size_t>(t) - 1] * ratio;
        }
    }

    for (int t = 0; t <= T; ++t) {
        const double ab = abar[static_cast<std::size_t>(t)];
        s.alpha[static_cast<std::size_t>(t)] = std::sqrt(ab);
        s.sigma[static_cast<std::size_t>(t)] = std::sqrt(1.0 - ab);
    }
    s.validate();
    return s;
}

/// x_t = alpha[t] * x0 + sigma[t] * eps. Valid for 0 <= t <= T (t = 0 returns
/// x0 exactly).
inline std::vector<double> add_noise(const NoiseSchedule& sched, std::span<const double> x0,
                                     int t, std::span<const double> eps) {
    sched.check_t(t);
    if (x0.size() != eps.size()) throw std::invalid_argument("add_noise: x0/eps dimension mismatch");
    return lincomb(sched.alpha_at(t), x0, sched.sigma_at(t), eps);
}

/// Uniform sampler over the interior timestep window [t_min, t_max].
class TimestepSampler {
public:
    TimestepSampler(int t_min, int t_max, std::uint64_t seed)
        : t_min_(t_min), t_max_(t_max), rng_(seed) {
        if (t_min < 1 || t_max < t_min) {
            throw std::invalid_argument("TimestepSampler: need 1 <= t_min <= t_max");
        }
    }

    int next() { return static_cast<int>(rng_.uniform_int(t_min_, t_max_)); }

    int t_min() const { return t_min_; }
    int t_max() const { return t_max_; }

private:
    int t_min_;
    int t_max_;
    Rng rng_;
};

inline int sample_timestep(TimestepSampler& sampler) { return sampler.next(); }

/// Default interior window: drop the lowest and highest 2% of timesteps.
inline int default_t_min(int T) { return std::max(1, static_cast<int>(std::lround(0.02 * T))); }
inline int default_t_max(int T) { return std::min(T, static_cast<int>(std::lround(0.98 * T))); }

enum class WeightKind { AlphaSquared, Constant };

/// Per-timestep loss weight omega(t).
struct WeightRule {
    WeightKind kind = WeightKind::AlphaSquared;

    double weight(const NoiseSchedule& sched, int t) const {
        const double a = sched.alpha_at(t);
        switch (kind) {
            case WeightKind::AlphaSquared: return a * a;
            case WeightKind::Constant: return 1.0;
        }
        throw std::logic_error("WeightRule: unknown kind");
    }
};

}  // namespace distill
