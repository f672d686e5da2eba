#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "distill/mgda.hpp"
#include "distill/oracle.hpp"
#include "distill/schedule.hpp"
#include "distill/vec.hpp"

namespace distill {

/// The two guidance components at one noised state, in score units:
///   delta_cg          = (eps_hat(x_t, y) - eps_hat(x_t, null)) / sigma_t
///                     = -grad_x log p_t(y | x_t)       (classifier direction)
///   delta_sg          = eps_hat(x_t, null) / sigma_t
///                     = -grad_x log p_t(x_t)           (smoothing direction)
///   delta_sg_residual = delta_sg - eps / sigma_t       (noise-subtracted variant)
struct GuidancePair {
    std::vector<double> delta_cg;
    std::vector<double> delta_sg;
    std::vector<double> delta_sg_residual;
    std::vector<double> eps;  // the noise draw the pair was computed with
    int t = 0;
    double sigma_t = 0.0;
};

/// Noises x0 with the given eps at timestep t and evaluates both guidance
/// components against the oracle. Requires a class label and 1 <= t <= T.
inline GuidancePair decompose(const GmmOracle& oracle, const NoiseSchedule& sched,
                              std::span<const double> x0, int t, Label label,
                              std::span<const double> eps) {
    if (label.is_null()) throw std::invalid_argument("decompose: needs a class label");
    if (t < 1) throw std::invalid_argument("decompose: requires t >= 1");
    const std::vector<double> x_t = add_noise(sched, x0, t, eps);
    if (!all_finite(x_t)) throw std::invalid_argument("decompose: non-finite noised state");

    const EpsPrediction cond = predict_eps(oracle, sched, x_t, t, label);
    const EpsPrediction uncond = predict_eps(oracle, sched, x_t, t, Label::null());

    GuidancePair pair;
    pair.t = t;
    pair.sigma_t = sched.sigma_at(t);
    pair.eps.assign(eps.begin(), eps.end());
    const double inv_sigma = 1.0 / pair.sigma_t;
    pair.delta_cg = lincomb(inv_sigma, cond.eps_hat, -inv_sigma, uncond.eps_hat);
    pair.delta_sg = scaled(uncond.eps_hat, inv_sigma);
    pair.delta_sg_residual = lincomb(1.0, pair.delta_sg, -inv_sigma, eps);
    return pair;
}

enum class CombinerKind { Sds, Csd, FixedRatio, Bsd };

/// Rule for combining the two guidance components into one step direction.
/// When subtract_eps is set the smoothing term is the noise-subtracted
/// residual (the SDS default); otherwise the plain smoothing direction.
struct Combiner {
    CombinerKind kind = CombinerKind::Bsd;
    double cfg_scale = 100.0;  // Sds
    double u = 1.0;            // FixedRatio classifier coefficient
    double v = 1.0;            // FixedRatio smoothing coefficient
    double lambda = 25.0;      // Bsd classifier rescale
    bool subtract_eps = false;

    static Combiner sds(double cfg_scale = 100.0, bool subtract_eps = true) {
        Combiner c;
        c.kind = CombinerKind::Sds;
        c.cfg_scale = cfg_scale;
        c.subtract_eps = subtract_eps;
        return c;
    }

    static Combiner csd() {
        Combiner c;
        c.kind = CombinerKind::Csd;
        return c;
    }

    static Combiner fixed_ratio(double u, double v, bool subtract_eps = false) {
        Combiner c;
        c.kind = CombinerKind::FixedRatio;
        c.u = u;
        c.v = v;
        c.subtract_eps = subtract_eps;
        return c;
    }

    static Combiner bsd(double lambda = 25.0, bool subtract_eps = false) {
        Combiner c;
        c.kind = CombinerKind::Bsd;
        c.lambda = lambda;
        c.subtract_eps = subtract_eps;
        return c;
    }

    void validate() const {
        switch (kind) {
            case CombinerKind::Sds:
                if (!(cfg_scale > 0.0)) throw std::invalid_argument("combiner: cfg_scale must be positive");
                return;
            case CombinerKind::Csd:
                return;
            case CombinerKind::FixedRatio:
                if (!(u >= 0.0) || !(v >= 0.0) || !(u + v > 0.0)) {
                    throw std::invalid_argument(
                        "combiner: fixed-ratio needs u >= 0, v >= 0, u + v > 0");
                }
                return;
            case CombinerKind::Bsd:
                if (!(lambda > 0.0)) throw std::invalid_argument("combiner: lambda must be positive");
                return;
        }
        throw std::logic_error("combiner: unknown kind");
    }
};

/// A combined step direction plus the scalar diagnostics recorded per step.
struct StepDirection {
    std::vector<double> direction;
    std::optional<double> alpha_mgda;  // balanced combiner only
    double dot_cg_sg = 0.0;            // delta_cg . delta_sg (raw components)
    double norm_cg = 0.0;
    double norm_sg = 0.0;
};

/// Applies the combiner to a guidance pair:
///   Sds:        cfg_scale * delta_cg + smoothing
///   Csd:        delta_cg
///   FixedRatio: u * delta_cg + v * smoothing
///   Bsd:        alpha * lambda * delta_cg + (1 - alpha) * smoothing, with
///               alpha the clamped min-norm weight of the pair
///               (lambda * delta_cg, smoothing).
/// "smoothing" is delta_sg_residual when subtract_eps is set, else delta_sg.
inline StepDirection combine(const GuidancePair& pair, const Combiner& comb) {
    comb.validate();
    StepDirection out;
    out.dot_cg_sg = dot(pair.delta_cg, pair.delta_sg);
    out.norm_cg = norm(pair.delta_cg);
    out.norm_sg = norm(pair.delta_sg);
    const std::vector<double>& smooth = comb.subtract_eps ? pair.delta_sg_residual : pair.delta_sg;

    switch (comb.kind) {
        case CombinerKind::Sds:
            out.direction = lincomb(comb.cfg_scale, pair.delta_cg, 1.0, smooth);
            return out;
        case CombinerKind::Csd:
            out.direction = pair.delta_cg;
            return out;
        case CombinerKind::FixedRatio:
            out.direction = lincomb(comb.u, pair.delta_cg, comb.v, smooth);
            return out;
        case CombinerKind::Bsd: {
            const std::vector<double> g1 = scaled(pair.delta_cg, comb.lambda);
            const MgdaSolution sol = solve_mgda_pair(g1, smooth);
            out.direction = sol.direction;
            out.alpha_mgda = sol.weights[0];
            return out;
        }
    }
    throw std::logic_error("combine: unknown combiner kind");
}

/// Angle/projection diagnostics of one combined step.
struct StepStats {
    bool angle_obtuse = false;   // delta_cg . delta_sg < 0
    double proj_cg = 0.0;        // direction . delta_cg
    double proj_sg = 0.0;        // direction . delta_sg
    double norm_sg = 0.0;
    double norm_sg_residual = 0.0;
    int t = 0;
};

inline StepStats step_statistics(const GuidancePair& pair, const StepDirection& dir) {
    StepStats s;
    s.angle_obtuse = dir.dot_cg_sg < 0.0;
    s.proj_cg = dot(dir.direction, pair.delta_cg);
    s.proj_sg = dot(dir.direction, pair.delta_sg);
    s.norm_sg = norm(pair.delta_sg);
    s.norm_sg_residual = norm(pair.delta_sg_residual);
    s.t = pair.t;
    return s;
}

}  // namespace distill
