#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "distill/vec.hpp"

namespace distill {

/// Solution of the min-norm problem min_{w in simplex} || sum_i w_i g_i ||.
struct MgdaSolution {
    std::vector<double> weights;     // convex weights, one per input gradient
    std::vector<double> direction;   // sum_i w_i g_i
    double norm = 0.0;
    bool clamped = false;            // pair solve: unconstrained optimum fell outside [0, 1]
    bool stationary = false;         // all inputs were (numerically) zero
};

inline constexpr double kMgdaZeroNormSq = 1e-36;   // ||g||^2 below this counts as zero
inline constexpr double kMgdaDegenerateSq = 1e-24; // ||g1 - g2||^2 below this counts as equal

/// Closed-form two-gradient min-norm point. The unconstrained optimum
/// alpha_hat = ((g2 - g1) . g2) / ||g2 - g1||^2 is clamped to [0, 1];
/// weights are (alpha, 1 - alpha) for (g1, g2). Degenerate pairs
/// (g1 ~= g2) return alpha = 0.5; a pair of zero gradients returns the zero
/// direction with the stationary flag set.
inline MgdaSolution solve_mgda_pair(std::span<const double> g1, std::span<const double> g2) {
    if (g1.size() != g2.size()) {
        throw std::invalid_argument("solve_mgda_pair: gradient dimension mismatch");
    }
    if (g1.empty()) throw std::invalid_argument("solve_mgda_pair: empty gradients");

    MgdaSolution sol;
    const double n1 = norm_sq(g1);
    const double n2 = norm_sq(g2);
    if (n1 < kMgdaZeroNormSq && n2 < kMgdaZeroNormSq) {
        sol.weights = {0.5, 0.5};
        sol.direction.assign(g1.size(), 0.0);
        sol.norm = 0.0;
        sol.stationary = true;
        return sol;
    }

    const std::vector<double> diff = sub(g2, g1);
    const double denom = norm_sq(diff);
    double alpha;
    if (denom < kMgdaDegenerateSq) {
        alpha = 0.5;
    } else {
        const double alpha_hat = dot(diff, g2) / denom;
        alpha = std::clamp(alpha_hat, 0.0, 1.0);
        sol.clamped = (alpha != alpha_hat);
    }
    sol.weights = {alpha, 1.0 - alpha};
    sol.direction = lincomb(alpha, g1, 1.0 - alpha, g2);
    sol.norm = norm(sol.direction);
    return sol;
}

/// N-gradient min-norm point via Frank-Wolfe with exact line search on the
/// simplex. Terminates when the Frank-Wolfe duality gap drops below tol.
inline MgdaSolution solve_mgda_n(const std::vector<std::vector<double>>& grads,
                                 int max_iter = 10000, double tol = 1e-10) {
    if (grads.empty()) throw std::invalid_argument("solve_mgda_n: needs at least one gradient");
    const std::size_t n = grads.size();
    const std::size_t dim = grads[0].size();
    if (dim == 0) throw std::invalid_argument("solve_mgda_n: empty gradients");
    for (const auto& g : grads) {
        if (g.size() != dim) throw std::invalid_argument("solve_mgda_n: gradient dimension mismatch");
    }

    MgdaSolution sol;
    bool all_zero = true;
    for (const auto& g : grads) {
        if (norm_sq(g) >= kMgdaZeroNormSq) {
            all_zero = false;
            break;
        }
    }
    if (all_zero) {
        sol.weights.assign(n, 1.0 / static_cast<double>(n));
        sol.direction.assign(dim, 0.0);
        sol.norm = 0.0;
        sol.stationary = true;
        return sol;
    }
    if (n == 1) {
        sol.weights = {1.0};
        sol.direction = grads[0];
        sol.norm = norm(sol.direction);
        return sol;
    }

    // Gram matrix G[i][j] = g_i . g_j; the objective is f(w) = w^T G w.
    std::vector<std::vector<double>> gram(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            gram[i][j] = gram[j][i] = dot(grads[i], grads[j]);
        }
    }

    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<double> q(n, 0.0);  // q = G w
    for (int iter = 0; iter < max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += gram[i][j] * w[j];
            q[i] = s;
        }
        double f = 0.0;
        for (std::size_t i = 0; i < n; ++i) f += w[i] * q[i];
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (q[i] < q[best]) best = i;
        }
        const double gap = 2.0 * (f - q[best]);
        if (gap < tol) break;

        // Exact line search toward vertex `best`:
        // gamma* = (f - q[best]) / ||g_best - c||^2 with c the current point.
        const double denom = gram[best][best] - 2.0 * q[best] + f;
        if (denom <= 0.0) break;  // vertex coincides with current point
        const double gamma = std::clamp((f - q[best]) / denom, 0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) w[i] *= (1.0 - gamma);
        w[best] += gamma;
    }

    sol.weights = w;
    sol.direction.assign(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) axpy(w[i], grads[i], sol.direction);
    sol.norm = norm(sol.direction);
    return sol;
}

/// || sum_i w_i g_i || for convex weights w: zero exactly at Pareto-stationary
/// points. Throws if w is not on the probability simplex.
inline double pareto_stationarity_gap(const std::vector<std::vector<double>>& grads,
                                      std::span<const double> weights) {
    if (grads.empty()) throw std::invalid_argument("pareto_stationarity_gap: no gradients");
    if (weights.size() != grads.size()) {
        throw std::invalid_argument("pareto_stationarity_gap: weight count mismatch");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= -1e-12) || !std::isfinite(w)) {
            throw std::invalid_argument("pareto_stationarity_gap: weights must be non-negative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-8) {
        throw std::invalid_argument("pareto_stationarity_gap: weights must sum to 1");
    }
    const std::size_t dim = grads[0].size();
    std::vector<double> combo(dim, 0.0);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].size() != dim) {
            throw std::invalid_argument("pareto_stationarity_gap: gradient dimension mismatch");
        }
        axpy(weights[i], grads[i], combo);
    }
    return norm(combo);
}

}  // namespace distill
