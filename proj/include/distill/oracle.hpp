#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "distill/rng.hpp"
#include "distill/schedule.hpp"
#include "distill/vec.hpp"

namespace distill {

/// Class label for conditional queries. Label::null() is the unconditional
/// (prior-weighted mixture) label.
class Label {
public:
    static Label null() { return Label(-1); }
    static Label cls(int index) {
        if (index < 0) throw std::invalid_argument("Label::cls: index must be non-negative");
        return Label(index);
    }

    bool is_null() const { return index_ < 0; }

    int index() const {
        if (is_null()) throw std::logic_error("Label: unconditional label has no class index");
        return index_;
    }

    bool operator==(const Label& other) const { return index_ == other.index_; }

private:
    explicit Label(int index) : index_(index) {}
    int index_;
};

/// One isotropic Gaussian component: weight within its class, mean, and
/// standard deviation (cov_scale = tau, covariance tau^2 * I).
struct GmmComponent {
    double weight = 1.0;
    std::vector<double> mean;
    double cov_scale = 1.0;
};

struct GmmClass {
    std::vector<GmmComponent> components;
};

/// Class-conditional Gaussian-mixture data distribution with isotropic
/// components. Under the schedule's forward process each component stays
/// Gaussian: x_t | (component j) ~ N(alpha_t * mu_j, (alpha_t^2 tau_j^2 + sigma_t^2) I),
/// so densities, scores and posterior statistics are available in closed form
/// at every timestep.
struct GmmOracle {
    int dim = 0;
    std::vector<GmmClass> classes;
    std::vector<double> class_prior;

    void validate() const {
        if (dim < 1) throw std::invalid_argument("oracle: dim must be positive");
        if (classes.empty()) throw std::invalid_argument("oracle: needs at least one class");
        if (class_prior.size() != classes.size()) {
            throw std::invalid_argument("oracle: class_prior size must match class count");
        }
        double prior_sum = 0.0;
        for (double p : class_prior) {
            if (!(p > 0.0) || !std::isfinite(p)) {
                throw std::invalid_argument("oracle: class priors must be strictly positive");
            }
            prior_sum += p;
        }
        if (std::abs(prior_sum - 1.0) > 1e-9) {
            throw std::invalid_argument("oracle: class priors must sum to 1");
        }
        for (const GmmClass& cls : classes) {
            if (cls.components.empty()) {
                throw std::invalid_argument("oracle: every class needs at least one component");
            }
            double wsum = 0.0;
            for (const GmmComponent& c : cls.components) {
                if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
                    throw std::invalid_argument("oracle: component weights must be strictly positive");
                }
                if (!(c.cov_scale > 0.0) || !std::isfinite(c.cov_scale)) {
                    throw std::invalid_argument("oracle: cov_scale must be strictly positive");
                }
                if (c.mean.size() != static_cast<std::size_t>(dim)) {
                    throw std::invalid_argument("oracle: component mean dimension mismatch");
                }
                if (!all_finite(c.mean)) {
                    throw std::invalid_argument("oracle: component means must be finite");
                }
                wsum += c.weight;
            }
            if (std::abs(wsum - 1.0) > 1e-9) {
                throw std::invalid_argument("oracle: component weights must sum to 1 per class");
            }
        }
    }

    int num_classes() const { return static_cast<int>(classes.size()); }

    void check_label(Label label) const {
        if (!label.is_null() && label.index() >= num_classes()) {
            throw std::invalid_argument("oracle: label index " + std::to_string(label.index()) +
                                        " out of range for " + std::to_string(num_classes()) +
                                        " classes");
        }
    }

    /// Prior-weighted mean of the full data mixture.
    std::vector<double> global_mean() const {
        std::vector<double> m(static_cast<std::size_t>(dim), 0.0);
        for (std::size_t y = 0; y < classes.size(); ++y) {
            for (const GmmComponent& c : classes[y].components) {
                axpy(class_prior[y] * c.weight, c.mean, m);
            }
        }
        return m;
    }
};

namespace detail {

/// One effective mixture term at a fixed timestep: log weight, data-space
/// mean, and noised per-dimension variance.
struct NoisedTerm {
    double log_w;
    const std::vector<double>* mean;
    double var;
};

inline void collect_terms(const GmmOracle& oracle, double alpha_t, double sigma_t, Label label,
                          std::vector<NoisedTerm>& out) {
    out.clear();
    const double a2 = alpha_t * alpha_t;
    const double s2 = sigma_t * sigma_t;
    auto push_class = [&](std::size_t y, double log_prior) {
        for (const GmmComponent& c : oracle.classes[y].components) {
            out.push_back(NoisedTerm{log_prior + std::log(c.weight), &c.mean,
                                     a2 * c.cov_scale * c.cov_scale + s2});
        }
    };
    if (label.is_null()) {
        for (std::size_t y = 0; y < oracle.classes.size(); ++y) {
            push_class(y, std::log(oracle.class_prior[y]));
        }
    } else {
        push_class(static_cast<std::size_t>(label.index()), 0.0);
    }
}

inline double log_gauss_iso(std::span<const double> x, const std::vector<double>& mean,
                            double alpha_t, double var) {
    constexpr double kLog2Pi = 1.8378770664093454836;
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - alpha_t * mean[i];
        q += d * d;
    }
    const double dim = static_cast<double>(x.size());
    return -0.5 * (q / var + dim * (kLog2Pi + std::log(var)));
}

inline void check_point(const GmmOracle& oracle, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(oracle.dim)) {
        throw std::invalid_argument("oracle: point dimension mismatch");
    }
    if (!all_finite(x)) throw std::invalid_argument("oracle: non-finite input point");
}

}  // namespace detail

/// log p_t(x_t | label) under the noised mixture (label = null for the
/// unconditional marginal). t = 0 is the data distribution itself.
inline double log_density_t(const GmmOracle& oracle, const NoiseSchedule& sched,
                            std::span<const double> x, int t, Label label) {
    detail::check_point(oracle, x);
    oracle.check_label(label);
    sched.check_t(t);
    const double alpha_t = sched.alpha_at(t);
    const double sigma_t = sched.sigma_at(t);

    std::vector<detail::NoisedTerm> terms;
    detail::collect_terms(oracle, alpha_t, sigma_t, label, terms);

    std::vector<double> logs(terms.size());
    std::size_t max_idx = 0;
    for (std::size_t j = 0; j < terms.size(); ++j) {
        logs[j] = terms[j].log_w + detail::log_gauss_iso(x, *terms[j].mean, alpha_t, terms[j].var);
        if (logs[j] > logs[max_idx]) max_idx = j;
    }
    double rest = 0.0;
    for (std::size_t j = 0; j < logs.size(); ++j) {
        if (j != max_idx) rest += std::exp(logs[j] - logs[max_idx]);
    }
    return logs[max_idx] + std::log1p(rest);
}

/// score_t(x_t | label) = grad_x log p_t(x_t | label), via responsibility-
/// weighted per-component Gaussian scores.
inline std::vector<double> score_t(const GmmOracle& oracle, const NoiseSchedule& sched,
                                   std::span<const double> x, int t, Label label) {
    detail::check_point(oracle, x);
    oracle.check_label(label);
    sched.check_t(t);
    const double alpha_t = sched.alpha_at(t);
    const double sigma_t = sched.sigma_at(t);

    std::vector<detail::NoisedTerm> terms;
    detail::collect_terms(oracle, alpha_t, sigma_t, label, terms);

    std::vector<double> logs(terms.size());
    double max_term = -HUGE_VAL;
    for (std::size_t j = 0; j < terms.size(); ++j) {
        logs[j] = terms[j].log_w + detail::log_gauss_iso(x, *terms[j].mean, alpha_t, terms[j].var);
        if (logs[j] > max_term) max_term = logs[j];
    }
    double denom = 0.0;
    for (double lg : logs) denom += std::exp(lg - max_term);

    std::vector<double> score(x.size(), 0.0);
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const double resp = std::exp(logs[j] - max_term) / denom;
        if (resp == 0.0) continue;
        const double c = resp / terms[j].var;
        const std::vector<double>& mu = *terms[j].mean;
        for (std::size_t i = 0; i < x.size(); ++i) {
            score[i] += c * (alpha_t * mu[i] - x[i]);
        }
    }
    return score;
}

/// Ideal noise prediction at (x_t, t, label).
struct EpsPrediction {
    std::vector<double> eps_hat;
    int t = 0;
    Label label = Label::null();
};

/// eps_hat = -sigma_t * score_t(x_t | label): the posterior-mean noise of the
/// forward process. Requires t >= 1 (sigma_0 = 0 carries no noise to predict).
inline EpsPrediction predict_eps(const GmmOracle& oracle, const NoiseSchedule& sched,
                                 std::span<const double> x, int t, Label label) {
    if (t < 1) throw std::invalid_argument("predict_eps: requires t >= 1");
    EpsPrediction out;
    out.eps_hat = score_t(oracle, sched, x, t, label);
    const double neg_sigma = -sched.sigma_at(t);
    for (double& v : out.eps_hat) v *= neg_sigma;
    out.t = t;
    out.label = label;
    return out;
}

/// log p_t(label | x_t), computed directly from the per-class joint log
/// densities so near-saturated posteriors keep their tiny log values instead
/// of collapsing into floating-point cancellation noise: when the label
/// dominates, the result is the exact -log1p of the competing mass.
inline double log_posterior_t(const GmmOracle& oracle, const NoiseSchedule& sched,
                              std::span<const double> x, int t, Label label) {
    if (label.is_null()) throw std::invalid_argument("log_posterior_t: needs a class label");
    oracle.check_label(label);
    const std::size_t yi = static_cast<std::size_t>(label.index());
    std::vector<double> joint(oracle.classes.size());
    std::size_t max_idx = 0;
    for (std::size_t y = 0; y < oracle.classes.size(); ++y) {
        joint[y] = std::log(oracle.class_prior[y]) +
                   log_density_t(oracle, sched, x, t, Label::cls(static_cast<int>(y)));
        if (joint[y] > joint[max_idx]) max_idx = y;
    }
    if (joint[yi] == joint[max_idx]) {
        double rest = 0.0;
        for (std::size_t y = 0; y < joint.size(); ++y) {
            if (y != yi) rest += std::exp(joint[y] - joint[yi]);
        }
        return -std::log1p(rest);
    }
    double rest = 0.0;
    for (std::size_t y = 0; y < joint.size(); ++y) {
        if (y != max_idx) rest += std::exp(joint[y] - joint[max_idx]);
    }
    return joint[yi] - (joint[max_idx] + std::log1p(rest));
}

/// Draws x0 from the data distribution (label = null samples the full
/// mixture; a class label samples that class).
inline std::vector<double> sample_x0(const GmmOracle& oracle, Rng& rng, Label label) {
    oracle.check_label(label);
    std::size_t y;
    if (label.is_null()) {
        const double u = rng.uniform01();
        double acc = 0.0;
        y = oracle.classes.size() - 1;
        for (std::size_t k = 0; k < oracle.classes.size(); ++k) {
            acc += oracle.class_prior[k];
            if (u < acc) {
                y = k;
                break;
            }
        }
    } else {
        y = static_cast<std::size_t>(label.index());
    }
    const GmmClass& cls = oracle.classes[y];
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t j = cls.components.size() - 1;
    for (std::size_t k = 0; k < cls.components.size(); ++k) {
        acc += cls.components[k].weight;
        if (u < acc) {
            j = k;
            break;
        }
    }
    const GmmComponent& comp = cls.components[j];
    std::vector<double> x = comp.mean;
    for (double& v : x) v += comp.cov_scale * rng.normal();
    return x;
}

}  // namespace distill
