#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "distill/guidance.hpp"
#include "distill/oracle.hpp"
#include "distill/rng.hpp"
#include "distill/schedule.hpp"
#include "distill/vec.hpp"

namespace distill {

/// A rendered sample plus whatever intermediates the generator wants to reuse
/// in its VJP (the splat generator caches per-splat kernel values).
struct RenderOutput {
    std::vector<double> image;
    std::vector<double> kernels;  // splat generator: size n_splats * width * height
};

/// Identity generator: the parameters are the sample.
class DirectGenerator {
public:
    explicit DirectGenerator(std::vector<double> x0) : x_(std::move(x0)) {
        if (x_.empty()) throw std::invalid_argument("DirectGenerator: empty parameter vector");
    }

    std::size_t output_dim() const { return x_.size(); }
    std::size_t param_count() const { return x_.size(); }

    RenderOutput render() const { return RenderOutput{x_, {}}; }

    std::vector<double> vjp(const RenderOutput&, std::span<const double> cotangent) const {
        if (cotangent.size() != x_.size()) {
            throw std::invalid_argument("DirectGenerator::vjp: cotangent dimension mismatch");
        }
        return std::vector<double>(cotangent.begin(), cotangent.end());
    }

    std::vector<double> flat_params() const { return x_; }

    void set_flat_params(std::span<const double> p) {
        if (p.size() != x_.size()) {
            throw std::invalid_argument("DirectGenerator: parameter count mismatch");
        }
        x_.assign(p.begin(), p.end());
    }

private:
    std::vector<double> x_;
};

/// One isotropic 2D Gaussian splat. The rendered contribution to pixel p is
/// sigmoid(opacity_logit) * color * exp(-||p - center||^2 / (2 s^2)) with
/// s = exp(log_scale); splats composite additively.
struct Splat {
    double cx = 0.5;
    double cy = 0.5;
    double log_scale = -3.0;
    double color[3] = {0.5, 0.5, 0.5};
    double opacity_logit = 0.0;
};

inline constexpr std::size_t kSplatParamCount = 7;

/// Differentiable RGB splat renderer over the unit square, sampled at pixel
/// centers ((i + 0.5) / width, (j + 0.5) / height). Parameters are
/// unconstrained reals; scale and opacity go through exp/sigmoid.
/// Flat layout per splat: cx, cy, log_scale, r, g, b, opacity_logit.
class SplatGenerator {
public:
    SplatGenerator(int width, int height, std::vector<Splat> splats)
        : width_(width), height_(height), splats_(std::move(splats)) {
        if (width_ < 1 || height_ < 1) throw std::invalid_argument("SplatGenerator: bad image size");
        if (splats_.empty()) throw std::invalid_argument("SplatGenerator: needs at least one splat");
    }

    /// Fresh generator with centers drawn uniformly from the interior of the
    /// square, gray color, neutral opacity, and scale init_scale.
    static SplatGenerator random_init(int width, int height, int n_splats, double init_scale,
                                      Rng& rng) {
        if (n_splats < 1) throw std::invalid_argument("SplatGenerator: n_splats must be positive");
        if (!(init_scale > 0.0)) throw std::invalid_argument("SplatGenerator: init_scale must be positive");
        std::vector<Splat> splats(static_cast<std::size_t>(n_splats));
        for (Splat& s : splats) {
            s.cx = rng.uniform(0.1, 0.9);
            s.cy = rng.uniform(0.1, 0.9);
            s.log_scale = std::log(init_scale);
        }
        return SplatGenerator(width, height, std::move(splats));
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t n_splats() const { return splats_.size(); }
    std::size_t output_dim() const {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_) * 3;
    }
    std::size_t param_count() const { return splats_.size() * kSplatParamCount; }

    RenderOutput render() const {
        const std::size_t n_px = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
        RenderOutput out;
        out.image.assign(n_px * 3, 0.0);
        out.kernels.assign(splats_.size() * n_px, 0.0);
        for (std::size_t k = 0; k < splats_.size(); ++k) {
            const Splat& sp = splats_[k];
            const double s = std::exp(sp.log_scale);
            const double inv_two_s2 = 1.0 / (2.0 * s * s);
            const double op = sigmoid(sp.opacity_logit);
            for (int j = 0; j < height_; ++j) {
                const double py = (j + 0.5) / height_;
                for (int i = 0; i < width_; ++i) {
                    const double px = (i + 0.5) / width_;
                    const double dx = px - sp.cx;
                    const double dy = py - sp.cy;
                    const double g = std::exp(-(dx * dx + dy * dy) * inv_two_s2);
                    const std::size_t p = static_cast<std::size_t>(j) * width_ + i;
                    out.kernels[k * n_px + p] = g;
                    for (int ch = 0; ch < 3; ++ch) {
                        out.image[p * 3 + ch] += op * sp.color[ch] * g;
                    }
                }
            }
        }
        return out;
    }

    /// Pullback of `cotangent` (an output-space vector) to parameter space,
    /// reusing the kernels cached by `rendered`.
    std::vector<double> vjp(const RenderOutput& rendered, std::span<const double> cotangent) const {
        const std::size_t n_px = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
        if (cotangent.size() != n_px * 3) {
            throw std::invalid_argument("SplatGenerator::vjp: cotangent dimension mismatch");
        }
        if (rendered.kernels.size() != splats_.size() * n_px) {
            throw std::invalid_argument("SplatGenerator::vjp: stale render cache");
        }
        std::vector<double> grad(param_count(), 0.0);
        for (std::size_t k = 0; k < splats_.size(); ++k) {
            const Splat& sp = splats_[k];
            const double s = std::exp(sp.log_scale);
            const double inv_s2 = 1.0 / (s * s);
            const double op = sigmoid(sp.opacity_logit);
            const double dop = op * (1.0 - op);
            double g_cx = 0.0, g_cy = 0.0, g_ls = 0.0, g_col[3] = {0.0, 0.0, 0.0}, g_op = 0.0;
            for (int j = 0; j < height_; ++j) {
                const double py = (j + 0.5) / height_;
                for (int i = 0; i < width_; ++i) {
                    const double px = (i + 0.5) / width_;
                    const std::size_t p = static_cast<std::size_t>(j) * width_ + i;
                    const double g = rendered.kernels[k * n_px + p];
                    double cdot = 0.0;
                    for (int ch = 0; ch < 3; ++ch) {
                        const double c = cotangent[p * 3 + ch];
                        g_col[ch] += c * op * g;
                        cdot += c * sp.color[ch];
                    }
                    const double w = cdot * op * g;
                    const double dx = px - sp.cx;
                    const double dy = py - sp.cy;
                    g_cx += w * dx * inv_s2;
                    g_cy += w * dy * inv_s2;
                    g_ls += w * (dx * dx + dy * dy) * inv_s2;
                    g_op += cdot * g * dop;
                }
            }
            double* out = grad.data() + k * kSplatParamCount;
            out[0] = g_cx;
            out[1] = g_cy;
            out[2] = g_ls;
            out[3] = g_col[0];
            out[4] = g_col[1];
            out[5] = g_col[2];
            out[6] = g_op;
        }
        return grad;
    }

    std::vector<double> vjp(std::span<const double> cotangent) const {
        return vjp(render(), cotangent);
    }

    std::vector<double> flat_params() const {
        std::vector<double> p(param_count());
        for (std::size_t k = 0; k < splats_.size(); ++k) {
            const Splat& sp = splats_[k];
            double* out = p.data() + k * kSplatParamCount;
            out[0] = sp.cx;
            out[1] = sp.cy;
            out[2] = sp.log_scale;
            out[3] = sp.color[0];
            out[4] = sp.color[1];
            out[5] = sp.color[2];
            out[6] = sp.opacity_logit;
        }
        return p;
    }

    void set_flat_params(std::span<const double> p) {
        if (p.size() != param_count()) {
            throw std::invalid_argument("SplatGenerator: parameter count mismatch");
        }
        for (std::size_t k = 0; k < splats_.size(); ++k) {
            Splat& sp = splats_[k];
            const double* in = p.data() + k * kSplatParamCount;
            sp.cx = in[0];
            sp.cy = in[1];
            sp.log_scale = in[2];
            sp.color[0] = in[3];
            sp.color[1] = in[4];
            sp.color[2] = in[5];
            sp.opacity_logit = in[6];
        }
    }

private:
    static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

    int width_;
    int height_;
    std::vector<Splat> splats_;
};

enum class OptimizerKind { Adam, Sgd };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;

    void validate() const {
        if (!(lr > 0.0)) throw std::invalid_argument("optimizer: lr must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
            throw std::invalid_argument("optimizer: betas must lie in [0, 1)");
        }
        if (!(eps > 0.0)) throw std::invalid_argument("optimizer: eps must be positive");
    }
};

/// Adam (bias-corrected) or plain SGD over a flat parameter vector.
class Optimizer {
public:
    Optimizer(const OptimizerConfig& cfg, std::size_t n_params)
        : cfg_(cfg), m_(n_params, 0.0), v_(n_params, 0.0) {
        cfg_.validate();
    }

    /// In-place descent step: params -= update(grad).
    void apply(std::vector<double>& params, std::span<const double> grad) {
        if (params.size() != m_.size() || grad.size() != m_.size()) {
            throw std::invalid_argument("optimizer: parameter/gradient size mismatch");
        }
        if (cfg_.kind == OptimizerKind::Sgd) {
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg_.lr * grad[i];
            return;
        }
        ++steps_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double m_hat = m_[i] / bc1;
            const double v_hat = v_[i] / bc2;
            params[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }

    const OptimizerConfig& config() const { return cfg_; }

private:
    OptimizerConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    long long steps_ = 0;
};

/// Everything recorded about one distillation step. Guidance fields describe
/// the state entering the step; the log-density fields describe the state the
/// step produced (so the last record is the final state).
struct StepRecord {
    int step = 0;  // 1-based
    int t = 0;
    std::optional<double> alpha_mgda;
    double dot_cg_sg = 0.0;
    double norm_cg = 0.0;
    double norm_sg = 0.0;
    double norm_sg_residual = 0.0;
    double dir_norm = 0.0;
    double proj_cg = 0.0;           // direction . delta_cg
    double proj_sg = 0.0;           // direction . delta_sg
    double proj_sg_residual = 0.0;  // direction . delta_sg_residual
    double log_px_given_y = 0.0;    // log p_0(x | y)
    double log_px = 0.0;            // log p_0(x)
    double log_py_given_x = 0.0;    // log p_0(y | x)
};

/// One distillation update: render, decompose at a sampled timestep, combine,
/// pull the weighted direction back to parameter space, and apply the
/// optimizer. Throws (aborting the run) if the gradient or the updated
/// parameters go non-finite.
template <class G>
StepRecord distill_step(G& gen, Optimizer& opt, const GmmOracle& oracle,
                        const NoiseSchedule& sched, const WeightRule& wrule,
                        const Combiner& comb, Label label, TimestepSampler& sampler,
                        Rng& noise_rng, int step_index) {
    const RenderOutput out = gen.render();
    const int t = sampler.next();
    const std::vector<double> eps = noise_rng.normal_vec(out.image.size());

    const GuidancePair pair = decompose(oracle, sched, out.image, t, label, eps);
    const StepDirection dir = combine(pair, comb);

    const double omega = wrule.weight(sched, t);
    const std::vector<double> cotangent = scaled(dir.direction, omega);
    const std::vector<double> grad = gen.vjp(out, cotangent);
    if (!all_finite(grad)) {
        throw std::runtime_error("distill_step: non-finite gradient at step " +
                                 std::to_string(step_index) + ", t=" + std::to_string(t));
    }
    std::vector<double> params = gen.flat_params();
    opt.apply(params, grad);
    if (!all_finite(params)) {
        throw std::runtime_error("distill_step: non-finite parameters at step " +
                                 std::to_string(step_index) + ", t=" + std::to_string(t));
    }
    gen.set_flat_params(params);

    StepRecord rec;
    rec.step = step_index;
    rec.t = t;
    rec.alpha_mgda = dir.alpha_mgda;
    rec.dot_cg_sg = dir.dot_cg_sg;
    rec.norm_cg = dir.norm_cg;
    rec.norm_sg = dir.norm_sg;
    rec.norm_sg_residual = norm(pair.delta_sg_residual);
    rec.dir_norm = norm(dir.direction);
    rec.proj_cg = dot(dir.direction, pair.delta_cg);
    rec.proj_sg = dot(dir.direction, pair.delta_sg);
    rec.proj_sg_residual = dot(dir.direction, pair.delta_sg_residual);

    const std::vector<double> x_new = gen.render().image;
    rec.log_px_given_y = log_density_t(oracle, sched, x_new, 0, label);
    rec.log_px = log_density_t(oracle, sched, x_new, 0, Label::null());
    rec.log_py_given_x = log_posterior_t(oracle, sched, x_new, 0, label);
    return rec;
}

}  // namespace distill
