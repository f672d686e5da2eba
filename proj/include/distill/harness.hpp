#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "distill/config.hpp"
#include "distill/generator.hpp"
#include "distill/guidance.hpp"
#include "distill/io.hpp"
#include "distill/oracle.hpp"
#include "distill/rng.hpp"
#include "distill/schedule.hpp"
#include "distill/vec.hpp"

namespace distill {

inline int t_decile_of(int t, int t_min, int t_max) {
    const int span = t_max - t_min + 1;
    int idx = ((t - t_min) * 10) / span;
    return std::clamp(idx, 0, 9);
}

inline int progress_decile_of(int step_index, int total_steps) {
    int idx = ((step_index - 1) * 10) / total_steps;
    return std::clamp(idx, 0, 9);
}

struct NormCell {
    double sum_sg = 0.0;
    double sum_sg_residual = 0.0;
    long long count = 0;
};

/// 10 timestep-deciles x 10 run-progress-deciles table of mean smoothing-term
/// norms (plain and noise-subtracted).
struct NormTable {
    std::array<std::array<NormCell, 10>, 10> cells{};  // [t_decile][progress_decile]

    void accumulate(int td, int pd, double norm_sg, double norm_sg_residual) {
        NormCell& c = cells[static_cast<std::size_t>(td)][static_cast<std::size_t>(pd)];
        c.sum_sg += norm_sg;
        c.sum_sg_residual += norm_sg_residual;
        ++c.count;
    }

    double mean_sg(int td, int pd) const {
        const NormCell& c = cells[static_cast<std::size_t>(td)][static_cast<std::size_t>(pd)];
        return c.count ? c.sum_sg / static_cast<double>(c.count)
                       : std::numeric_limits<double>::quiet_NaN();
    }

    double mean_sg_residual(int td, int pd) const {
        const NormCell& c = cells[static_cast<std::size_t>(td)][static_cast<std::size_t>(pd)];
        return c.count ? c.sum_sg_residual / static_cast<double>(c.count)
                       : std::numeric_limits<double>::quiet_NaN();
    }

    /// Count-weighted mean over all progress deciles of one t-decile.
    double t_decile_mean_sg(int td) const {
        double s = 0.0;
        long long n = 0;
        for (int pd = 0; pd < 10; ++pd) {
            const NormCell& c = cells[static_cast<std::size_t>(td)][static_cast<std::size_t>(pd)];
            s += c.sum_sg;
            n += c.count;
        }
        return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    }

    double t_decile_mean_sg_residual(int td) const {
        double s = 0.0;
        long long n = 0;
        for (int pd = 0; pd < 10; ++pd) {
            const NormCell& c = cells[static_cast<std::size_t>(td)][static_cast<std::size_t>(pd)];
            s += c.sum_sg_residual;
            n += c.count;
        }
        return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
    }
};

/// Coefficient of variation (std / mean) of the per-t-decile means.
inline double coefficient_of_variation(const std::vector<double>& values) {
    std::vector<double> v;
    for (double x : values) {
        if (std::isfinite(x)) v.push_back(x);
    }
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return mean != 0.0 ? std::sqrt(var) / std::abs(mean) : 0.0;
}

/// Everything a single seed's run produces besides its output files.
struct RunMetrics {
    std::uint64_t seed = 0;
    int steps_nominal = 0;
    int steps_total = 0;
    int convergence_step = 0;  // step whose trailing-window mean log p(x|y) peaked
    double final_log_px_given_y = 0.0;
    double final_log_px = 0.0;
    double final_log_py_given_x = 0.0;
    double best_window_log_px_given_y = 0.0;   // peak trailing-window mean (nominal phase)
    double final_window_log_px_given_y = 0.0;  // trailing-window mean at the last step
    double obtuse_fraction = 0.0;              // fraction of steps with delta_cg . delta_sg < 0
    // Balanced runs only: min over steps of
    // min(direction . g1, direction . g2) - ||direction||^2 (NaN otherwise).
    double min_projection_slack = std::numeric_limits<double>::quiet_NaN();
    NormTable norms;
    std::vector<double> gap_trace;  // ||direction|| each step (stationarity gap for balanced runs)
    double mean_dir_norm_last_decile = 0.0;
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace harness_detail {

inline const std::vector<std::string> kStepColumns = {
    "step",    "t",       "alpha_mgda",       "dot_cg_sg",      "norm_cg",
    "norm_sg", "norm_sg_residual", "dir_norm", "proj_cg",       "proj_sg",
    "proj_sg_residual", "log_px_given_y",     "log_px",         "log_py_given_x"};

inline std::vector<std::string> step_row(const StepRecord& r) {
    return {fmt_int(r.step),
            fmt_int(r.t),
            r.alpha_mgda ? fmt_g(*r.alpha_mgda) : std::string(),
            fmt_g(r.dot_cg_sg),
            fmt_g(r.norm_cg),
            fmt_g(r.norm_sg),
            fmt_g(r.norm_sg_residual),
            fmt_g(r.dir_norm),
            fmt_g(r.proj_cg),
            fmt_g(r.proj_sg),
            fmt_g(r.proj_sg_residual),
            fmt_g(r.log_px_given_y),
            fmt_g(r.log_px),
            fmt_g(r.log_py_given_x)};
}

inline void write_norm_table(const std::string& path, const NormTable& table) {
    CsvWriter csv(path, {"t_decile", "progress_decile", "count", "mean_norm_sg",
                         "mean_norm_sg_residual"});
    for (int td = 0; td < 10; ++td) {
        for (int pd = 0; pd < 10; ++pd) {
            const NormCell& c = table.cells[static_cast<std::size_t>(td)][static_cast<std::size_t>(pd)];
            csv.row({fmt_int(td), fmt_int(pd), fmt_int(c.count),
                     c.count ? fmt_g(table.mean_sg(td, pd)) : std::string(),
                     c.count ? fmt_g(table.mean_sg_residual(td, pd)) : std::string()});
        }
    }
}

inline void write_snapshot(const std::string& path, const RunConfig& cfg,
                           const std::vector<double>& image) {
    if (cfg.generator.kind == GeneratorKind::Splat) {
        write_ppm(path, cfg.generator.width, cfg.generator.height, image);
    } else {
        write_ppm_strip(path, image);
    }
}

template <class G>
RunMetrics run_loop(const RunConfig& cfg, G& gen, std::uint64_t seed, const std::string& out_dir,
                    bool write_files) {
    const int nominal = cfg.steps;
    const int total = cfg.total_steps();
    const Label label = cfg.label();
    const bool balanced = cfg.combiner.kind == CombinerKind::Bsd;

    TimestepSampler sampler(cfg.t_min, cfg.t_max, derive_stream(seed, 1));
    Rng noise_rng(derive_stream(seed, 2));
    Optimizer opt(cfg.optimizer, gen.flat_params().size());

    std::unique_ptr<CsvWriter> steps_csv;
    if (write_files) {
        steps_csv = std::make_unique<CsvWriter>(out_dir + "/steps_s" + std::to_string(seed) + ".csv",
                                                kStepColumns);
    }

    RunMetrics m;
    m.seed = seed;
    m.steps_nominal = nominal;
    m.steps_total = total;
    m.gap_trace.reserve(static_cast<std::size_t>(total));

    std::deque<double> window;
    double window_sum = 0.0;
    double best_mean = -std::numeric_limits<double>::infinity();
    std::vector<double> best_image;
    long long obtuse_count = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    StepRecord rec;

    for (int k = 1; k <= total; ++k) {
        rec = distill_step(gen, opt, cfg.oracle, cfg.schedule, cfg.weight_rule, cfg.combiner,
                           label, sampler, noise_rng, k);

        if (rec.dot_cg_sg < 0.0) ++obtuse_count;
        m.norms.accumulate(t_decile_of(rec.t, cfg.t_min, cfg.t_max),
                           progress_decile_of(k, total), rec.norm_sg, rec.norm_sg_residual);
        m.gap_trace.push_back(rec.dir_norm);

        if (balanced) {
            const double proj_g1 = cfg.combiner.lambda * rec.proj_cg;
            const double proj_g2 = cfg.combiner.subtract_eps ? rec.proj_sg_residual : rec.proj_sg;
            const double slack = std::min(proj_g1, proj_g2) - rec.dir_norm * rec.dir_norm;
            min_slack = std::min(min_slack, slack);
        }

        window.push_back(rec.log_px_given_y);
        window_sum += rec.log_px_given_y;
        if (static_cast<int>(window.size()) > cfg.convergence_window) {
            window_sum -= window.front();
            window.pop_front();
        }
        const double window_mean = window_sum / static_cast<double>(window.size());
        if (k <= nominal && window_mean > best_mean) {
            best_mean = window_mean;
            m.convergence_step = k;
            best_image = gen.render().image;
        }
        if (k == total) m.final_window_log_px_given_y = window_mean;

        if (steps_csv && (k % cfg.record_every == 0 || k == total)) {
            steps_csv->row(step_row(rec));
        }
    }

    m.final_log_px_given_y = rec.log_px_given_y;
    m.final_log_px = rec.log_px;
    m.final_log_py_given_x = rec.log_py_given_x;
    m.best_window_log_px_given_y = best_mean;
    m.obtuse_fraction = static_cast<double>(obtuse_count) / static_cast<double>(total);
    if (balanced) m.min_projection_slack = min_slack;

    const int tail = std::max(1, total / 10);
    double tail_sum = 0.0;
    for (int k = total - tail; k < total; ++k) tail_sum += m.gap_trace[static_cast<std::size_t>(k)];
    m.mean_dir_norm_last_decile = tail_sum / static_cast<double>(tail);

    if (write_files) {
        write_norm_table(out_dir + "/norms_s" + std::to_string(seed) + ".csv", m.norms);
        write_snapshot(out_dir + "/snapshot_convergence_s" + std::to_string(seed) + ".ppm", cfg,
                       best_image);
        write_snapshot(out_dir + "/snapshot_final_s" + std::to_string(seed) + ".ppm", cfg,
                       gen.render().image);
    }
    return m;
}

inline std::vector<std::string> summary_columns() {
    return {"seed",
            "steps_nominal",
            "steps_total",
            "convergence_step",
            "final_log_px_given_y",
            "final_log_px",
            "final_log_py_given_x",
            "best_window_log_px_given_y",
            "final_window_log_px_given_y",
            "obtuse_fraction",
            "min_projection_slack",
            "mean_dir_norm_last_decile"};
}

inline std::vector<std::string> summary_row(const RunMetrics& m) {
    return {fmt_int(static_cast<long long>(m.seed)),
            fmt_int(m.steps_nominal),
            fmt_int(m.steps_total),
            fmt_int(m.convergence_step),
            fmt_g(m.final_log_px_given_y),
            fmt_g(m.final_log_px),
            fmt_g(m.final_log_py_given_x),
            fmt_g(m.best_window_log_px_given_y),
            fmt_g(m.final_window_log_px_given_y),
            fmt_g(m.obtuse_fraction),
            std::isfinite(m.min_projection_slack) ? fmt_g(m.min_projection_slack) : std::string(),
            fmt_g(m.mean_dir_norm_last_decile)};
}

}  // namespace harness_detail

/// Runs one seed, writing the per-step CSV, the norm table, and the two
/// snapshots into out_dir when write_files is set.
inline RunMetrics run_one_seed(const RunConfig& cfg, std::uint64_t seed,
                               const std::string& out_dir, bool write_files) {
    if (write_files) std::filesystem::create_directories(out_dir);
    Rng init_rng(derive_stream(seed, 3));
    if (cfg.generator.kind == GeneratorKind::Direct) {
        std::vector<double> init =
            cfg.generator.init_x ? *cfg.generator.init_x : cfg.oracle.global_mean();
        DirectGenerator gen(std::move(init));
        return harness_detail::run_loop(cfg, gen, seed, out_dir, write_files);
    }
    SplatGenerator gen = SplatGenerator::random_init(
        cfg.generator.width, cfg.generator.height, cfg.generator.n_splats,
        cfg.generator.init_scale, init_rng);
    return harness_detail::run_loop(cfg, gen, seed, out_dir, write_files);
}

/// Runs every configured seed sequentially and writes summary.csv.
inline std::vector<RunMetrics> run_experiment(const RunConfig& cfg,
                                              const std::string& out_dir_override = {},
                                              bool write_files = true) {
    cfg.validate();
    const std::string out_dir = out_dir_override.empty() ? cfg.out_dir : out_dir_override;
    if (write_files) std::filesystem::create_directories(out_dir);
    std::vector<RunMetrics> all;
    for (std::uint64_t seed : cfg.seeds) {
        all.push_back(run_one_seed(cfg, seed, out_dir, write_files));
    }
    if (write_files) {
        CsvWriter csv(out_dir + "/summary.csv", harness_detail::summary_columns());
        for (const RunMetrics& m : all) csv.row(harness_detail::summary_row(m));
    }
    return all;
}

struct SweepPoint {
    double lambda = 0.0;
    double median_final_log_px_given_y = 0.0;
    double median_final_log_px = 0.0;
    double median_final_log_py_given_x = 0.0;
    std::vector<RunMetrics> runs;
};

/// Re-runs the experiment with a balanced combiner at each lambda. Writes
/// per-lambda run outputs plus sweep_lambda.csv / sweep_lambda_summary.csv.
inline std::vector<SweepPoint> sweep_lambda(const RunConfig& cfg, std::vector<double> lambdas = {},
                                            const std::string& out_dir_override = {},
                                            bool write_files = true) {
    if (lambdas.empty()) lambdas = cfg.sweep_lambdas;
    const std::string out_dir = out_dir_override.empty() ? cfg.out_dir : out_dir_override;
    if (write_files) std::filesystem::create_directories(out_dir);
    const bool keep_subtract = cfg.combiner.kind == CombinerKind::Bsd && cfg.combiner.subtract_eps;

    std::vector<SweepPoint> points;
    for (double lambda : lambdas) {
        RunConfig sub = cfg;
        sub.combiner = Combiner::bsd(lambda, keep_subtract);
        sub.validate();
        SweepPoint p;
        p.lambda = lambda;
        p.runs = run_experiment(sub, out_dir + "/lambda_" + fmt_g(lambda), write_files);
        std::vector<double> px, pxy, pyx;
        for (const RunMetrics& m : p.runs) {
            pxy.push_back(m.final_log_px_given_y);
            px.push_back(m.final_log_px);
            pyx.push_back(m.final_log_py_given_x);
        }
        p.median_final_log_px_given_y = median(pxy);
        p.median_final_log_px = median(px);
        p.median_final_log_py_given_x = median(pyx);
        points.push_back(std::move(p));
    }

    if (write_files) {
        CsvWriter rows(out_dir + "/sweep_lambda.csv",
                       {"lambda", "seed", "final_log_px_given_y", "final_log_px",
                        "final_log_py_given_x"});
        for (const SweepPoint& p : points) {
            for (const RunMetrics& m : p.runs) {
                rows.row({fmt_g(p.lambda), fmt_int(static_cast<long long>(m.seed)),
                          fmt_g(m.final_log_px_given_y), fmt_g(m.final_log_px),
                          fmt_g(m.final_log_py_given_x)});
            }
        }
        CsvWriter summary(out_dir + "/sweep_lambda_summary.csv",
                          {"lambda", "median_final_log_px_given_y", "median_final_log_px",
                           "median_final_log_py_given_x"});
        for (const SweepPoint& p : points) {
            summary.row({fmt_g(p.lambda), fmt_g(p.median_final_log_px_given_y),
                         fmt_g(p.median_final_log_px), fmt_g(p.median_final_log_py_given_x)});
        }
    }
    return points;
}

struct CensusDecile {
    long long count = 0;
    long long excluded_sg = 0;
    long long excluded_res = 0;
    long long obtuse_sg = 0;
    long long obtuse_res = 0;
    double sum_cos_sg = 0.0;
    double sum_cos_res = 0.0;
    double sum_norm_sg = 0.0;
    double sum_norm_res = 0.0;

    double obtuse_frac_sg() const {
        const long long n = count - excluded_sg;
        return n > 0 ? static_cast<double>(obtuse_sg) / static_cast<double>(n) : 0.0;
    }
    double obtuse_frac_res() const {
        const long long n = count - excluded_res;
        return n > 0 ? static_cast<double>(obtuse_res) / static_cast<double>(n) : 0.0;
    }
    double mean_cos_sg() const {
        const long long n = count - excluded_sg;
        return n > 0 ? sum_cos_sg / static_cast<double>(n)
                     : std::numeric_limits<double>::quiet_NaN();
    }
    double mean_cos_res() const {
        const long long n = count - excluded_res;
        return n > 0 ? sum_cos_res / static_cast<double>(n)
                     : std::numeric_limits<double>::quiet_NaN();
    }
    double mean_norm_sg() const {
        return count ? sum_norm_sg / static_cast<double>(count)
                     : std::numeric_limits<double>::quiet_NaN();
    }
    double mean_norm_res() const {
        return count ? sum_norm_res / static_cast<double>(count)
                     : std::numeric_limits<double>::quiet_NaN();
    }

    void merge(const CensusDecile& other) {
        count += other.count;
        excluded_sg += other.excluded_sg;
        excluded_res += other.excluded_res;
        obtuse_sg += other.obtuse_sg;
        obtuse_res += other.obtuse_res;
        sum_cos_sg += other.sum_cos_sg;
        sum_cos_res += other.sum_cos_res;
        sum_norm_sg += other.sum_norm_sg;
        sum_norm_res += other.sum_norm_res;
    }
};

struct CensusResult {
    static constexpr int kHistBins = 20;  // uniform bins over cos-angle in [-1, 1]
    std::array<CensusDecile, 10> deciles{};
    CensusDecile overall;
    std::array<long long, kHistBins> hist_cos_sg{};
    std::array<long long, kHistBins> hist_cos_res{};
    double obtuse_fraction = 0.0;  // overall classifier-vs-smoothing fraction
};

inline int census_hist_bin(double cos_angle) {
    const int b = static_cast<int>(
        std::floor((cos_angle + 1.0) * 0.5 * CensusResult::kHistBins));
    return std::clamp(b, 0, CensusResult::kHistBins - 1);
}

/// Samples (t, eps) batches at the initial state and at periodic probe states
/// along one balanced-combiner trajectory, recording angle and norm
/// statistics of the guidance pair per timestep decile. Near-zero components
/// (norm < 1e-12) are excluded from angle statistics. Writes census.csv
/// (per-decile summary) and census_hist.csv (cos-angle distribution).
inline CensusResult angle_census(const RunConfig& cfg, const std::string& out_dir_override = {},
                                 bool write_files = true) {
    cfg.validate();
    const std::string out_dir = out_dir_override.empty() ? cfg.out_dir : out_dir_override;
    if (write_files) std::filesystem::create_directories(out_dir);

    RunConfig traj_cfg = cfg;
    traj_cfg.combiner = cfg.combiner.kind == CombinerKind::Bsd ? cfg.combiner : Combiner::bsd();

    const std::uint64_t seed = cfg.seeds.front();
    const Label label = cfg.label();
    TimestepSampler traj_sampler(cfg.t_min, cfg.t_max, derive_stream(seed, 1));
    Rng traj_noise(derive_stream(seed, 2));
    Rng init_rng(derive_stream(seed, 3));
    TimestepSampler census_sampler(cfg.t_min, cfg.t_max, derive_stream(seed, 10));
    Rng census_noise(derive_stream(seed, 11));

    CensusResult result;
    constexpr double kTiny = 1e-12;
    auto probe = [&](const std::vector<double>& x0) {
        for (int d = 0; d < cfg.census_draws_per_state; ++d) {
            const int t = census_sampler.next();
            const std::vector<double> eps = census_noise.normal_vec(x0.size());
            const GuidancePair pair = decompose(cfg.oracle, cfg.schedule, x0, t, label, eps);
            CensusDecile& cell = result.deciles[static_cast<std::size_t>(
                t_decile_of(t, cfg.t_min, cfg.t_max))];
            const double ncg = norm(pair.delta_cg);
            const double nsg = norm(pair.delta_sg);
            const double nres = norm(pair.delta_sg_residual);
            ++cell.count;
            cell.sum_norm_sg += nsg;
            cell.sum_norm_res += nres;
            if (ncg < kTiny || nsg < kTiny) {
                ++cell.excluded_sg;
            } else {
                const double cos_sg = dot(pair.delta_cg, pair.delta_sg) / (ncg * nsg);
                cell.sum_cos_sg += cos_sg;
                if (cos_sg < 0.0) ++cell.obtuse_sg;
                ++result.hist_cos_sg[static_cast<std::size_t>(census_hist_bin(cos_sg))];
            }
            if (ncg < kTiny || nres < kTiny) {
                ++cell.excluded_res;
            } else {
                const double cos_res =
                    dot(pair.delta_cg, pair.delta_sg_residual) / (ncg * nres);
                cell.sum_cos_res += cos_res;
                if (cos_res < 0.0) ++cell.obtuse_res;
                ++result.hist_cos_res[static_cast<std::size_t>(census_hist_bin(cos_res))];
            }
        }
    };

    auto run_trajectory = [&](auto& gen) {
        Optimizer opt(cfg.optimizer, gen.flat_params().size());
        probe(gen.render().image);
        const int total = cfg.total_steps();
        for (int k = 1; k <= total; ++k) {
            (void)distill_step(gen, opt, cfg.oracle, cfg.schedule, cfg.weight_rule,
                               traj_cfg.combiner, label, traj_sampler, traj_noise, k);
            if (k % cfg.census_probe_every == 0 || k == total) probe(gen.render().image);
        }
    };

    if (cfg.generator.kind == GeneratorKind::Direct) {
        std::vector<double> init =
            cfg.generator.init_x ? *cfg.generator.init_x : cfg.oracle.global_mean();
        DirectGenerator gen(std::move(init));
        run_trajectory(gen);
    } else {
        SplatGenerator gen = SplatGenerator::random_init(
            cfg.generator.width, cfg.generator.height, cfg.generator.n_splats,
            cfg.generator.init_scale, init_rng);
        run_trajectory(gen);
    }

    for (const CensusDecile& d : result.deciles) result.overall.merge(d);
    result.obtuse_fraction = result.overall.obtuse_frac_sg();

    if (write_files) {
        CsvWriter csv(out_dir + "/census.csv",
                      {"t_decile", "count", "excluded_sg", "excluded_sg_residual",
                       "obtuse_frac_sg", "obtuse_frac_sg_residual", "mean_cos_sg",
                       "mean_cos_sg_residual", "mean_norm_sg", "mean_norm_sg_residual"});
        auto emit = [&](const std::string& name, const CensusDecile& d) {
            csv.row({name, fmt_int(d.count), fmt_int(d.excluded_sg), fmt_int(d.excluded_res),
                     fmt_g(d.obtuse_frac_sg()), fmt_g(d.obtuse_frac_res()),
                     d.count - d.excluded_sg > 0 ? fmt_g(d.mean_cos_sg()) : std::string(),
                     d.count - d.excluded_res > 0 ? fmt_g(d.mean_cos_res()) : std::string(),
                     d.count ? fmt_g(d.mean_norm_sg()) : std::string(),
                     d.count ? fmt_g(d.mean_norm_res()) : std::string()});
        };
        for (int td = 0; td < 10; ++td) {
            emit(std::to_string(td), result.deciles[static_cast<std::size_t>(td)]);
        }
        emit("all", result.overall);

        CsvWriter hist(out_dir + "/census_hist.csv",
                       {"cos_lo", "cos_hi", "count_sg", "count_sg_residual"});
        for (int b = 0; b < CensusResult::kHistBins; ++b) {
            const double lo = -1.0 + 2.0 * b / CensusResult::kHistBins;
            const double hi = -1.0 + 2.0 * (b + 1) / CensusResult::kHistBins;
            hist.row({fmt_g(lo), fmt_g(hi),
                      fmt_int(result.hist_cos_sg[static_cast<std::size_t>(b)]),
                      fmt_int(result.hist_cos_res[static_cast<std::size_t>(b)])});
        }
    }
    return result;
}

struct CompareEntry {
    std::string name;
    Combiner combiner;
};

struct CompareVariantResult {
    std::string name;
    double median_final_log_px_given_y = 0.0;
    double median_final_log_px = 0.0;
    double median_final_log_py_given_x = 0.0;
    std::vector<RunMetrics> runs;
};

/// The standard three-way comparison: balanced (config lambda), score
/// distillation at the config cfg_scale, and the classifier-only rule.
inline std::vector<CompareEntry> default_compare_variants(const RunConfig& cfg) {
    const double lambda = cfg.combiner.kind == CombinerKind::Bsd ? cfg.combiner.lambda : 25.0;
    const double cfg_scale = cfg.combiner.kind == CombinerKind::Sds ? cfg.combiner.cfg_scale : 100.0;
    return {{"bsd", Combiner::bsd(lambda)},
            {"sds", Combiner::sds(cfg_scale)},
            {"csd", Combiner::csd()}};
}

/// Runs the same experiment under each combiner variant. Writes per-variant
/// run outputs plus compare.csv / compare_summary.csv.
inline std::vector<CompareVariantResult> compare_combiners(
    const RunConfig& cfg, const std::vector<CompareEntry>& variants,
    const std::string& out_dir_override = {}, bool write_files = true) {
    if (variants.empty()) throw std::invalid_argument("compare_combiners: no variants");
    const std::string out_dir = out_dir_override.empty() ? cfg.out_dir : out_dir_override;
    if (write_files) std::filesystem::create_directories(out_dir);

    std::vector<CompareVariantResult> results;
    for (const CompareEntry& entry : variants) {
        RunConfig sub = cfg;
        sub.combiner = entry.combiner;
        sub.validate();
        CompareVariantResult r;
        r.name = entry.name;
        r.runs = run_experiment(sub, out_dir + "/" + entry.name, write_files);
        std::vector<double> px, pxy, pyx;
        for (const RunMetrics& m : r.runs) {
            pxy.push_back(m.final_log_px_given_y);
            px.push_back(m.final_log_px);
            pyx.push_back(m.final_log_py_given_x);
        }
        r.median_final_log_px_given_y = median(pxy);
        r.median_final_log_px = median(px);
        r.median_final_log_py_given_x = median(pyx);
        results.push_back(std::move(r));
    }

    if (write_files) {
        CsvWriter rows(out_dir + "/compare.csv",
                       {"combiner", "seed", "final_log_px_given_y", "final_log_px",
                        "final_log_py_given_x", "obtuse_fraction"});
        for (const CompareVariantResult& r : results) {
            for (const RunMetrics& m : r.runs) {
                rows.row({r.name, fmt_int(static_cast<long long>(m.seed)),
                          fmt_g(m.final_log_px_given_y), fmt_g(m.final_log_px),
                          fmt_g(m.final_log_py_given_x), fmt_g(m.obtuse_fraction)});
            }
        }
        CsvWriter summary(out_dir + "/compare_summary.csv",
                          {"combiner", "median_final_log_px_given_y", "median_final_log_px",
                           "median_final_log_py_given_x"});
        for (const CompareVariantResult& r : results) {
            summary.row({r.name, fmt_g(r.median_final_log_px_given_y),
                         fmt_g(r.median_final_log_px), fmt_g(r.median_final_log_py_given_x)});
        }
    }
    return results;
}

}  // namespace distill
