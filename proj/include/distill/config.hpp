#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "distill/generator.hpp"
#include "distill/guidance.hpp"
#include "distill/oracle.hpp"
#include "distill/presets.hpp"
#include "distill/schedule.hpp"
#include "distill/toml.hpp"

namespace distill {

enum class GeneratorKind { Direct, Splat };

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::Direct;
    std::optional<std::vector<double>> init_x;  // direct only; default: oracle global mean
    int n_splats = 16;
    int width = 16;
    int height = 16;
    double init_scale = 0.05;
};

/// Fully-resolved experiment description: everything a run, sweep, census, or
/// comparison needs. Construction from a config file validates all fields
/// before any run starts.
struct RunConfig {
    GmmOracle oracle;
    NoiseSchedule schedule;
    int t_min = 1;
    int t_max = 1;
    WeightRule weight_rule;
    GeneratorSpec generator;
    OptimizerConfig optimizer;
    Combiner combiner;
    int label_index = 0;
    int steps = 2000;
    double overtrain_factor = 1.0;
    std::vector<std::uint64_t> seeds = {1};
    int record_every = 1;
    int convergence_window = 50;
    double overtrain_slack = 2.0;
    std::string out_dir = "out";
    std::vector<double> sweep_lambdas = {5.0, 15.0, 25.0, 35.0};
    int census_draws_per_state = 64;
    int census_probe_every = 50;

    Label label() const { return Label::cls(label_index); }

    int total_steps() const {
        return static_cast<int>(std::llround(static_cast<double>(steps) * overtrain_factor));
    }

    void validate() const {
        oracle.validate();
        schedule.validate();
        combiner.validate();
        optimizer.validate();
        if (label_index < 0 || label_index >= oracle.num_classes()) {
            throw std::invalid_argument("config: run label out of range");
        }
        if (t_min < 1 || t_max < t_min || t_max > schedule.T) {
            throw std::invalid_argument("config: need 1 <= t_min <= t_max <= T");
        }
        if (steps < 1) throw std::invalid_argument("config: steps must be at least 1");
        if (!(overtrain_factor > 0.0) || total_steps() < 1) {
            throw std::invalid_argument("config: overtrain factor must be positive");
        }
        if (seeds.empty()) throw std::invalid_argument("config: needs at least one seed");
        if (record_every < 1) throw std::invalid_argument("config: record_every must be positive");
        if (convergence_window < 1) {
            throw std::invalid_argument("config: convergence_window must be positive");
        }
        if (generator.kind == GeneratorKind::Direct) {
            if (generator.init_x &&
                generator.init_x->size() != static_cast<std::size_t>(oracle.dim)) {
                throw std::invalid_argument("config: generator init dimension mismatch");
            }
        } else {
            if (generator.n_splats < 1 || generator.width < 1 || generator.height < 1 ||
                !(generator.init_scale > 0.0)) {
                throw std::invalid_argument("config: bad splat generator parameters");
            }
            const std::size_t dim = static_cast<std::size_t>(generator.width) *
                                    static_cast<std::size_t>(generator.height) * 3;
            if (dim != static_cast<std::size_t>(oracle.dim)) {
                throw std::invalid_argument(
                    "config: splat output dimension (width*height*3) must match oracle dim");
            }
        }
        if (sweep_lambdas.empty()) throw std::invalid_argument("config: sweep lambdas empty");
        for (double l : sweep_lambdas) {
            if (!(l > 0.0)) throw std::invalid_argument("config: sweep lambdas must be positive");
        }
        if (census_draws_per_state < 1 || census_probe_every < 1) {
            throw std::invalid_argument("config: census parameters must be positive");
        }
    }
};

namespace cfg_detail {

inline void check_keys(const toml::Table& t, const std::set<std::string>& allowed,
                       const std::string& section) {
    for (const auto& [key, value] : t) {
        if (!allowed.count(key)) {
            throw std::runtime_error("config: unknown key '" + key + "' in [" + section + "]");
        }
    }
}

inline GmmOracle parse_oracle_fields(const toml::Table& t) {
    check_keys(t, {"dim", "class_priors", "class"}, "oracle");
    GmmOracle o;
    o.dim = static_cast<int>(toml::req_int(t, "dim"));
    o.class_prior = toml::req_double_array(t, "class_priors");
    const toml::Array* classes = toml::find_table_array(t, "class");
    if (!classes) toml::missing("oracle.class");
    for (const toml::Value& cv : *classes) {
        if (!cv.is_table()) throw std::runtime_error("config: [[oracle.class]] must be tables");
        const toml::Table& ct = std::get<toml::Table>(cv.data);
        check_keys(ct, {"weights", "means", "cov_scales"}, "oracle.class");
        const std::vector<double> weights = toml::req_double_array(ct, "weights");
        const std::vector<std::vector<double>> means = toml::req_double_matrix(ct, "means");
        const std::vector<double> scales = toml::req_double_array(ct, "cov_scales");
        if (weights.size() != means.size() || weights.size() != scales.size()) {
            throw std::runtime_error(
                "config: oracle class weights/means/cov_scales must have equal length");
        }
        GmmClass cls;
        for (std::size_t j = 0; j < weights.size(); ++j) {
            cls.components.push_back(GmmComponent{weights[j], means[j], scales[j]});
        }
        o.classes.push_back(std::move(cls));
    }
    o.validate();
    return o;
}

}  // namespace cfg_detail

/// Loads an oracle fragment file: either a file with an [oracle] table or one
/// whose top level is the oracle definition itself.
inline GmmOracle load_oracle_fragment(const std::string& path) {
    const toml::Table root = toml::parse_file(path);
    if (const toml::Table* t = toml::find_table(root, "oracle")) {
        return cfg_detail::parse_oracle_fields(*t);
    }
    return cfg_detail::parse_oracle_fields(root);
}

namespace cfg_detail {

inline GmmOracle parse_oracle(const toml::Table& root, const std::filesystem::path& base_dir) {
    const toml::Table* t = toml::find_table(root, "oracle");
    if (!t) toml::missing("oracle");
    if (toml::find(*t, "preset")) {
        check_keys(*t, {"preset"}, "oracle");
        return make_preset(toml::req_string(*t, "preset"));
    }
    if (toml::find(*t, "file")) {
        check_keys(*t, {"file"}, "oracle");
        std::filesystem::path p = toml::req_string(*t, "file");
        if (p.is_relative()) p = base_dir / p;
        return load_oracle_fragment(p.string());
    }
    return parse_oracle_fields(*t);
}

inline void parse_schedule(const toml::Table& root, RunConfig& out) {
    const toml::Table empty;
    const toml::Table* t = toml::find_table(root, "schedule");
    if (!t) t = &empty;
    check_keys(*t, {"family", "T", "beta_1", "beta_T", "cosine_offset", "max_beta", "t_min",
                    "t_max", "weight"},
               "schedule");
    const std::string family = toml::get_string(*t, "family", "scaled-linear");
    const int T = static_cast<int>(toml::get_int(*t, "T", 1000));
    ScheduleParams params;
    params.beta_1 = toml::get_double(*t, "beta_1", params.beta_1);
    params.beta_T = toml::get_double(*t, "beta_T", params.beta_T);
    params.cosine_offset = toml::get_double(*t, "cosine_offset", params.cosine_offset);
    params.max_beta = toml::get_double(*t, "max_beta", params.max_beta);
    if (family == "scaled-linear") {
        out.schedule = build_schedule(T, ScheduleFamily::ScaledLinear, params);
    } else if (family == "cosine") {
        out.schedule = build_schedule(T, ScheduleFamily::Cosine, params);
    } else {
        throw std::runtime_error("config: unknown schedule family '" + family + "'");
    }
    out.t_min = static_cast<int>(toml::get_int(*t, "t_min", default_t_min(T)));
    out.t_max = static_cast<int>(toml::get_int(*t, "t_max", default_t_max(T)));
    const std::string weight = toml::get_string(*t, "weight", "alpha-squared");
    if (weight == "alpha-squared") {
        out.weight_rule.kind = WeightKind::AlphaSquared;
    } else if (weight == "constant") {
        out.weight_rule.kind = WeightKind::Constant;
    } else {
        throw std::runtime_error("config: unknown weight rule '" + weight + "'");
    }
}

inline void parse_generator(const toml::Table& root, RunConfig& out) {
    const toml::Table empty;
    const toml::Table* t = toml::find_table(root, "generator");
    if (!t) t = &empty;
    check_keys(*t, {"kind", "init", "splats", "width", "height", "init_scale"}, "generator");
    const std::string kind = toml::get_string(*t, "kind", "direct");
    if (kind == "direct") {
        out.generator.kind = GeneratorKind::Direct;
        if (toml::find(*t, "init")) {
            out.generator.init_x = toml::req_double_array(*t, "init");
        }
    } else if (kind == "splat") {
        out.generator.kind = GeneratorKind::Splat;
        out.generator.n_splats = static_cast<int>(toml::get_int(*t, "splats", 16));
        out.generator.width = static_cast<int>(toml::get_int(*t, "width", 16));
        out.generator.height = static_cast<int>(toml::get_int(*t, "height", 16));
        out.generator.init_scale = toml::get_double(*t, "init_scale", 0.05);
    } else {
        throw std::runtime_error("config: unknown generator kind '" + kind + "'");
    }
}

inline void parse_optimizer(const toml::Table& root, RunConfig& out) {
    const toml::Table empty;
    const toml::Table* t = toml::find_table(root, "optimizer");
    if (!t) t = &empty;
    check_keys(*t, {"kind", "lr", "beta1", "beta2", "eps"}, "optimizer");
    const std::string kind = toml::get_string(*t, "kind", "adam");
    if (kind == "adam") {
        out.optimizer.kind = OptimizerKind::Adam;
    } else if (kind == "sgd") {
        out.optimizer.kind = OptimizerKind::Sgd;
    } else {
        throw std::runtime_error("config: unknown optimizer kind '" + kind + "'");
    }
    const double default_lr = out.generator.kind == GeneratorKind::Splat ? 0.005 : 0.01;
    out.optimizer.lr = toml::get_double(*t, "lr", default_lr);
    out.optimizer.beta1 = toml::get_double(*t, "beta1", 0.9);
    out.optimizer.beta2 = toml::get_double(*t, "beta2", 0.99);
    out.optimizer.eps = toml::get_double(*t, "eps", 1e-8);
}

inline void parse_combiner(const toml::Table& root, RunConfig& out) {
    const toml::Table empty;
    const toml::Table* t = toml::find_table(root, "combiner");
    if (!t) t = &empty;
    check_keys(*t, {"kind", "cfg_scale", "u", "v", "lambda", "subtract_eps"}, "combiner");
    const std::string kind = toml::get_string(*t, "kind", "bsd");
    if (kind == "sds") {
        out.combiner = Combiner::sds(toml::get_double(*t, "cfg_scale", 100.0),
                                     toml::get_bool(*t, "subtract_eps", true));
    } else if (kind == "csd") {
        out.combiner = Combiner::csd();
    } else if (kind == "fixed-ratio") {
        out.combiner = Combiner::fixed_ratio(toml::get_double(*t, "u", 1.0),
                                             toml::get_double(*t, "v", 1.0),
                                             toml::get_bool(*t, "subtract_eps", false));
    } else if (kind == "bsd") {
        out.combiner = Combiner::bsd(toml::get_double(*t, "lambda", 25.0),
                                     toml::get_bool(*t, "subtract_eps", false));
    } else {
        throw std::runtime_error("config: unknown combiner kind '" + kind + "'");
    }
}

inline void parse_run(const toml::Table& root, RunConfig& out) {
    const toml::Table empty;
    const toml::Table* t = toml::find_table(root, "run");
    if (!t) t = &empty;
    check_keys(*t, {"label", "steps", "overtrain_factor", "seeds", "record_every", "out_dir",
                    "convergence_window", "overtrain_slack"},
               "run");
    out.label_index = static_cast<int>(toml::get_int(*t, "label", 0));
    out.steps = static_cast<int>(toml::get_int(*t, "steps", 2000));
    out.overtrain_factor = toml::get_double(*t, "overtrain_factor", 1.0);
    if (toml::find(*t, "seeds")) {
        out.seeds.clear();
        const toml::Value* v = toml::find(*t, "seeds");
        if (!v->is_array()) toml::bad_type("seeds", "an array of integers");
        for (const toml::Value& e : std::get<toml::Array>(v->data)) {
            if (!e.is_int()) toml::bad_type("seeds", "an array of integers");
            const std::int64_t s = std::get<std::int64_t>(e.data);
            if (s < 0) throw std::runtime_error("config: seeds must be non-negative");
            out.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    out.record_every = static_cast<int>(toml::get_int(*t, "record_every", 1));
    out.out_dir = toml::get_string(*t, "out_dir", "out");
    out.convergence_window = static_cast<int>(toml::get_int(*t, "convergence_window", 50));
    out.overtrain_slack = toml::get_double(*t, "overtrain_slack", 2.0);
}

inline void parse_aux(const toml::Table& root, RunConfig& out) {
    if (const toml::Table* t = toml::find_table(root, "sweep")) {
        check_keys(*t, {"lambdas"}, "sweep");
        if (toml::find(*t, "lambdas")) out.sweep_lambdas = toml::req_double_array(*t, "lambdas");
    }
    if (const toml::Table* t = toml::find_table(root, "census")) {
        check_keys(*t, {"draws_per_state", "probe_every"}, "census");
        out.census_draws_per_state =
            static_cast<int>(toml::get_int(*t, "draws_per_state", out.census_draws_per_state));
        out.census_probe_every =
            static_cast<int>(toml::get_int(*t, "probe_every", out.census_probe_every));
    }
}

}  // namespace cfg_detail

/// Parses a full experiment config. base_dir anchors relative oracle fragment
/// paths (normally the config file's own directory).
inline RunConfig parse_run_config(const toml::Table& root, const std::filesystem::path& base_dir) {
    cfg_detail::check_keys(root,
                           {"oracle", "schedule", "generator", "optimizer", "combiner", "run",
                            "sweep", "census"},
                           "config root");
    RunConfig out;
    out.oracle = cfg_detail::parse_oracle(root, base_dir);
    cfg_detail::parse_schedule(root, out);
    cfg_detail::parse_generator(root, out);
    cfg_detail::parse_optimizer(root, out);
    cfg_detail::parse_combiner(root, out);
    cfg_detail::parse_run(root, out);
    cfg_detail::parse_aux(root, out);
    out.validate();
    return out;
}

inline RunConfig load_run_config(const std::string& path) {
    const toml::Table root = toml::parse_file(path);
    return parse_run_config(root, std::filesystem::path(path).parent_path());
}

}  // namespace distill
