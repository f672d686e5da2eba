// Command-line front end for the distill experiment harness.
//
// Subcommands:
//   run           one experiment (all configured seeds)
//   sweep-lambda  balanced-combiner lambda sweep
//   angle-census  guidance-angle census along a balanced trajectory
//   compare       same experiment under several combiners
//
// On any failure a single machine-readable JSON error line is written to
// stderr and the process exits nonzero.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "distill/distill.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        if (item.empty()) throw std::runtime_error("empty entry in --seed list");
        std::size_t used = 0;
        const unsigned long long v = std::stoull(item, &used);
        if (used != item.size()) throw std::runtime_error("bad seed '" + item + "'");
        seeds.push_back(static_cast<std::uint64_t>(v));
        pos = comma + 1;
    }
    if (seeds.empty()) throw std::runtime_error("--seed list is empty");
    return seeds;
}

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string item = text.substr(pos, comma - pos);
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (item.empty() || used != item.size()) {
            throw std::runtime_error(std::string("bad value in ") + flag + ": '" + item + "'");
        }
        values.push_back(v);
        pos = comma + 1;
    }
    if (values.empty()) throw std::runtime_error(std::string(flag) + " list is empty");
    return values;
}

struct CommonArgs {
    std::string config_path;
    std::string seed_list;
    std::string out_dir;
    double overtrain = 0.0;  // 0 = keep config value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file (TOML)")
        ->required();
    cmd->add_option("--seed", args.seed_list, "comma-separated seed list (overrides config)");
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--overtrain", args.overtrain,
                    "overtrain factor: total steps = steps * factor (overrides config)");
}

distill::RunConfig load_with_overrides(const CommonArgs& args) {
    distill::RunConfig cfg = distill::load_run_config(args.config_path);
    if (!args.seed_list.empty()) cfg.seeds = parse_seed_list(args.seed_list);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.overtrain != 0.0) cfg.overtrain_factor = args.overtrain;
    cfg.validate();
    return cfg;
}

void print_run_summaries(const std::vector<distill::RunMetrics>& runs) {
    for (const distill::RunMetrics& m : runs) {
        std::printf("seed %llu: final log p(x|y)=%s log p(x)=%s log p(y|x)=%s obtuse=%s\n",
                    static_cast<unsigned long long>(m.seed),
                    distill::fmt_g(m.final_log_px_given_y).c_str(),
                    distill::fmt_g(m.final_log_px).c_str(),
                    distill::fmt_g(m.final_log_py_given_x).c_str(),
                    distill::fmt_g(m.obtuse_fraction).c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"score-distillation experiments against analytic mixture oracles"};
    app.require_subcommand(1);

    CommonArgs run_args, sweep_args, census_args, compare_args;
    std::string lambda_list, combiner_list = "bsd,sds,csd";

    CLI::App* run_cmd = app.add_subcommand("run", "run one experiment over the configured seeds");
    add_common(run_cmd, run_args);

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep-lambda", "run a balanced-combiner lambda sweep");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--lambdas", lambda_list,
                          "comma-separated lambda values (overrides config)");

    CLI::App* census_cmd = app.add_subcommand(
        "angle-census", "sample guidance angles along a balanced trajectory");
    add_common(census_cmd, census_args);

    CLI::App* compare_cmd =
        app.add_subcommand("compare", "run the experiment under several combiners");
    add_common(compare_cmd, compare_args);
    compare_cmd->add_option("--combiners", combiner_list,
                            "comma-separated subset of bsd,sds,csd,fixed-ratio");

    try {
        app.parse(argc, argv);

        if (run_cmd->parsed()) {
            const distill::RunConfig cfg = load_with_overrides(run_args);
            const auto runs = distill::run_experiment(cfg);
            print_run_summaries(runs);
            std::printf("wrote %s\n", (cfg.out_dir + "/summary.csv").c_str());
        } else if (sweep_cmd->parsed()) {
            const distill::RunConfig cfg = load_with_overrides(sweep_args);
            std::vector<double> lambdas;
            if (!lambda_list.empty()) lambdas = parse_double_list(lambda_list, "--lambdas");
            const auto points = distill::sweep_lambda(cfg, lambdas);
            for (const distill::SweepPoint& p : points) {
                std::printf("lambda %s: median final log p(x)=%s log p(y|x)=%s\n",
                            distill::fmt_g(p.lambda).c_str(),
                            distill::fmt_g(p.median_final_log_px).c_str(),
                            distill::fmt_g(p.median_final_log_py_given_x).c_str());
            }
            std::printf("wrote %s\n", (cfg.out_dir + "/sweep_lambda_summary.csv").c_str());
        } else if (census_cmd->parsed()) {
            const distill::RunConfig cfg = load_with_overrides(census_args);
            const distill::CensusResult census = distill::angle_census(cfg);
            std::printf("overall obtuse fraction: %s\n",
                        distill::fmt_g(census.obtuse_fraction).c_str());
            std::printf("wrote %s\n", (cfg.out_dir + "/census.csv").c_str());
        } else if (compare_cmd->parsed()) {
            const distill::RunConfig cfg = load_with_overrides(compare_args);
            std::vector<distill::CompareEntry> variants;
            const auto defaults = distill::default_compare_variants(cfg);
            std::size_t pos = 0;
            while (pos < combiner_list.size()) {
                std::size_t comma = combiner_list.find(',', pos);
                if (comma == std::string::npos) comma = combiner_list.size();
                const std::string name = combiner_list.substr(pos, comma - pos);
                pos = comma + 1;
                if (name == "fixed-ratio") {
                    const distill::Combiner base = cfg.combiner;
                    const bool is_fixed = base.kind == distill::CombinerKind::FixedRatio;
                    variants.push_back({name, distill::Combiner::fixed_ratio(
                                                  is_fixed ? base.u : 1.0, is_fixed ? base.v : 1.0,
                                                  is_fixed && base.subtract_eps)});
                    continue;
                }
                bool found = false;
                for (const distill::CompareEntry& d : defaults) {
                    if (d.name == name) {
                        variants.push_back(d);
                        found = true;
                        break;
                    }
                }
                if (!found) throw std::runtime_error("unknown combiner '" + name + "'");
            }
            const auto results = distill::compare_combiners(cfg, variants);
            for (const distill::CompareVariantResult& r : results) {
                std::printf("%s: median final log p(x)=%s log p(x|y)=%s log p(y|x)=%s\n",
                            r.name.c_str(), distill::fmt_g(r.median_final_log_px).c_str(),
                            distill::fmt_g(r.median_final_log_px_given_y).c_str(),
                            distill::fmt_g(r.median_final_log_py_given_x).c_str());
            }
            std::printf("wrote %s\n", (cfg.out_dir + "/compare_summary.csv").c_str());
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::fflush(stdout);
        const nlohmann::json err = {{"error", std::string("argument error: ") + e.what()}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 2;
    } catch (const std::exception& e) {
        std::fflush(stdout);
        const nlohmann::json err = {{"error", e.what()}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 1;
    }
}
