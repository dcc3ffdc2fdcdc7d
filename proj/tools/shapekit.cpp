// shapekit command-line front end.
//
//   shapekit run --preset fig2 --trials 10000 --seed 42 --out fig2.csv
//   shapekit sample --preset fig2 --sweep-value 2 --out data.cesd
//   shapekit estimate --in data.cesd --estimator r:tyler:vdw
//
// Exit codes: 0 success, 2 configuration error, 3 experiment-level failure,
// 1 anything else (I/O, unreadable data).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shapekit/errors.hpp"
#include "shapekit/mc_harness.hpp"

namespace {

using namespace shapekit;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitExperiment = 3;

struct CommonOptions {
    std::string preset = "custom";
    std::string config_file;
    std::vector<std::string> params;
    std::string estimators;
    std::vector<double> sweep;
    std::string sweep_var;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--preset", o.preset, "fig1..fig5 or custom")->capture_default_str();
    app->add_option("--config", o.config_file, "JSON config (as written by --dump-config)");
    app->add_option("--param", o.params, "key=value override, repeatable")->take_all();
    app->add_option("--estimators", o.estimators, "comma-separated estimator labels");
    app->add_option("--sweep", o.sweep, "sweep values")->delimiter(',');
    app->add_option("--sweep-var", o.sweep_var, "L, lambda, outlier_frac or epsilon");
    app->add_option("--trials", o.trials, "Monte Carlo replicates");
    app->add_option("--seed", o.seed, "64-bit seed");
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');)
        if (!tok.empty()) out.push_back(tok);
    return out;
}

ExperimentConfig build_config(const CommonOptions& o) {
    ExperimentConfig cfg;
    if (!o.config_file.empty()) {
        std::ifstream is(o.config_file);
        if (!is) throw ConfigError("cannot read config file " + o.config_file);
        std::stringstream buf;
        buf << is.rdbuf();
        cfg = config_from_json(buf.str());
    } else {
        cfg = preset_config(parse_preset(o.preset));
    }
    for (const auto& p : o.params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + p + "'");
        set_param(cfg, p.substr(0, eq), p.substr(eq + 1));
    }
    if (!o.estimators.empty()) cfg.estimators = split_commas(o.estimators);
    if (!o.sweep_var.empty()) cfg.sweep_variable = parse_sweep_variable(o.sweep_var);
    if (!o.sweep.empty()) cfg.sweep = o.sweep;
    if (o.trials) cfg.trials = *o.trials;
    if (o.seed) cfg.seed = *o.seed;
    return resolve(cfg);
}

nlohmann::ordered_json matrix_json(const CMatrix& m) {
    auto rows = nlohmann::ordered_json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

double json_number(double v) { return std::isfinite(v) ? v : 0.0; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rank-based shape-matrix estimation for complex elliptical data"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    std::string out_path;
    std::string overlay_path;
    int workers = 0;
    double max_failure_rate = 0.05;
    bool dump_config = false;
    bool timing = false;
    auto* run = app.add_subcommand("run", "run a Monte Carlo experiment and write its MSE curve");
    add_common(run, run_opts);
    run->add_option("--out", out_path, "CSV output path (default: stdout)");
    run->add_option("--workers", workers, "worker threads (0: OpenMP default)");
    run->add_option("--overlay", overlay_path, "CSV of (sweep, bound) pairs to merge as 'cscrb'");
    run->add_option("--max-failure-rate", max_failure_rate, "abort when a row loses more trials than this")
        ->capture_default_str();
    run->add_flag("--timing", timing, "record wall time in the seconds column");
    run->add_flag("--dump-config", dump_config, "print the resolved config as JSON and exit");

    CommonOptions sample_opts;
    std::string sample_out;
    double sweep_value = 0.0;
    bool have_sweep_value = false;
    std::size_t trial = 0;
    auto* sample = app.add_subcommand("sample", "write one experiment dataset in CESD format");
    add_common(sample, sample_opts);
    sample->add_option("--out", sample_out, "output .cesd path")->required();
    sample->add_option("--sweep-value", sweep_value, "sweep point (default: first of the sweep)")
        ->each([&](const std::string&) { have_sweep_value = true; });
    sample->add_option("--trial", trial, "trial index (selects the random stream)");

    std::string in_path;
    std::string estimator_label = "r:tyler:vdw";
    double nu = 5.0;
    double upsilon = 0.01;
    std::uint64_t est_seed = 0;
    auto* estimate = app.add_subcommand("estimate", "estimate the shape matrix of a CESD dataset");
    estimate->add_option("--in", in_path, "input .cesd path")->required();
    estimate->add_option("--estimator", estimator_label, "scm, tyler or r:<prelim>:<score>")
        ->capture_default_str();
    estimate->add_option("--nu", nu, "degrees of freedom for the tnu score")->capture_default_str();
    estimate->add_option("--upsilon", upsilon, "perturbation scale")->capture_default_str();
    estimate->add_option("--seed", est_seed, "seed for the perturbation draw");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) {
            ExperimentConfig cfg = build_config(run_opts);
            cfg.record_timing = cfg.record_timing || timing;
            if (dump_config) {
                std::cout << config_to_json(cfg);
                return 0;
            }
            RunOptions ro;
            ro.workers = workers;
            ro.max_failure_rate = max_failure_rate;
            ExperimentResult result = run_experiment(cfg, ro);
            if (!overlay_path.empty()) {
                const auto bound = read_overlay(overlay_path);
                merge_overlay(result.curve, bound);
            }
            if (out_path.empty())
                write_csv(result.curve, std::cout);
            else
                emit_csv(result.curve, out_path);
        } else if (*sample) {
            const ExperimentConfig cfg = build_config(sample_opts);
            const double x = have_sweep_value ? sweep_value : cfg.sweep.front();
            // same stream as the matching trial of `run` when x is on the sweep
            const auto it = std::find(cfg.sweep.begin(), cfg.sweep.end(), x);
            const auto point = static_cast<std::uint64_t>(it == cfg.sweep.end() ? 0 : it - cfg.sweep.begin());
            RngStream rng(derive_seed(cfg.seed, point), trial);
            write_dataset(experiment_dataset(cfg, x, rng), sample_out);
        } else if (*estimate) {
            const Dataset data = read_dataset(in_path);
            const EstimatorSpec spec = parse_estimator(estimator_label, nu);
            if (!(upsilon > 0.0)) throw ConfigError("--upsilon must be positive");
            auto prelim_of = [&](EstimatorSpec::Kind k) {
                return k == EstimatorSpec::Kind::scm ? scm(data) : tyler(data);
            };
            EstimatorOutput out = spec.kind == EstimatorSpec::Kind::r ? prelim_of(spec.preliminary)
                                                                       : prelim_of(spec.kind);
            if (spec.kind == EstimatorSpec::Kind::r) {
                RngStream rng(est_seed, 0);
                ROptions ro;
                ro.upsilon = upsilon;
                out = r_estimate(data, out, spec.make_score(data.dim()), rng, ro);
            }
            nlohmann::ordered_json j;
            j["estimator"] = estimator_label;
            j["N"] = data.dim();
            j["L"] = data.size();
            j["shape"] = matrix_json(out.shape.matrix());
            j["renormalized"] = matrix_json(out.renormalized);
            const auto& d = out.diagnostics;
            j["diagnostics"] = {{"iterations", d.iterations},
                                {"residual", d.residual},
                                {"alpha", json_number(d.alpha)},
                                {"delta_norm", json_number(d.delta_norm)},
                                {"condition", json_number(d.condition)},
                                {"perturbation_draws", d.perturbation_draws},
                                {"positive_definite", d.positive_definite}};
            std::cout << j.dump(2) << '\n';
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "shapekit: configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const ExperimentError& e) {
        std::fprintf(stderr, "shapekit: experiment failed: %s\n", e.what());
        return kExitExperiment;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "shapekit: %s\n", e.what());
        return kExitFailure;
    }
    return 0;
}
