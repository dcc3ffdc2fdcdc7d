#pragma once

// Monte Carlo harness: experiment configuration and presets, the MSE index,
// trial execution (OpenMP-parallel with a serial reference path), and CSV
// emission.
//
// Results are a deterministic function of (config, seed). Each trial draws
// its data from RngStream(derive_seed(seed, sweep_index), trial) and each
// one-step estimator its perturbation from
// RngStream(derive_seed(seed, sweep_index, estimator_index + 1), trial);
// aggregation runs in trial order after all trials finish, so the worker
// count never changes the output.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shapekit/ces_sampling.hpp"
#include "shapekit/estimators.hpp"

namespace shapekit {

enum class Preset { fig1, fig2, fig3, fig4, fig5, custom };
enum class SweepVariable { L, lambda, outlier_frac, epsilon };
enum class Contamination { none, sphere, generalized_gaussian };

std::string to_string(Preset p);
std::string to_string(SweepVariable v);
std::string to_string(Contamination c);
Preset parse_preset(const std::string& s);
SweepVariable parse_sweep_variable(const std::string& s);
Contamination parse_contamination(const std::string& s);

/// Parsed estimator label: "scm", "tyler" or "r:<scm|tyler>:<score>" with
/// score one of vdw, t<nu>, tnu (uses the config's nu), wilcoxon, spearman,
/// power<a>.
struct EstimatorSpec {
    enum class Kind { scm, tyler, r };
    Kind kind = Kind::scm;
    Kind preliminary = Kind::tyler;  // r only
    enum class Score { vdw, tnu, power } score = Score::vdw;
    double score_param = 0.0;  // nu or a
    std::string label;

    ScoreFunction make_score(Index n) const;
};

EstimatorSpec parse_estimator(const std::string& label, double default_nu);

struct ExperimentConfig {
    Preset preset = Preset::custom;
    Index N = 8;
    double rho_mod = 0.8;
    double rho_arg = 2.0 * 3.14159265358979323846 / 5.0;
    double sigma2 = 4.0;
    double lambda = 2.0;
    std::optional<Index> L;       // unset: preset multiple of N
    double L_per_N = 5.0;
    double nu = 5.0;
    double upsilon = 0.01;
    double epsilon = 0.0;
    double outlier_frac = 0.0;    // L_o / L
    double s = 0.1;
    Contamination contamination = Contamination::none;
    SweepVariable sweep_variable = SweepVariable::lambda;
    std::vector<double> sweep;    // empty: preset default
    std::vector<std::string> estimators;
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
    bool record_timing = false;   // otherwise the seconds column is 0

    Complex rho() const;
    Index resolved_L() const;
};

/// Defaults for a preset (sweep left empty until resolve()).
ExperimentConfig preset_config(Preset p);
/// Apply a --param key=value override. ConfigError on unknown keys or
/// malformed values.
void set_param(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Fill preset-dependent defaults (L, sweep) and validate.
ExperimentConfig resolve(ExperimentConfig cfg);
void validate(const ExperimentConfig& cfg);

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

struct MseRow {
    double sweep = 0.0;
    std::string estimator;
    double mse_index = 0.0;
    std::size_t trials = 0;
    double nonpd_rate = 0.0;
    double seconds = 0.0;

    friend bool operator==(const MseRow&, const MseRow&) = default;
};

struct MseCurve {
    std::vector<MseRow> rows;

    friend bool operator==(const MseCurve&, const MseCurve&) = default;
};

/// Frobenius norm of (1/T) sum vec(E_t) vec(E_t)^H.
double mse_index(std::span<const CMatrix> errors);

/// Per-row Monte Carlo detail kept alongside the curve.
struct RowDetail {
    std::size_t failures = 0;
    /// Delta-method influence values x_t = Re(e_t^H C e_t) / ||C||_F whose
    /// mean is the MSE index; NaN for failed trials. Indexed by trial.
    std::vector<double> influence;
    double standard_error = 0.0;
};

struct ExperimentResult {
    MseCurve curve;
    std::vector<RowDetail> details;  // parallel to curve.rows

    const MseRow& row(double sweep, const std::string& estimator) const;
    const RowDetail& detail(double sweep, const std::string& estimator) const;
};

/// Standard error of mse(a) - mse(b) from trials where both succeeded
/// (the estimators share each trial's dataset).
double paired_standard_error(const RowDetail& a, const RowDetail& b);

struct RunOptions {
    int workers = 0;  // 0: OpenMP default
    /// Abort when more than this fraction of trials fail for any row.
    double max_failure_rate = 0.05;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});
/// Plain loop over trials; the reference the parallel path must match bit for bit.
ExperimentResult run_experiment_serial(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// The dataset a given (sweep point, trial) of an experiment uses.
Dataset experiment_dataset(const ExperimentConfig& cfg, double sweep_value, RngStream& rng);
/// N Sigma0 / trace(Sigma0).
CMatrix experiment_truth(const ExperimentConfig& cfg);

inline constexpr const char* kCsvHeader = "sweep,estimator,mse_index,trials,nonpd_rate,seconds";

void write_csv(const MseCurve& curve, std::ostream& os);
void emit_csv(const MseCurve& curve, const std::filesystem::path& path);
MseCurve parse_csv(std::istream& is);
MseCurve read_csv(const std::filesystem::path& path);

/// Reads (sweep, bound) pairs, one per line, optional header, and appends
/// them to the curve under `label` with trials = 0.
std::vector<std::pair<double, double>> read_overlay(const std::filesystem::path& path);
void merge_overlay(MseCurve& curve, std::span<const std::pair<double, double>> bound,
                   const std::string& label = "cscrb");

}  // namespace shapekit
