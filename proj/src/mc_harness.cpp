#include "shapekit/mc_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "shapekit/errors.hpp"

namespace shapekit {

// ---------------------------------------------------------------------------
// enums

std::string to_string(Preset p) {
    switch (p) {
        case Preset::fig1: return "fig1";
        case Preset::fig2: return "fig2";
        case Preset::fig3: return "fig3";
        case Preset::fig4: return "fig4";
        case Preset::fig5: return "fig5";
        case Preset::custom: return "custom";
    }
    return "custom";
}

std::string to_string(SweepVariable v) {
    switch (v) {
        case SweepVariable::L: return "L";
        case SweepVariable::lambda: return "lambda";
        case SweepVariable::outlier_frac: return "outlier_frac";
        case SweepVariable::epsilon: return "epsilon";
    }
    return "lambda";
}

std::string to_string(Contamination c) {
    switch (c) {
        case Contamination::none: return "none";
        case Contamination::sphere: return "sphere";
        case Contamination::generalized_gaussian: return "gg";
    }
    return "none";
}

Preset parse_preset(const std::string& s) {
    for (Preset p : {Preset::fig1, Preset::fig2, Preset::fig3, Preset::fig4, Preset::fig5,
                     Preset::custom})
        if (s == to_string(p)) return p;
    throw ConfigError("unknown preset '" + s + "'");
}

SweepVariable parse_sweep_variable(const std::string& s) {
    for (SweepVariable v : {SweepVariable::L, SweepVariable::lambda, SweepVariable::outlier_frac,
                            SweepVariable::epsilon})
        if (s == to_string(v)) return v;
    throw ConfigError("unknown sweep variable '" + s + "'");
}

Contamination parse_contamination(const std::string& s) {
    for (Contamination c :
         {Contamination::none, Contamination::sphere, Contamination::generalized_gaussian})
        if (s == to_string(c)) return c;
    throw ConfigError("unknown contamination kind '" + s + "'");
}

// ---------------------------------------------------------------------------
// estimator labels

namespace {

double parse_number(const std::string& text, const std::string& what) {
    if (text.empty()) throw ConfigError(what + ": empty value");
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !std::isfinite(v))
        throw ConfigError(what + ": cannot parse '" + text + "' as a number");
    return v;
}

Index parse_count(const std::string& text, const std::string& what) {
    const double v = parse_number(text, what);
    if (v != std::floor(v) || v < 0) throw ConfigError(what + ": expected a nonnegative integer");
    return static_cast<Index>(v);
}

}  // namespace

ScoreFunction EstimatorSpec::make_score(Index n) const {
    switch (score) {
        case Score::vdw: return ScoreFunction::van_der_waerden(n);
        case Score::tnu: return ScoreFunction::t_nu(n, score_param);
        case Score::power: return ScoreFunction::power(n, score_param);
    }
    return ScoreFunction::van_der_waerden(n);
}

EstimatorSpec parse_estimator(const std::string& label, double default_nu) {
    EstimatorSpec spec;
    spec.label = label;
    if (label == "scm") {
        spec.kind = EstimatorSpec::Kind::scm;
        return spec;
    }
    if (label == "tyler") {
        spec.kind = EstimatorSpec::Kind::tyler;
        return spec;
    }
    std::vector<std::string> parts;
    std::stringstream ss(label);
    for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
    if (parts.size() != 3 || parts[0] != "r")
        throw ConfigError("estimator '" + label + "': expected scm, tyler or r:<prelim>:<score>");
    spec.kind = EstimatorSpec::Kind::r;
    if (parts[1] == "scm")
        spec.preliminary = EstimatorSpec::Kind::scm;
    else if (parts[1] == "tyler")
        spec.preliminary = EstimatorSpec::Kind::tyler;
    else
        throw ConfigError("estimator '" + label + "': preliminary must be scm or tyler");

    const std::string& sc = parts[2];
    try {
        if (sc == "vdw") {
            spec.score = EstimatorSpec::Score::vdw;
        } else if (sc == "wilcoxon") {
            spec.score = EstimatorSpec::Score::power;
            spec.score_param = 1.0;
        } else if (sc == "spearman") {
            spec.score = EstimatorSpec::Score::power;
            spec.score_param = 2.0;
        } else if (sc == "tnu") {
            spec.score = EstimatorSpec::Score::tnu;
            spec.score_param = default_nu;
        } else if (sc.rfind("power", 0) == 0) {
            spec.score = EstimatorSpec::Score::power;
            spec.score_param = parse_number(sc.substr(5), "power score exponent");
        } else if (sc.size() > 1 && sc[0] == 't') {
            spec.score = EstimatorSpec::Score::tnu;
            spec.score_param = parse_number(sc.substr(1), "t score degrees of freedom");
        } else {
            throw ConfigError("estimator '" + label + "': unknown score '" + sc + "'");
        }
        (void)spec.make_score(2);  // parameter domain check
    } catch (const DomainError& e) {
        throw ConfigError("estimator '" + label + "': " + e.what());
    }
    return spec;
}

// ---------------------------------------------------------------------------
// configuration

Complex ExperimentConfig::rho() const { return std::polar(rho_mod, rho_arg); }

Index ExperimentConfig::resolved_L() const {
    return L ? *L : static_cast<Index>(std::llround(L_per_N * static_cast<double>(N)));
}

ExperimentConfig preset_config(Preset p) {
    ExperimentConfig cfg;
    cfg.preset = p;
    switch (p) {
        case Preset::fig1:
            cfg.sweep_variable = SweepVariable::L;
            cfg.estimators = {"scm", "r:scm:vdw"};
            break;
        case Preset::fig2:
            cfg.sweep_variable = SweepVariable::lambda;
            cfg.estimators = {"scm", "tyler", "r:scm:vdw", "r:tyler:vdw"};
            break;
        case Preset::fig3:
            cfg.sweep_variable = SweepVariable::lambda;
            cfg.estimators = {"r:tyler:vdw", "r:tyler:t5", "r:tyler:wilcoxon", "r:tyler:spearman"};
            break;
        case Preset::fig4:
            cfg.L_per_N = 100.0;
            cfg.sweep_variable = SweepVariable::outlier_frac;
            cfg.contamination = Contamination::sphere;
            cfg.estimators = {"tyler", "r:tyler:vdw"};
            break;
        case Preset::fig5:
            cfg.L_per_N = 100.0;
            cfg.sweep_variable = SweepVariable::epsilon;
            cfg.contamination = Contamination::generalized_gaussian;
            cfg.estimators = {"tyler", "r:tyler:vdw"};
            break;
        case Preset::custom:
            cfg.sweep_variable = SweepVariable::lambda;
            cfg.estimators = {"scm", "tyler", "r:scm:vdw", "r:tyler:vdw"};
            break;
    }
    return cfg;
}

void set_param(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    const std::string what = "--param " + key;
    if (key == "lambda") cfg.lambda = parse_number(value, what);
    else if (key == "L") cfg.L = parse_count(value, what);
    else if (key == "nu") cfg.nu = parse_number(value, what);
    else if (key == "upsilon") cfg.upsilon = parse_number(value, what);
    else if (key == "epsilon") cfg.epsilon = parse_number(value, what);
    else if (key == "outlier_frac") cfg.outlier_frac = parse_number(value, what);
    else if (key == "s") cfg.s = parse_number(value, what);
    else if (key == "sigma2") cfg.sigma2 = parse_number(value, what);
    else if (key == "rho_mod") cfg.rho_mod = parse_number(value, what);
    else if (key == "rho_arg") cfg.rho_arg = parse_number(value, what);
    else if (key == "N") cfg.N = parse_count(value, what);
    else if (key == "contamination") cfg.contamination = parse_contamination(value);
    else throw ConfigError("unknown parameter '" + key + "'");
}

namespace {

std::vector<double> default_sweep(const ExperimentConfig& cfg) {
    const double n = static_cast<double>(cfg.N);
    switch (cfg.preset) {
        case Preset::fig1: return {2 * n, 4 * n, 8 * n, 16 * n, 32 * n, 64 * n};
        case Preset::fig2:
        case Preset::fig3: return {1.5, 2, 3, 4, 5, 6, 8, 10, 15, 20};
        case Preset::fig4: return {0, 0.02, 0.05, 0.10, 0.15, 0.20};
        case Preset::fig5: return {0, 0.05, 0.10, 0.15, 0.20};
        case Preset::custom: break;
    }
    switch (cfg.sweep_variable) {
        case SweepVariable::L: return {static_cast<double>(cfg.resolved_L())};
        case SweepVariable::lambda: return {cfg.lambda};
        case SweepVariable::outlier_frac: return {cfg.outlier_frac};
        case SweepVariable::epsilon: return {cfg.epsilon};
    }
    return {};
}

ExperimentConfig at_sweep(const ExperimentConfig& cfg, double value) {
    ExperimentConfig c = cfg;
    switch (cfg.sweep_variable) {
        case SweepVariable::L: c.L = static_cast<Index>(std::llround(value)); break;
        case SweepVariable::lambda: c.lambda = value; break;
        case SweepVariable::outlier_frac: c.outlier_frac = value; break;
        case SweepVariable::epsilon: c.epsilon = value; break;
    }
    return c;
}

void check(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

void validate_point(const ExperimentConfig& c) {
    check(c.N >= 2, "N must be at least 2");
    check(c.rho_mod >= 0.0 && c.rho_mod < 1.0, "rho_mod must lie in [0, 1)");
    check(std::isfinite(c.rho_arg), "rho_arg must be finite");
    check(c.sigma2 > 0.0 && std::isfinite(c.sigma2), "sigma2 must be positive");
    check(c.lambda > 1.0 && std::isfinite(c.lambda), "lambda must be finite and > 1");
    check(c.resolved_L() > c.N, "L must exceed N");
    check(c.nu > 0.0 && std::isfinite(c.nu), "nu must be positive");
    check(c.upsilon > 0.0 && std::isfinite(c.upsilon), "upsilon must be positive");
    check(c.epsilon >= 0.0 && c.epsilon <= 1.0, "epsilon must lie in [0, 1]");
    check(c.outlier_frac >= 0.0 && c.outlier_frac < 1.0, "outlier_frac must lie in [0, 1)");
    check(c.s > 0.0 && std::isfinite(c.s), "s must be positive");
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
    check(cfg.trials >= 1, "trials must be at least 1");
    check(!cfg.sweep.empty(), "sweep must not be empty");
    check(!cfg.estimators.empty(), "at least one estimator is required");
    for (const auto& e : cfg.estimators) (void)parse_estimator(e, cfg.nu);
    for (std::size_t i = 0; i < cfg.estimators.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.estimators.size(); ++j)
            check(cfg.estimators[i] != cfg.estimators[j],
                  "duplicate estimator '" + cfg.estimators[i] + "'");
    for (double v : cfg.sweep) {
        check(std::isfinite(v), "sweep values must be finite");
        validate_point(at_sweep(cfg, v));
    }
}

ExperimentConfig resolve(ExperimentConfig cfg) {
    if (!cfg.L) cfg.L = cfg.resolved_L();
    if (cfg.sweep.empty()) cfg.sweep = default_sweep(cfg);
    std::sort(cfg.sweep.begin(), cfg.sweep.end());
    cfg.sweep.erase(std::unique(cfg.sweep.begin(), cfg.sweep.end()), cfg.sweep.end());
    validate(cfg);
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["preset"] = to_string(cfg.preset);
    j["N"] = cfg.N;
    j["rho_mod"] = cfg.rho_mod;
    j["rho_arg"] = cfg.rho_arg;
    j["sigma2"] = cfg.sigma2;
    j["lambda"] = cfg.lambda;
    j["L"] = cfg.L ? nlohmann::ordered_json(*cfg.L) : nlohmann::ordered_json(nullptr);
    j["L_per_N"] = cfg.L_per_N;
    j["nu"] = cfg.nu;
    j["upsilon"] = cfg.upsilon;
    j["epsilon"] = cfg.epsilon;
    j["outlier_frac"] = cfg.outlier_frac;
    j["s"] = cfg.s;
    j["contamination"] = to_string(cfg.contamination);
    j["sweep_variable"] = to_string(cfg.sweep_variable);
    j["sweep"] = cfg.sweep;
    j["estimators"] = cfg.estimators;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["record_timing"] = cfg.record_timing;
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    try {
        ExperimentConfig cfg = preset_config(parse_preset(j.value("preset", "custom")));
        cfg.N = j.value("N", cfg.N);
        cfg.rho_mod = j.value("rho_mod", cfg.rho_mod);
        cfg.rho_arg = j.value("rho_arg", cfg.rho_arg);
        cfg.sigma2 = j.value("sigma2", cfg.sigma2);
        cfg.lambda = j.value("lambda", cfg.lambda);
        if (j.contains("L") && !j["L"].is_null()) cfg.L = j["L"].get<Index>();
        cfg.L_per_N = j.value("L_per_N", cfg.L_per_N);
        cfg.nu = j.value("nu", cfg.nu);
        cfg.upsilon = j.value("upsilon", cfg.upsilon);
        cfg.epsilon = j.value("epsilon", cfg.epsilon);
        cfg.outlier_frac = j.value("outlier_frac", cfg.outlier_frac);
        cfg.s = j.value("s", cfg.s);
        if (j.contains("contamination"))
            cfg.contamination = parse_contamination(j["contamination"].get<std::string>());
        if (j.contains("sweep_variable"))
            cfg.sweep_variable = parse_sweep_variable(j["sweep_variable"].get<std::string>());
        cfg.sweep = j.value("sweep", cfg.sweep);
        cfg.estimators = j.value("estimators", cfg.estimators);
        cfg.trials = j.value("trials", cfg.trials);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.record_timing = j.value("record_timing", cfg.record_timing);
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// data model

namespace {

struct DataModel {
    Contamination kind = Contamination::none;
    Index count = 0;
    double outlier_frac = 0.0;
    CesModel nominal;
    std::optional<ContaminationConfig> mixture;
};

DataModel make_data_model(const ExperimentConfig& c) {
    const HermitianPD sigma0 = toeplitz_scatter(c.rho(), c.N);
    const ModularLaw law = ModularLaw::complex_t_with_power(c.N, c.lambda, c.sigma2);
    DataModel m{c.contamination, c.resolved_L(), c.outlier_frac, make_ces_model(sigma0, law), {}};
    if (c.contamination == Contamination::generalized_gaussian) {
        const HermitianPD xi(c.sigma2 * CMatrix::Identity(c.N, c.N));
        const ModularLaw gg =
            ModularLaw::generalized_gaussian(c.N, c.s, gg_scale_for_power(c.sigma2, c.s, c.N));
        m.mixture = ContaminationConfig{c.epsilon, m.nominal, make_ces_model(xi, gg)};
    }
    return m;
}

Dataset draw(const DataModel& m, RngStream& rng) {
    switch (m.kind) {
        case Contamination::none: return sample_ces_dataset(m.nominal, m.count, rng);
        case Contamination::sphere: {
            const auto outliers =
                static_cast<Index>(std::llround(m.outlier_frac * static_cast<double>(m.count)));
            return build_outlier_dataset(m.count - outliers, outliers, m.nominal, rng);
        }
        case Contamination::generalized_gaussian:
            return sample_contaminated(*m.mixture, m.count, rng);
    }
    return {};
}

}  // namespace

Dataset experiment_dataset(const ExperimentConfig& cfg, double sweep_value, RngStream& rng) {
    const ExperimentConfig c = at_sweep(cfg, sweep_value);
    validate_point(c);
    return draw(make_data_model(c), rng);
}

CMatrix experiment_truth(const ExperimentConfig& cfg) {
    return renormalize(toeplitz_scatter(cfg.rho(), cfg.N).matrix());
}

// ---------------------------------------------------------------------------
// MSE index

double mse_index(std::span<const CMatrix> errors) {
    if (errors.empty()) throw DomainError("mse_index: no trials");
    const Index n2 = errors.front().size();
    CMatrix x(n2, static_cast<Index>(errors.size()));
    for (std::size_t t = 0; t < errors.size(); ++t) {
        if (errors[t].size() != n2) throw ShapeError("mse_index: error matrices differ in size");
        x.col(static_cast<Index>(t)) = vec(errors[t]);
    }
    const CMatrix c = (x * x.adjoint()) / static_cast<double>(errors.size());
    return c.norm();
}

double paired_standard_error(const RowDetail& a, const RowDetail& b) {
    const std::size_t t = std::min(a.influence.size(), b.influence.size());
    std::vector<double> d;
    d.reserve(t);
    for (std::size_t i = 0; i < t; ++i)
        if (!std::isnan(a.influence[i]) && !std::isnan(b.influence[i]))
            d.push_back(a.influence[i] - b.influence[i]);
    if (d.size() < 2) return std::numeric_limits<double>::infinity();
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(d.size() - 1) / static_cast<double>(d.size()));
}

const MseRow& ExperimentResult::row(double sweep, const std::string& estimator) const {
    for (const auto& r : curve.rows)
        if (r.sweep == sweep && r.estimator == estimator) return r;
    throw DomainError("no row for estimator '" + estimator + "' at sweep value " +
                      std::to_string(sweep));
}

const RowDetail& ExperimentResult::detail(double sweep, const std::string& estimator) const {
    for (std::size_t i = 0; i < curve.rows.size(); ++i)
        if (curve.rows[i].sweep == sweep && curve.rows[i].estimator == estimator)
            return details[i];
    throw DomainError("no row for estimator '" + estimator + "' at sweep value " +
                      std::to_string(sweep));
}

// ---------------------------------------------------------------------------
// trial execution

namespace {

using Clock = std::chrono::steady_clock;

struct PointPlan {
    PointPlan(const ExperimentConfig& base, std::size_t point)
        : index(point),
          sweep(base.sweep[point]),
          cfg(at_sweep(base, sweep)),
          model(make_data_model(cfg)),
          truth(experiment_truth(cfg)) {
        for (const auto& label : cfg.estimators) {
            specs.push_back(parse_estimator(label, cfg.nu));
            const auto& s = specs.back();
            score_tables.push_back(s.kind == EstimatorSpec::Kind::r
                                       ? rank_scores(s.make_score(cfg.N), cfg.resolved_L())
                                       : std::vector<double>{});
        }
        r_options.upsilon = cfg.upsilon;
    }

    std::size_t index;
    double sweep;
    ExperimentConfig cfg;
    DataModel model;
    CMatrix truth;
    std::vector<EstimatorSpec> specs;
    std::vector<std::vector<double>> score_tables;  // empty for scm / tyler
    ROptions r_options;
};

struct EstimatorBuffer {
    CMatrix errors;                    // N^2 x trials
    std::vector<std::uint8_t> ok;
    std::vector<std::uint8_t> nonpd;
    std::vector<double> seconds;
};

double elapsed(Clock::time_point since) {
    return std::chrono::duration<double>(Clock::now() - since).count();
}

void run_trial(const PointPlan& plan, std::size_t trial, std::vector<EstimatorBuffer>& buf) {
    const std::uint64_t seed = plan.cfg.seed;
    RngStream rng(derive_seed(seed, plan.index), trial);
    const auto t_col = static_cast<Index>(trial);

    Dataset data;
    try {
        data = draw(plan.model, rng);
    } catch (const Error&) {
        return;  // every estimator stays marked as failed
    }

    struct Prelim {
        bool tried = false;
        std::optional<EstimatorOutput> out;
        double seconds = 0.0;
    };
    Prelim prelims[2];
    auto preliminary = [&](EstimatorSpec::Kind k) -> Prelim& {
        Prelim& p = prelims[k == EstimatorSpec::Kind::scm ? 0 : 1];
        if (!p.tried) {
            p.tried = true;
            const auto start = Clock::now();
            try {
                p.out = k == EstimatorSpec::Kind::scm ? scm(data) : tyler(data);
            } catch (const Error&) {
            }
            p.seconds = elapsed(start);
        }
        return p;
    };

    for (std::size_t e = 0; e < plan.specs.size(); ++e) {
        const EstimatorSpec& spec = plan.specs[e];
        EstimatorBuffer& b = buf[e];
        const auto start = Clock::now();
        double extra = 0.0;
        try {
            std::optional<EstimatorOutput> out;
            if (spec.kind != EstimatorSpec::Kind::r) {
                Prelim& p = preliminary(spec.kind);
                extra = p.seconds;
                if (p.out) out = *p.out;
            } else {
                Prelim& p = preliminary(spec.preliminary);
                extra = p.seconds;
                if (p.out) {
                    RngStream prng(derive_seed(seed, plan.index, e + 1), trial);
                    out = r_estimate(data, *p.out, plan.score_tables[e], prng, plan.r_options);
                }
            }
            if (out) {
                b.errors.col(t_col) = vec(out->renormalized - plan.truth);
                b.ok[trial] = 1;
                b.nonpd[trial] = out->diagnostics.positive_definite ? 0 : 1;
            }
        } catch (const Error&) {
        }
        if (spec.kind == EstimatorSpec::Kind::r)
            b.seconds[trial] = elapsed(start) + extra;
        else
            b.seconds[trial] = extra;
    }
}

MseRow reduce(const PointPlan& plan, const EstimatorSpec& spec, const EstimatorBuffer& b,
              std::size_t trials, const RunOptions& opts, RowDetail& detail) {
    std::vector<Index> good;
    for (std::size_t t = 0; t < trials; ++t)
        if (b.ok[t]) good.push_back(static_cast<Index>(t));
    detail.failures = trials - good.size();
    const double fail_rate = static_cast<double>(detail.failures) / static_cast<double>(trials);
    if (good.empty() || fail_rate > opts.max_failure_rate) {
        std::ostringstream os;
        os << "estimator '" << spec.label << "' failed in " << detail.failures << " of " << trials
           << " trials at sweep value " << plan.sweep;
        throw ExperimentError(os.str());
    }

    const Index n2 = b.errors.rows();
    CMatrix x(n2, static_cast<Index>(good.size()));
    for (std::size_t k = 0; k < good.size(); ++k) x.col(static_cast<Index>(k)) = b.errors.col(good[k]);
    const double t_ok = static_cast<double>(good.size());
    const CMatrix c = (x * x.adjoint()) / t_ok;
    const double varsigma = c.norm();

    detail.influence.assign(trials, std::numeric_limits<double>::quiet_NaN());
    double sum = 0.0, sum2 = 0.0;
    const CMatrix cx = c * x;
    for (std::size_t k = 0; k < good.size(); ++k) {
        const auto col = static_cast<Index>(k);
        const double v =
            varsigma > 0.0 ? x.col(col).dot(cx.col(col)).real() / varsigma : 0.0;
        detail.influence[static_cast<std::size_t>(good[k])] = v;
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / t_ok;
    const double var = good.size() > 1 ? std::max(0.0, (sum2 - t_ok * mean * mean) / (t_ok - 1.0)) : 0.0;
    detail.standard_error = std::sqrt(var / t_ok);

    MseRow row;
    row.sweep = plan.sweep;
    row.estimator = spec.label;
    row.mse_index = varsigma;
    row.trials = good.size();
    std::size_t nonpd = 0;
    double seconds = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        if (b.ok[t]) nonpd += b.nonpd[t];
        seconds += b.seconds[t];
    }
    row.nonpd_rate = static_cast<double>(nonpd) / t_ok;
    row.seconds = plan.cfg.record_timing ? seconds : 0.0;
    return row;
}

template <class TrialLoop>
ExperimentResult run_with(const ExperimentConfig& cfg_in, const RunOptions& opts, TrialLoop&& loop) {
    const ExperimentConfig cfg = resolve(cfg_in);
    ExperimentResult result;
    const std::size_t trials = cfg.trials;
    const Index n2 = cfg.N * cfg.N;
    for (std::size_t point = 0; point < cfg.sweep.size(); ++point) {
        const PointPlan plan(cfg, point);
        std::vector<EstimatorBuffer> buf(plan.specs.size());
        for (auto& b : buf) {
            b.errors = CMatrix::Zero(n2, static_cast<Index>(trials));
            b.ok.assign(trials, 0);
            b.nonpd.assign(trials, 0);
            b.seconds.assign(trials, 0.0);
        }
        loop(plan, trials, buf);
        for (std::size_t e = 0; e < plan.specs.size(); ++e) {
            RowDetail detail;
            result.curve.rows.push_back(reduce(plan, plan.specs[e], buf[e], trials, opts, detail));
            result.details.push_back(std::move(detail));
        }
    }
    // rows are produced in ascending sweep order already (resolve() sorts)
    return result;
}

}  // namespace

ExperimentResult run_experiment_serial(const ExperimentConfig& cfg, const RunOptions& opts) {
    return run_with(cfg, opts, [](const PointPlan& plan, std::size_t trials,
                                  std::vector<EstimatorBuffer>& buf) {
        for (std::size_t t = 0; t < trials; ++t) run_trial(plan, t, buf);
    });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    return run_with(cfg, opts, [&opts](const PointPlan& plan, std::size_t trials,
                                       std::vector<EstimatorBuffer>& buf) {
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const auto count = static_cast<std::int64_t>(trials);
#ifdef _OPENMP
        const int workers = opts.workers > 0 ? opts.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(workers)
#endif
        for (std::int64_t t = 0; t < count; ++t) {
            try {
                run_trial(plan, static_cast<std::size_t>(t), buf);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    });
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, sep);) out.push_back(tok);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

void write_csv(const MseCurve& curve, std::ostream& os) {
    os << kCsvHeader << '\n';
    for (const auto& r : curve.rows)
        os << fmt17(r.sweep) << ',' << r.estimator << ',' << fmt17(r.mse_index) << ',' << r.trials
           << ',' << fmt17(r.nonpd_rate) << ',' << fmt17(r.seconds) << '\n';
}

void emit_csv(const MseCurve& curve, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
    write_csv(curve, os);
    os.flush();
    if (!os) throw std::ios_base::failure("write failed for " + path.string());
}

MseCurve parse_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || strip_cr(line) != kCsvHeader)
        throw DataError("csv: missing or unexpected header");
    MseCurve curve;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 6) throw DataError("csv: line " + std::to_string(lineno) + " needs 6 fields");
        try {
            MseRow r;
            r.sweep = parse_number(f[0], "sweep");
            r.estimator = f[1];
            r.mse_index = parse_number(f[2], "mse_index");
            r.trials = static_cast<std::size_t>(parse_count(f[3], "trials"));
            r.nonpd_rate = parse_number(f[4], "nonpd_rate");
            r.seconds = parse_number(f[5], "seconds");
            curve.rows.push_back(std::move(r));
        } catch (const ConfigError& e) {
            throw DataError("csv: line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return curve;
}

MseCurve read_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::ios_base::failure("cannot open " + path.string());
    return parse_csv(is);
}

std::vector<std::pair<double, double>> read_overlay(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::ios_base::failure("cannot open " + path.string());
    std::vector<std::pair<double, double>> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        line = strip_cr(line);
        if (line.empty() || line[0] == '#') continue;
        const auto f = split(line, ',');
        try {
            if (f.size() != 2) throw ConfigError("expected two fields");
            out.emplace_back(parse_number(f[0], "sweep"), parse_number(f[1], "bound"));
        } catch (const ConfigError& e) {
            if (first) {  // header line
                first = false;
                continue;
            }
            throw DataError(path.string() + ": " + e.what());
        }
        first = false;
    }
    return out;
}

void merge_overlay(MseCurve& curve, std::span<const std::pair<double, double>> bound,
                   const std::string& label) {
    for (const auto& [x, y] : bound) curve.rows.push_back(MseRow{x, label, y, 0, 0.0, 0.0});
    std::stable_sort(curve.rows.begin(), curve.rows.end(),
                     [](const MseRow& a, const MseRow& b) { return a.sweep < b.sweep; });
}

}  // namespace shapekit
