#include "shapekit/ces_sampling.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "shapekit/errors.hpp"
#include "shapekit/special_fn.hpp"

namespace shapekit {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_dim(Index n) {
    if (n < 1) throw DomainError("dimension must be at least 1");
}

}  // namespace

ModularLaw ModularLaw::complex_t(Index dim, double lambda, double eta) {
    require_dim(dim);
    if (!(lambda > 1.0) || !std::isfinite(lambda))
        throw DomainError("complex t: lambda must be finite and > 1");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw DomainError("complex t: eta must be > 0");
    return ModularLaw(ComplexT{lambda, eta}, dim);
}

ModularLaw ModularLaw::complex_t_with_power(Index dim, double lambda, double sigma2) {
    if (!(sigma2 > 0.0)) throw DomainError("complex t: power must be > 0");
    if (!(lambda > 1.0)) throw DomainError("complex t: lambda must be > 1");
    return complex_t(dim, lambda, lambda / (sigma2 * (lambda - 1.0)));
}

ModularLaw ModularLaw::generalized_gaussian(Index dim, double s, double b) {
    require_dim(dim);
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("generalized Gaussian: s must be > 0");
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("generalized Gaussian: b must be > 0");
    return ModularLaw(GeneralizedGaussian{s, b}, dim);
}

double ModularLaw::mean() const {
    const double n = static_cast<double>(dim_);
    return std::visit(
        overloaded{[n](const ComplexT& t) { return n * t.lambda / (t.eta * (t.lambda - 1.0)); },
                   [n](const GeneralizedGaussian& g) {
                       using special::ln_gamma;
                       return std::exp(std::log(g.b) / g.s + ln_gamma((n + 1.0) / g.s) -
                                       ln_gamma(n / g.s));
                   }},
        law_);
}

double ModularLaw::log_modular_density(double t) const {
    const double n = static_cast<double>(dim_);
    if (t <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::visit(
        overloaded{[n, t](const ComplexT& c) {
                       return (n - 1.0) * std::log(t) -
                              (c.lambda + n) * std::log(c.lambda / c.eta + t);
                   },
                   [n, t](const GeneralizedGaussian& g) {
                       return (n - 1.0) * std::log(t) - std::pow(t, g.s) / g.b;
                   }},
        law_);
}

CesModel make_ces_model(const HermitianPD& scatter, const ModularLaw& law) {
    if (scatter.dim() != law.dim()) throw ShapeError("CES model: scatter/law dimension mismatch");
    return CesModel{scatter, herm_sqrt(scatter), law};
}

HermitianPD toeplitz_scatter(Complex rho, Index n) {
    require_dim(n);
    if (!(std::abs(rho) < 1.0)) throw DomainError("toeplitz_scatter: |rho| must be < 1");
    std::vector<Complex> powers(static_cast<std::size_t>(n), Complex(1.0));
    for (std::size_t k = 1; k < powers.size(); ++k) powers[k] = powers[k - 1] * rho;
    CMatrix s(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = j; i < n; ++i) {
            const Complex v = powers[static_cast<std::size_t>(i - j)];
            s(i, j) = v;
            s(j, i) = std::conj(v);
        }
    return HermitianPD(std::move(s));
}

CVector sample_sphere(Index n, RngStream& rng) {
    require_dim(n);
    CVector g(n);
    double norm2 = 0.0;
    do {
        for (Index i = 0; i < n; ++i) g(i) = rng.complex_normal();
        norm2 = g.squaredNorm();
    } while (norm2 == 0.0);
    return g / std::sqrt(norm2);
}

double sample_modular(const ModularLaw& law, RngStream& rng) {
    const double n = static_cast<double>(law.dim());
    return std::visit(
        overloaded{[&](const ComplexT& t) {
                       // (N/eta) * F(2N, 2 lambda) = (lambda/eta) * G_N / G_lambda
                       const double num = rng.gamma(n);
                       const double den = rng.gamma(t.lambda);
                       return (t.lambda / t.eta) * num / den;
                   },
                   [&](const GeneralizedGaussian& g) {
                       const double w = rng.gamma(n / g.s);
                       return std::exp((std::log(g.b) + std::log(w)) / g.s);
                   }},
        law.variant());
}

double gg_scale_for_power(double sigma2, double s, Index n) {
    require_dim(n);
    if (!(sigma2 > 0.0) || !(s > 0.0)) throw DomainError("gg_scale_for_power: arguments must be > 0");
    const double nd = static_cast<double>(n);
    using special::ln_gamma;
    return std::exp(s * (std::log(nd * sigma2) + ln_gamma(nd / s) - ln_gamma((nd + 1.0) / s)));
}

CVector sample_ces(const HermitianPD& scatter_sqrt, double q, RngStream& rng) {
    const CVector u = sample_sphere(scatter_sqrt.dim(), rng);
    return std::sqrt(q) * (scatter_sqrt.matrix() * u);
}

CVector sample_ces(const HermitianPD& scatter_sqrt, const ModularLaw& law, RngStream& rng) {
    if (scatter_sqrt.dim() != law.dim()) throw ShapeError("sample_ces: dimension mismatch");
    const double q = sample_modular(law, rng);
    return sample_ces(scatter_sqrt, q, rng);
}

Dataset sample_ces_dataset(const CesModel& model, Index count, RngStream& rng) {
    Dataset data(model.scatter.dim(), count);
    for (Index l = 0; l < count; ++l) data.column(l) = sample_ces(model.scatter_sqrt, model.law, rng);
    return data;
}

LabeledDataset sample_contaminated_labeled(const ContaminationConfig& cfg, Index count,
                                           RngStream& rng) {
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0))
        throw DomainError("contamination: epsilon must lie in [0, 1]");
    if (cfg.nominal.scatter.dim() != cfg.contaminating.scatter.dim())
        throw ShapeError("contamination: component dimensions differ");
    LabeledDataset out{Dataset(cfg.nominal.scatter.dim(), count),
                       std::vector<bool>(static_cast<std::size_t>(count), false)};
    for (Index l = 0; l < count; ++l) {
        const bool bad = rng.uniform() < cfg.epsilon;
        const CesModel& m = bad ? cfg.contaminating : cfg.nominal;
        out.data.column(l) = sample_ces(m.scatter_sqrt, m.law, rng);
        out.contaminated[static_cast<std::size_t>(l)] = bad;
    }
    return out;
}

Dataset sample_contaminated(const ContaminationConfig& cfg, Index count, RngStream& rng) {
    return sample_contaminated_labeled(cfg, count, rng).data;
}

LabeledDataset build_outlier_dataset_labeled(Index proper, Index outliers, const CesModel& nominal,
                                             RngStream& rng) {
    if (proper < 0 || outliers < 0 || proper + outliers < 1)
        throw DomainError("build_outlier_dataset: need at least one observation");
    const Index n = nominal.scatter.dim();
    const Index total = proper + outliers;
    LabeledDataset out{Dataset(n, total), std::vector<bool>(static_cast<std::size_t>(total), false)};
    for (Index l = 0; l < proper; ++l)
        out.data.column(l) = sample_ces(nominal.scatter_sqrt, nominal.law, rng);
    for (Index l = proper; l < total; ++l) {
        out.data.column(l) = sample_sphere(n, rng);
        out.contaminated[static_cast<std::size_t>(l)] = true;
    }
    // Fisher-Yates
    for (Index l = total - 1; l > 0; --l) {
        const auto k = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(l + 1)));
        if (k != l) {
            out.data.matrix().col(l).swap(out.data.matrix().col(k));
            const bool tmp = out.contaminated[static_cast<std::size_t>(l)];
            out.contaminated[static_cast<std::size_t>(l)] = out.contaminated[static_cast<std::size_t>(k)];
            out.contaminated[static_cast<std::size_t>(k)] = tmp;
        }
    }
    return out;
}

Dataset build_outlier_dataset(Index proper, Index outliers, const CesModel& nominal,
                              RngStream& rng) {
    return build_outlier_dataset_labeled(proper, outliers, nominal, rng).data;
}

}  // namespace shapekit
