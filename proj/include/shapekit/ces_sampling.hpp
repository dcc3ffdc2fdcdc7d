#pragma once

// Samplers for the complex elliptically symmetric (CES) data models:
// z = sqrt(Q) * Sigma^{1/2} * u with u uniform on the complex unit sphere and
// Q the modular variate of the density generator.

#include <variant>
#include <vector>

#include "shapekit/dataset.hpp"
#include "shapekit/matrix_core.hpp"
#include "shapekit/rng.hpp"

namespace shapekit {

/// Complex t density generator h(t) ~ (lambda/eta + t)^{-(lambda+N)}.
struct ComplexT {
    double lambda;  // tail shape, > 1
    double eta;     // scale, > 0
};

/// Generalized Gaussian density generator l(t) ~ exp(-t^s / b).
struct GeneralizedGaussian {
    double s;  // shape, > 0
    double b;  // scale, > 0
};

/// Distribution of the modular variate Q = z^H Sigma^{-1} z.
class ModularLaw {
public:
    using Variant = std::variant<ComplexT, GeneralizedGaussian>;

    static ModularLaw complex_t(Index dim, double lambda, double eta);
    /// Complex t with eta chosen so that E[Q]/N = sigma2.
    static ModularLaw complex_t_with_power(Index dim, double lambda, double sigma2);
    static ModularLaw generalized_gaussian(Index dim, double s, double b);

    Index dim() const noexcept { return dim_; }
    const Variant& variant() const noexcept { return law_; }

    /// E[Q] (finite for every admissible parameter set).
    double mean() const;
    /// Per-component power E[Q]/N.
    double power() const { return mean() / static_cast<double>(dim_); }
    /// log of t^{N-1} h(t) up to an additive constant: the unnormalized
    /// log-density of Q.
    double log_modular_density(double t) const;

private:
    ModularLaw(Variant v, Index dim) : law_(v), dim_(dim) {}
    Variant law_;
    Index dim_;
};

/// A CES component: scatter matrix, its Hermitian square root, modular law.
struct CesModel {
    HermitianPD scatter;
    HermitianPD scatter_sqrt;
    ModularLaw law;
};

CesModel make_ces_model(const HermitianPD& scatter, const ModularLaw& law);

struct ContaminationConfig {
    double epsilon;
    CesModel nominal;
    CesModel contaminating;
};

struct LabeledDataset {
    Dataset data;
    std::vector<bool> contaminated;  // per column
};

/// Hermitian Toeplitz matrix with first column [1, rho, ..., rho^{N-1}].
HermitianPD toeplitz_scatter(Complex rho, Index n);

CVector sample_sphere(Index n, RngStream& rng);
double sample_modular(const ModularLaw& law, RngStream& rng);

/// b such that a Generalized Gaussian with shape s has E[Q]/N = sigma2.
double gg_scale_for_power(double sigma2, double s, Index n);

/// One CES draw with a given modular value q.
CVector sample_ces(const HermitianPD& scatter_sqrt, double q, RngStream& rng);
CVector sample_ces(const HermitianPD& scatter_sqrt, const ModularLaw& law, RngStream& rng);
Dataset sample_ces_dataset(const CesModel& model, Index count, RngStream& rng);

/// Per-vector Bernoulli(epsilon) mixture of nominal and contaminating draws.
LabeledDataset sample_contaminated_labeled(const ContaminationConfig& cfg, Index count,
                                           RngStream& rng);
Dataset sample_contaminated(const ContaminationConfig& cfg, Index count, RngStream& rng);

/// proper CES draws followed by unit-sphere outliers, then shuffled.
LabeledDataset build_outlier_dataset_labeled(Index proper, Index outliers, const CesModel& nominal,
                                             RngStream& rng);
Dataset build_outlier_dataset(Index proper, Index outliers, const CesModel& nominal,
                              RngStream& rng);

}  // namespace shapekit
