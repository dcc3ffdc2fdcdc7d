#pragma once

// Shape-matrix estimators: sample covariance, Tyler's fixed point, and the
// one-step rank-based (R-) estimator built on either of them.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "shapekit/dataset.hpp"
#include "shapekit/matrix_core.hpp"
#include "shapekit/rng.hpp"
#include "shapekit/scores.hpp"

namespace shapekit {

struct EstimatorDiagnostics {
    std::size_t iterations = 0;
    double residual = 0.0;
    /// One-step estimator only.
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double delta_norm = std::numeric_limits<double>::quiet_NaN();
    double condition = std::numeric_limits<double>::quiet_NaN();
    std::size_t perturbation_draws = 0;
    bool positive_definite = true;
};

struct EstimatorOutput {
    ShapeMatrix shape;
    /// N * shape / trace(shape).
    CMatrix renormalized;
    EstimatorDiagnostics diagnostics;
};

/// N V / trace(V). DomainError when the trace is not positive.
CMatrix renormalize(const CMatrix& v);
CMatrix renormalize(const ShapeMatrix& v);

EstimatorOutput scm(const Dataset& data);

struct TylerOptions {
    double tol = 1e-9;          // relative Frobenius change between iterates
    std::size_t max_iter = 200;
};

EstimatorOutput tyler(const Dataset& data, const TylerOptions& opts = {});
/// Right-hand side of Tyler's fixed-point equation, (N/L) sum z z^H / (z^H V^{-1} z).
CMatrix tyler_map(const Dataset& data, const CMatrix& v);

/// Quantities the one-step correction is built from, evaluated at a shape V.
struct RStatistics {
    RVector Q;              // z_l^H V^{-1} z_l
    CMatrix U;              // columns u_l = Q_l^{-1/2} V^{-1/2} z_l
    std::vector<Index> r;   // 1-based ranks of Q
};

RStatistics r_statistics(const Dataset& data, const CMatrix& v);
RStatistics r_statistics(const Dataset& data, const ShapeMatrix& v);
/// Same, from a precomputed W = V^{-1/2}.
RStatistics r_statistics_from_inv_sqrt(const Dataset& data, const CMatrix& w);

/// L^{-1/2} Lmat sum_l K(r_l/(L+1)) vec(u_l u_l^H), with the score looked up
/// in a table indexed by rank - 1 (see rank_scores()).
CVector delta_tilde(const RStatistics& stats, const CMatrix& lmat,
                    std::span<const double> score_table);
CVector delta_tilde(const RStatistics& stats, const CMatrix& lmat, const ScoreFunction& k);
/// Full evaluation at an arbitrary Hermitian PD V.
CVector delta_tilde_at(const Dataset& data, const CMatrix& v, std::span<const double> score_table);

/// H0 = (G + G^H)/2 with G_ij ~ CN(0, upsilon^2) and G_11 = 0.
CMatrix draw_perturbation(Index n, double upsilon, RngStream& rng);

/// || dtilde(V + H0/sqrt(L)) - dtilde(V) || / || Lmat Lmat^H ovec(H0) ||.
double alpha_hat(const Dataset& data, const CMatrix& v, std::span<const double> score_table,
                 const CMatrix& h0, const CMatrix& lmat);
double alpha_hat(const Dataset& data, const ShapeMatrix& v, const ScoreFunction& k,
                 const CMatrix& h0, const CMatrix& lmat);

struct ROptions {
    double upsilon = 0.01;
    std::size_t max_perturbation_draws = 10;
    double condition_limit = 1e12;
};

/// One-step R-estimate from a preliminary estimate. The perturbation H0 is
/// drawn from `rng`. A result outside the positive-definite cone is returned
/// with diagnostics.positive_definite = false.
EstimatorOutput r_estimate(const Dataset& data, const EstimatorOutput& prelim,
                           std::span<const double> score_table, RngStream& rng,
                           const ROptions& opts = {});
EstimatorOutput r_estimate(const Dataset& data, const EstimatorOutput& prelim,
                           const ScoreFunction& k, RngStream& rng, const ROptions& opts = {});

}  // namespace shapekit
