#include "shapekit/estimators.hpp"

#include <cmath>
#include <sstream>

#include "shapekit/errors.hpp"

namespace shapekit {
namespace {

void require_data(const Dataset& data, const char* who) {
    if (data.size() < 1 || data.dim() < 1) throw DataError(std::string(who) + ": empty dataset");
    if (!data.matrix().allFinite()) throw DataError(std::string(who) + ": non-finite data");
}

EstimatorOutput finish(ShapeMatrix shape, EstimatorDiagnostics diag) {
    CMatrix renorm = renormalize(shape);
    return EstimatorOutput{std::move(shape), std::move(renorm), diag};
}

}  // namespace

CMatrix renormalize(const CMatrix& v) {
    const double tr = v.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr))
        throw DomainError("renormalize: trace must be positive");
    return (static_cast<double>(v.rows()) / tr) * v;
}

CMatrix renormalize(const ShapeMatrix& v) { return renormalize(v.matrix()); }

EstimatorOutput scm(const Dataset& data) {
    require_data(data, "scm");
    const CMatrix& z = data.matrix();
    CMatrix sigma = (z * z.adjoint()) / static_cast<double>(data.size());
    if (!(sigma(0, 0).real() > 0.0))
        throw DataError("scm: top-left entry of the sample covariance is zero");
    return finish(ShapeMatrix::normalize(sigma), {});
}

CMatrix tyler_map(const Dataset& data, const CMatrix& v) {
    const Index n = data.dim();
    const Index count = data.size();
    Eigen::LLT<CMatrix> llt(v);
    if (llt.info() != Eigen::Success)
        throw SingularityError("tyler: iterate is not positive-definite (rank-deficient data?)", 0.0);
    const CMatrix y = llt.matrixL().solve(data.matrix());
    const RVector q = y.colwise().squaredNorm().transpose();
    // Accumulate u u^H one observation at a time with the products written
    // out, so multiplying an observation by i (or a power of two) changes no
    // bits. A complex GEMM splits re*re and im*im into separate accumulators.
    CMatrix acc = CMatrix::Zero(n, n);
    CVector u(n);
    for (Index l = 0; l < count; ++l) {
        if (!(q(l) > 0.0) || !std::isfinite(q(l)))
            throw DataError("tyler: zero or non-finite observation");
        u = data.column(l) / std::sqrt(q(l));
        for (Index b = 0; b < n; ++b) {
            const double br = u(b).real(), bi = u(b).imag();
            for (Index a = b; a < n; ++a) {
                const double ar = u(a).real(), ai = u(a).imag();
                acc(a, b) += Complex(ar * br + ai * bi, ai * br - ar * bi);
            }
        }
    }
    const double scale = static_cast<double>(n) / static_cast<double>(count);
    CMatrix next(n, n);
    for (Index b = 0; b < n; ++b) {
        next(b, b) = Complex(scale * acc(b, b).real(), 0.0);
        for (Index a = b + 1; a < n; ++a) {
            next(a, b) = scale * acc(a, b);
            next(b, a) = std::conj(next(a, b));
        }
    }
    return next;
}

EstimatorOutput tyler(const Dataset& data, const TylerOptions& opts) {
    require_data(data, "tyler");
    if (data.size() <= data.dim())
        throw DataError("tyler: needs more observations than dimensions");
    CMatrix v = CMatrix::Identity(data.dim(), data.dim());
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        CMatrix next = tyler_map(data, v);
        change = (next - v).norm() / v.norm();
        v = std::move(next);
        if (change <= opts.tol) {
            EstimatorDiagnostics diag;
            diag.iterations = it;
            diag.residual = change;
            return finish(ShapeMatrix::normalize(v), diag);
        }
    }
    std::ostringstream os;
    os << "tyler: no convergence after " << opts.max_iter << " iterations";
    throw ConvergenceError(os.str(), change);
}

RStatistics r_statistics_from_inv_sqrt(const Dataset& data, const CMatrix& w) {
    require_data(data, "r_statistics");
    if (w.rows() != data.dim()) throw ShapeError("r_statistics: dimension mismatch");
    RStatistics s;
    s.U = w * data.matrix();
    s.Q = s.U.colwise().squaredNorm().transpose();
    for (Index l = 0; l < data.size(); ++l) {
        if (!(s.Q(l) > 0.0)) throw DataError("r_statistics: zero observation");
        s.U.col(l) /= std::sqrt(s.Q(l));
    }
    s.r = ranks(std::span<const double>(s.Q.data(), static_cast<std::size_t>(s.Q.size())));
    return s;
}

RStatistics r_statistics(const Dataset& data, const CMatrix& v) {
    return r_statistics_from_inv_sqrt(data, herm_inv_sqrt(v));
}

RStatistics r_statistics(const Dataset& data, const ShapeMatrix& v) {
    return r_statistics(data, v.matrix());
}

CVector delta_tilde(const RStatistics& stats, const CMatrix& lmat,
                    std::span<const double> score_table) {
    const Index count = stats.U.cols();
    const Index n = stats.U.rows();
    if (static_cast<Index>(score_table.size()) != count)
        throw ShapeError("delta_tilde: score table length must equal L");
    if (lmat.rows() != n * n - 1 || lmat.cols() != n * n)
        throw ShapeError("delta_tilde: L matrix has the wrong shape");
    RVector weights(count);
    for (Index l = 0; l < count; ++l)
        weights(l) = score_table[static_cast<std::size_t>(stats.r[static_cast<std::size_t>(l)] - 1)];
    const CMatrix s = stats.U * weights.asDiagonal() * stats.U.adjoint();
    return (lmat * vec(s)) / std::sqrt(static_cast<double>(count));
}

CVector delta_tilde(const RStatistics& stats, const CMatrix& lmat, const ScoreFunction& k) {
    const auto table = rank_scores(k, stats.U.cols());
    return delta_tilde(stats, lmat, table);
}

CVector delta_tilde_at(const Dataset& data, const CMatrix& v, std::span<const double> score_table) {
    const CMatrix w = herm_inv_sqrt(v);
    return delta_tilde(r_statistics_from_inv_sqrt(data, w), build_L_from_inv_sqrt(w), score_table);
}

CMatrix draw_perturbation(Index n, double upsilon, RngStream& rng) {
    if (!(upsilon > 0.0)) throw DomainError("draw_perturbation: upsilon must be > 0");
    CMatrix g(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) g(i, j) = upsilon * rng.complex_normal();
    g(0, 0) = 0.0;
    CMatrix h = 0.5 * (g + g.adjoint());
    // exact Hermitian structure and a real diagonal
    for (Index j = 0; j < n; ++j) {
        h(j, j) = h(j, j).real();
        for (Index i = j + 1; i < n; ++i) h(j, i) = std::conj(h(i, j));
    }
    return h;
}

namespace {

double alpha_from(const Dataset& data, const CMatrix& v, std::span<const double> table,
                  const CMatrix& h0, const CMatrix& lmat, const CVector& delta_v) {
    const double root_l = std::sqrt(static_cast<double>(data.size()));
    const CVector denom_vec = lmat * (lmat.adjoint() * ovec(h0));
    const double denom = denom_vec.norm();
    if (!(denom >= 1e-14)) throw DomainError("alpha_hat: degenerate perturbation");
    const CMatrix v_pert = v + h0 / root_l;
    const CVector delta_p = delta_tilde_at(data, v_pert, table);
    return (delta_p - delta_v).norm() / denom;
}

}  // namespace

double alpha_hat(const Dataset& data, const CMatrix& v, std::span<const double> score_table,
                 const CMatrix& h0, const CMatrix& lmat) {
    const CVector delta_v = delta_tilde_at(data, v, score_table);
    return alpha_from(data, v, score_table, h0, lmat, delta_v);
}

double alpha_hat(const Dataset& data, const ShapeMatrix& v, const ScoreFunction& k,
                 const CMatrix& h0, const CMatrix& lmat) {
    const auto table = rank_scores(k, data.size());
    return alpha_hat(data, v.matrix(), table, h0, lmat);
}

EstimatorOutput r_estimate(const Dataset& data, const EstimatorOutput& prelim,
                           std::span<const double> score_table, RngStream& rng,
                           const ROptions& opts) {
    require_data(data, "r_estimate");
    const Index n = data.dim();
    const CMatrix& v = prelim.shape.matrix();
    if (v.rows() != n) throw ShapeError("r_estimate: preliminary estimate has the wrong dimension");

    const CMatrix w = herm_inv_sqrt(v);
    const RStatistics stats = r_statistics_from_inv_sqrt(data, w);
    const CMatrix lmat = build_L_from_inv_sqrt(w);
    const CVector delta = delta_tilde(stats, lmat, score_table);

    EstimatorDiagnostics diag;
    diag.delta_norm = delta.norm();
    if (diag.delta_norm == 0.0) return finish(prelim.shape, diag);

    const double root_l = std::sqrt(static_cast<double>(data.size()));
    CMatrix h0;
    for (;;) {
        if (diag.perturbation_draws == opts.max_perturbation_draws)
            throw SingularityError("r_estimate: perturbed preliminary estimate is not positive-definite", 0.0);
        h0 = draw_perturbation(n, opts.upsilon, rng);
        ++diag.perturbation_draws;
        if (is_positive_definite(v + h0 / root_l)) break;
    }

    const double alpha = alpha_from(data, v, score_table, h0, lmat, delta);
    diag.alpha = alpha;
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw ConditioningError("r_estimate: alpha estimate is not positive", alpha);

    const CMatrix gram = gram_L(w * w);
    Eigen::LLT<CMatrix> llt(gram);
    if (llt.info() != Eigen::Success)
        throw ConditioningError("r_estimate: L L^H is not positive-definite",
                                std::numeric_limits<double>::infinity());
    const double rcond = llt.rcond();
    diag.condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(diag.condition <= opts.condition_limit))
        throw ConditioningError("r_estimate: Upsilon is ill-conditioned", diag.condition);

    const CVector step = llt.solve(delta) / (alpha * root_l);
    ShapeMatrix shape = unovec(ovec(v) + step);
    diag.positive_definite = shape.is_positive_definite();
    return finish(std::move(shape), diag);
}

EstimatorOutput r_estimate(const Dataset& data, const EstimatorOutput& prelim,
                           const ScoreFunction& k, RngStream& rng, const ROptions& opts) {
    if (k.dim() != data.dim()) throw ShapeError("r_estimate: score dimension differs from data");
    const auto table = rank_scores(k, data.size());
    return r_estimate(data, prelim, table, rng, opts);
}

}  // namespace shapekit
