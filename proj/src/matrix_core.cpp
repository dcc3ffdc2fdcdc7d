#include "shapekit/matrix_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shapekit/errors.hpp"

namespace shapekit {
namespace {

void require_square(const CMatrix& a, const char* who) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        std::ostringstream os;
        os << who << ": expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
        throw ShapeError(os.str());
    }
}

}  // namespace

bool is_hermitian(const CMatrix& a, double tol) {
    if (a.rows() != a.cols()) return false;
    if (!a.allFinite()) return false;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_positive_definite(const CMatrix& a) {
    if (!is_hermitian(a)) return false;
    Eigen::LLT<CMatrix> llt(a);
    return llt.info() == Eigen::Success;
}

CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

HermitianPD::HermitianPD(CMatrix m) : m_(std::move(m)) {
    require_square(m_, "HermitianPD");
    if (!is_hermitian(m_)) throw DomainError("HermitianPD: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (!(lo > 0.0)) {
        std::ostringstream os;
        os << "HermitianPD: smallest eigenvalue " << lo << " is not positive";
        throw SingularityError(os.str(), lo);
    }
}

ShapeMatrix::ShapeMatrix(CMatrix m) : m_(std::move(m)) {
    require_square(m_, "ShapeMatrix");
    if (!is_hermitian(m_)) throw DomainError("ShapeMatrix: matrix is not Hermitian");
    if (std::abs(m_(0, 0) - Complex(1.0)) > kHermitianTol)
        throw DomainError("ShapeMatrix: top-left entry must equal 1");
    m_(0, 0) = 1.0;
}

ShapeMatrix ShapeMatrix::normalize(const CMatrix& m) {
    require_square(m, "ShapeMatrix::normalize");
    const double top = m(0, 0).real();
    if (!(top > 0.0) || !std::isfinite(top))
        throw DataError("ShapeMatrix::normalize: top-left entry must be positive");
    CMatrix s = hermitian_part(m) / top;
    s(0, 0) = 1.0;
    return ShapeMatrix(std::move(s), Trusted{});
}

CVector vec(const CMatrix& a) {
    return Eigen::Map<const CVector>(a.data(), a.size());
}

CMatrix unvec(const CVector& v, Index rows, Index cols) {
    if (rows * cols != v.size()) throw ShapeError("unvec: length does not match rows*cols");
    return Eigen::Map<const CMatrix>(v.data(), rows, cols);
}

CVector ovec(const CMatrix& a) {
    require_square(a, "ovec");
    return vec(a).tail(a.size() - 1);
}

ShapeMatrix unovec(const CVector& v) {
    const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(v.size() + 1))));
    if (n < 1 || n * n - 1 != v.size()) throw ShapeError("unovec: length is not N^2 - 1");
    CVector full(n * n);
    full(0) = 1.0;
    full.tail(n * n - 1) = v;
    return ShapeMatrix::normalize(unvec(full, n, n));
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CMatrix herm_inv_sqrt(const CMatrix& v) {
    require_square(v, "herm_inv_sqrt");
    if (!is_hermitian(v)) throw DomainError("herm_inv_sqrt: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(v);
    if (es.info() != Eigen::Success) throw DomainError("herm_inv_sqrt: eigensolver failed");
    const RVector& ev = es.eigenvalues();
    const double top = ev.maxCoeff();
    const double lo = ev.minCoeff();
    const double eps_pd = kPdRelThreshold * std::max(top, 0.0);
    if (!(top > 0.0) || !(lo > eps_pd)) {
        std::ostringstream os;
        os << "herm_inv_sqrt: eigenvalue " << lo << " below threshold " << eps_pd;
        throw SingularityError(os.str(), lo);
    }
    const RVector scale = ev.cwiseMax(eps_pd).cwiseSqrt().cwiseInverse();
    const CMatrix& u = es.eigenvectors();
    return hermitian_part(u * scale.asDiagonal() * u.adjoint());
}

HermitianPD herm_inv_sqrt(const HermitianPD& v) { return HermitianPD(herm_inv_sqrt(v.matrix())); }

HermitianPD herm_sqrt(const HermitianPD& v) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(v.matrix());
    const RVector root = es.eigenvalues().cwiseSqrt();
    const CMatrix& u = es.eigenvectors();
    return HermitianPD(hermitian_part(u * root.asDiagonal() * u.adjoint()));
}

double frobenius(const CMatrix& a) { return a.norm(); }

StructuralOperators make_structural_operators(Index n) {
    if (n < 1) throw ShapeError("make_structural_operators: dimension must be positive");
    const Index n2 = n * n;
    StructuralOperators ops;
    ops.dim = n;
    ops.P = RMatrix::Zero(n2 - 1, n2);
    ops.P.rightCols(n2 - 1).setIdentity();
    RVector vi = RVector::Zero(n2);
    for (Index k = 0; k < n; ++k) vi(k * n + k) = 1.0;
    ops.PiPerp = RMatrix::Identity(n2, n2) - vi * vi.transpose() / static_cast<double>(n);
    return ops;
}

CMatrix build_L_from_inv_sqrt(const CMatrix& w) {
    const Index n = w.rows();
    const Index n2 = n * n;
    CMatrix k = kron(w.transpose(), w);
    // K Pi = K - (K vec(I)) vec(I)^T / N; vec(I) picks the diagonal columns.
    CVector kv = CVector::Zero(n2);
    for (Index d = 0; d < n; ++d) kv += k.col(d * n + d);
    kv /= static_cast<double>(n);
    for (Index d = 0; d < n; ++d) k.col(d * n + d) -= kv;
    return k.bottomRows(n2 - 1);
}

CMatrix build_L(const CMatrix& v, const StructuralOperators& ops) {
    require_square(v, "build_L");
    if (v.rows() != ops.dim) throw ShapeError("build_L: operator dimension mismatch");
    return build_L_from_inv_sqrt(herm_inv_sqrt(v));
}

CMatrix build_L(const ShapeMatrix& v, const StructuralOperators& ops) {
    return build_L(v.matrix(), ops);
}

CMatrix gram_L(const CMatrix& v_inverse) {
    const Index n = v_inverse.rows();
    const Index n2 = n * n;
    CMatrix g = kron(v_inverse.transpose(), v_inverse);
    const CVector vv = vec(v_inverse);
    g.noalias() -= vv * vv.adjoint() / static_cast<double>(n);
    return g.bottomRightCorner(n2 - 1, n2 - 1);
}

}  // namespace shapekit
