#pragma once

// Dense complex Hermitian primitives and the structural operators used by
// the one-step R-estimator: vec/ovec, Kronecker products, the selection
// matrix P that drops the first vec coordinate, the projector onto the
// orthogonal complement of vec(I_N), and L_V = P (V^{-T/2} (x) V^{-1/2}) Pi.
//
// vec is column-major everywhere.

#include <complex>

#include <Eigen/Dense>

namespace shapekit {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPdRelThreshold = 1e-12;

/// True when a == a^H entrywise to kHermitianTol (relative to the largest entry).
bool is_hermitian(const CMatrix& a, double tol = kHermitianTol);
/// Cholesky succeeds and the matrix is Hermitian.
bool is_positive_definite(const CMatrix& a);
CMatrix hermitian_part(const CMatrix& a);

/// Hermitian positive-definite matrix. Construction validates both properties.
class HermitianPD {
public:
    explicit HermitianPD(CMatrix m);

    const CMatrix& matrix() const noexcept { return m_; }
    Index dim() const noexcept { return m_.rows(); }
    Complex operator()(Index i, Index j) const { return m_(i, j); }

private:
    CMatrix m_;
};

/// Hermitian matrix whose top-left entry is exactly 1.
///
/// Positive-definiteness is not part of the invariant: the one-step
/// R-estimate is a linear update that can leave the cone, and such results
/// are reported (see is_positive_definite()) rather than rejected.
class ShapeMatrix {
public:
    /// Accepts a Hermitian matrix whose top-left entry is 1 up to
    /// kHermitianTol; the entry is then set to exactly 1.
    explicit ShapeMatrix(CMatrix m);

    /// Divides a Hermitian matrix by its (positive) top-left entry.
    static ShapeMatrix normalize(const CMatrix& m);

    const CMatrix& matrix() const noexcept { return m_; }
    Index dim() const noexcept { return m_.rows(); }
    Complex operator()(Index i, Index j) const { return m_(i, j); }
    bool is_positive_definite() const { return shapekit::is_positive_definite(m_); }

private:
    struct Trusted {};
    ShapeMatrix(CMatrix m, Trusted) : m_(std::move(m)) {}
    CMatrix m_;
};

CVector vec(const CMatrix& a);
CMatrix unvec(const CVector& v, Index rows, Index cols);
CVector ovec(const CMatrix& a);
/// Inverse of ovec with the top-left entry set to 1, Hermitian-symmetrized.
ShapeMatrix unovec(const CVector& v);

CMatrix kron(const CMatrix& a, const CMatrix& b);

/// W with W V W = I via Hermitian eigendecomposition. Throws
/// SingularityError when the smallest eigenvalue is not above
/// kPdRelThreshold times the largest.
CMatrix herm_inv_sqrt(const CMatrix& v);
HermitianPD herm_inv_sqrt(const HermitianPD& v);
HermitianPD herm_sqrt(const HermitianPD& v);

double frobenius(const CMatrix& a);

/// P (selection of vec coordinates 2..N^2) and the projector
/// I - vec(I) vec(I)^T / N, both dense and real.
struct StructuralOperators {
    Index dim = 0;
    RMatrix P;
    RMatrix PiPerp;
};

StructuralOperators make_structural_operators(Index n);

/// L_V for a Hermitian PD V (typically a ShapeMatrix), (N^2-1) x N^2.
CMatrix build_L(const CMatrix& v, const StructuralOperators& ops);
CMatrix build_L(const ShapeMatrix& v, const StructuralOperators& ops);
/// Same as build_L, from a precomputed W = V^{-1/2}.
CMatrix build_L_from_inv_sqrt(const CMatrix& w);

/// L_V L_V^H evaluated in closed form from V^{-1} as
/// P [V^{-T} (x) V^{-1} - vec(V^{-1}) vec(V^{-1})^H / N] P^T.
CMatrix gram_L(const CMatrix& v_inverse);

}  // namespace shapekit
