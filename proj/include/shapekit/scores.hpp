#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "shapekit/matrix_core.hpp"

namespace shapekit {

/// van der Waerden score: Gamma(N, 1) quantile.
struct VanDerWaerden {};
/// t_nu score N(2N + nu) q / (nu + 2N q), q the Fisher(2N, nu) quantile.
struct TNu {
    double nu;
};
/// Power score N (a + 1) u^a (a = 1 Wilcoxon, a = 2 Spearman).
struct Power {
    double a;
};

/// Rank score K : (0, 1) -> [0, inf) for an N-dimensional model.
class ScoreFunction {
public:
    using Variant = std::variant<VanDerWaerden, TNu, Power>;

    static ScoreFunction van_der_waerden(Index dim);
    static ScoreFunction t_nu(Index dim, double nu);
    static ScoreFunction power(Index dim, double a);
    static ScoreFunction wilcoxon(Index dim) { return power(dim, 1.0); }
    static ScoreFunction spearman(Index dim) { return power(dim, 2.0); }

    Index dim() const noexcept { return dim_; }
    const Variant& variant() const noexcept { return kind_; }

    /// K(u) for u in (0, 1); DomainError otherwise.
    double operator()(double u) const;
    /// Supremum over (0, 1); +inf for van der Waerden.
    double upper_bound() const;
    std::string label() const;

private:
    ScoreFunction(Variant v, Index dim) : kind_(v), dim_(dim) {}
    Variant kind_;
    Index dim_;
};

double evaluate(const ScoreFunction& k, double u);

/// 1-based ranks: r_l = 1 + #{values strictly smaller}, ties broken by index.
std::vector<Index> ranks(std::span<const double> values);

/// K(r / (L + 1)) for r = 1..L (index r - 1).
std::vector<double> rank_scores(const ScoreFunction& k, Index count);

}  // namespace shapekit
