#pragma once

// Scalar special functions used by the score functions and samplers.
//
// All functions are pure and reentrant. Domain violations raise
// shapekit::DomainError; quantile solvers that hit their iteration cap raise
// shapekit::NumericError carrying the best iterate and its cdf residual.

#include <cstddef>

namespace shapekit::special {

struct QuantileResult {
    double value = 0.0;         // x with cdf(x) ~= u
    std::size_t iterations = 0;
    double residual = 0.0;      // |cdf(value) - u|
};

inline constexpr std::size_t kQuantileMaxIter = 200;
inline constexpr double kQuantileTol = 1e-12;

double ln_gamma(double x);

/// Regularized lower incomplete gamma P(a, x).
double gamma_cdf(double a, double x);
double gamma_pdf(double a, double x);
QuantileResult gamma_quantile(double a, double u);

/// Regularized incomplete beta I_x(a, b).
double beta_cdf(double a, double b, double x);

/// Fisher-Snedecor F(d1, d2) distribution.
double fisher_cdf(double d1, double d2, double x);
double fisher_pdf(double d1, double d2, double x);
QuantileResult fisher_quantile(int d1, double d2, double u);

}  // namespace shapekit::special
