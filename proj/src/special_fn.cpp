#include "shapekit/special_fn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "shapekit/errors.hpp"

namespace shapekit::special {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;
constexpr int kSeriesMaxTerms = 10000;

void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

// Series for P(a, x), valid and fast for x < a + 1.
double lower_gamma_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < kSeriesMaxTerms; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - ln_gamma(a));
}

// Modified Lentz continued fraction for Q(a, x), x >= a + 1.
double upper_gamma_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kSeriesMaxTerms; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return std::exp(-x + a * std::log(x) - ln_gamma(a)) * h;
}

// Continued fraction for the incomplete beta function.
double beta_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m < kSeriesMaxTerms; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) break;
    }
    return h;
}

double ln_beta(double a, double b) { return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b); }

// I_x(a, b) with the complement 1 - x supplied separately so callers that
// know it exactly (the Fisher transform) do not lose precision near x = 1.
double beta_cdf_split(double a, double b, double x, double one_minus_x) {
    if (x <= 0.0) return 0.0;
    if (one_minus_x <= 0.0) return 1.0;
    const double front =
        std::exp(a * std::log(x) + b * std::log(one_minus_x) - ln_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
    return 1.0 - front * beta_fraction(b, a, one_minus_x) / b;
}

// Safeguarded Newton on a continuous increasing cdf supported on [0, inf).
// The bracket grows geometrically from `start` until it contains the root;
// any Newton step that leaves the bracket falls back to bisection.
template <class Cdf, class Pdf>
QuantileResult invert_cdf(Cdf&& cdf, Pdf&& pdf, double u, double start, const char* name) {
    double lo = 0.0;
    double hi = std::max(start, 1.0);
    std::size_t iter = 0;
    while (cdf(hi) < u) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi) || ++iter > 4 * kQuantileMaxIter)
            throw NumericError(std::string(name) + ": could not bracket quantile", lo,
                               std::abs(cdf(lo) - u));
    }

    double x = std::clamp(start, lo, hi);
    if (x <= lo || x >= hi) x = 0.5 * (lo + hi);
    const double tol = kQuantileTol * std::min(u, 1.0);

    double best = x;
    double best_res = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= kQuantileMaxIter; ++it) {
        const double f = cdf(x) - u;
        const double res = std::abs(f);
        if (res < best_res) {
            best = x;
            best_res = res;
        }
        if (res <= tol) return {x, it, res};
        if (f < 0.0)
            lo = x;
        else
            hi = x;
        if (hi - lo <= 4.0 * kEps * hi) {
            // Bracket collapsed to a few ulps: nothing left to refine.
            if (best_res <= kQuantileTol) return {best, it, best_res};
            break;
        }
        const double slope = pdf(x);
        // in the lower tail the cdf behaves like a power of x, so step on log F
        const double fx = f + u;
        double next = (u < 0.5 && fx > 0.0) ? x - std::log(fx / u) * fx / slope : x - f / slope;
        if (!(slope > 0.0) || !std::isfinite(next) || next <= lo || next >= hi) {
            if (lo == 0.0)
                next = hi / 16.0;
            else if (hi > 4.0 * lo)
                next = std::sqrt(lo * hi);
            else
                next = 0.5 * (lo + hi);
        }
        x = next;
    }
    throw NumericError(std::string(name) + ": quantile iteration cap reached", best, best_res);
}

}  // namespace

double ln_gamma(double x) {
    require(std::isfinite(x) && x > 0.0, "ln_gamma: argument must be positive and finite");
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

double gamma_cdf(double a, double x) {
    require(std::isfinite(a) && a > 0.0, "gamma_cdf: shape must be positive");
    require(!std::isnan(x) && x >= 0.0, "gamma_cdf: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return lower_gamma_series(a, x);
    return 1.0 - upper_gamma_fraction(a, x);
}

double gamma_pdf(double a, double x) {
    require(std::isfinite(a) && a > 0.0, "gamma_pdf: shape must be positive");
    require(!std::isnan(x) && x >= 0.0, "gamma_pdf: x must be nonnegative");
    if (x == 0.0) {
        if (a < 1.0) return std::numeric_limits<double>::infinity();
        return a == 1.0 ? 1.0 : 0.0;
    }
    return std::exp((a - 1.0) * std::log(x) - x - ln_gamma(a));
}

QuantileResult gamma_quantile(double a, double u) {
    require(std::isfinite(a) && a > 0.0, "gamma_quantile: shape must be positive");
    require(u > 0.0 && u < 1.0, "gamma_quantile: probability must lie in (0, 1)");
    return invert_cdf([a](double x) { return gamma_cdf(a, x); },
                      [a](double x) { return gamma_pdf(a, x); }, u, a, "gamma_quantile");
}

double beta_cdf(double a, double b, double x) {
    require(std::isfinite(a) && a > 0.0 && std::isfinite(b) && b > 0.0,
            "beta_cdf: parameters must be positive");
    require(x >= 0.0 && x <= 1.0, "beta_cdf: x must lie in [0, 1]");
    return beta_cdf_split(a, b, x, 1.0 - x);
}

double fisher_cdf(double d1, double d2, double x) {
    require(std::isfinite(d1) && d1 > 0.0 && std::isfinite(d2) && d2 > 0.0,
            "fisher_cdf: degrees of freedom must be positive");
    require(!std::isnan(x) && x >= 0.0, "fisher_cdf: x must be nonnegative");
    if (std::isinf(x)) return 1.0;
    const double denom = d1 * x + d2;
    return beta_cdf_split(0.5 * d1, 0.5 * d2, d1 * x / denom, d2 / denom);
}

double fisher_pdf(double d1, double d2, double x) {
    require(std::isfinite(d1) && d1 > 0.0 && std::isfinite(d2) && d2 > 0.0,
            "fisher_pdf: degrees of freedom must be positive");
    require(!std::isnan(x) && x >= 0.0, "fisher_pdf: x must be nonnegative");
    const double a = 0.5 * d1;
    const double b = 0.5 * d2;
    if (x == 0.0) {
        if (a < 1.0) return std::numeric_limits<double>::infinity();
        return a == 1.0 ? 1.0 : 0.0;
    }
    const double log_pdf = a * std::log(d1) + b * std::log(d2) + (a - 1.0) * std::log(x) -
                           (a + b) * std::log(d1 * x + d2) - ln_beta(a, b);
    return std::exp(log_pdf);
}

QuantileResult fisher_quantile(int d1, double d2, double u) {
    require(d1 >= 1, "fisher_quantile: d1 must be a positive integer");
    require(std::isfinite(d2) && d2 > 0.0, "fisher_quantile: d2 must be positive");
    require(u > 0.0 && u < 1.0, "fisher_quantile: probability must lie in (0, 1)");
    const double n1 = static_cast<double>(d1);
    const double mean = d2 > 2.0 ? d2 / (d2 - 2.0) : 1.0;
    return invert_cdf([n1, d2](double x) { return fisher_cdf(n1, d2, x); },
                      [n1, d2](double x) { return fisher_pdf(n1, d2, x); }, u, mean,
                      "fisher_quantile");
}

}  // namespace shapekit::special
