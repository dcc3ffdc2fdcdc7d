#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "oracles.hpp"
#include "shapekit/errors.hpp"
#include "shapekit/special_fn.hpp"

using namespace shapekit;
using namespace shapekit::special;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("ln_gamma at integer and half-integer points", "[special_fn]") {
    CHECK(ln_gamma(1.0) == 0.0);
    CHECK_THAT(ln_gamma(8.0), WithinRel(std::log(5040.0), 1e-13));
    CHECK_THAT(ln_gamma(0.5), WithinRel(0.5 * std::log(M_PI), 1e-13));
    CHECK_THAT(ln_gamma(8.0), WithinAbs(8.525161361, 1e-9));
    CHECK_THAT(ln_gamma(0.5), WithinAbs(0.572364943, 1e-9));
}

TEST_CASE("ln_gamma recurrence on [0.1, 50]", "[special_fn][property]") {
    for (double x = 0.1; x <= 50.0; x += 0.0491) {
        INFO("x = " << x);
        CHECK_THAT(ln_gamma(x + 1.0) - ln_gamma(x), WithinAbs(std::log(x), 1e-12));
    }
}

TEST_CASE("ln_gamma rejects non-positive and non-finite input", "[special_fn]") {
    CHECK_THROWS_AS(ln_gamma(0.0), DomainError);
    CHECK_THROWS_AS(ln_gamma(-2.5), DomainError);
    CHECK_THROWS_AS(ln_gamma(NAN), DomainError);
    CHECK_THROWS_AS(ln_gamma(INFINITY), DomainError);
}

TEST_CASE("gamma_cdf closed forms", "[special_fn]") {
    CHECK_THAT(gamma_cdf(1.0, std::log(2.0)), WithinAbs(0.5, 1e-15));
    for (double a : {0.3, 1.0, 8.0, 80.0}) CHECK(gamma_cdf(a, 0.0) == 0.0);
    for (double x : {0.01, 0.5, 3.0, 20.0}) CHECK_THAT(gamma_cdf(1.0, x), WithinAbs(-std::expm1(-x), 1e-14));
}

TEST_CASE("gamma_cdf matches quadrature of the Gamma density", "[special_fn]") {
    CHECK_THAT(gamma_cdf(8.0, 7.6692494), WithinAbs(0.5, 1e-7));
    CHECK_THAT(oracle::gamma_cdf_quadrature(8.0, 7.6692494), WithinAbs(0.5, 1e-7));
    for (double a : {0.5, 1.5, 8.0, 25.0, 80.0})
        for (double x : {0.1, 1.0, 5.0, 8.0, 30.0, 100.0}) {
            INFO("a = " << a << ", x = " << x);
            CHECK_THAT(gamma_cdf(a, x), WithinAbs(oracle::gamma_cdf_quadrature(a, x), 1e-13));
        }
}

TEST_CASE("gamma_cdf agrees with Boost.Math on a wide grid", "[special_fn]") {
    for (double a : {0.05, 0.3, 1.0, 2.5, 8.0, 40.0, 80.0, 400.0})
        for (double x : {1e-6, 0.01, 0.3, 1.0, 4.0, 10.0, 60.0, 100.0, 500.0}) {
            INFO("a = " << a << ", x = " << x);
            CHECK_THAT(gamma_cdf(a, x), WithinAbs(boost::math::gamma_p(a, x), 1e-13));
        }
}

TEST_CASE("gamma_cdf is monotone in x", "[special_fn][property]") {
    for (double a : {0.5, 8.0, 80.0}) {
        double prev = 0.0;
        for (double x = 0.0; x <= 3.0 * a + 20.0; x += 0.01) {
            const double p = gamma_cdf(a, x);
            REQUIRE(p >= prev);
            prev = p;
        }
    }
}

TEST_CASE("gamma_cdf domain errors", "[special_fn]") {
    CHECK_THROWS_AS(gamma_cdf(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(gamma_cdf(1.0, -1.0), DomainError);
    CHECK_THROWS_AS(gamma_cdf(NAN, 1.0), DomainError);
}

TEST_CASE("gamma_quantile analytic inverses", "[special_fn]") {
    CHECK_THAT(gamma_quantile(1.0, 0.5).value, WithinRel(std::log(2.0), 1e-12));
    CHECK_THAT(gamma_quantile(1.0, 1.0 - std::exp(-1.0)).value, WithinRel(1.0, 1e-12));
}

TEST_CASE("gamma_quantile median of Gamma(8) from bisection on quadrature", "[special_fn]") {
    const double oracle_median = oracle::bisect(
        [](double x) { return oracle::gamma_cdf_quadrature(8.0, x) - 0.5; }, 0.0, 50.0, 1e-13);
    const QuantileResult q = gamma_quantile(8.0, 0.5);
    CHECK_THAT(q.value, WithinAbs(oracle_median, 1e-9));
    CHECK_THAT(q.value, WithinAbs(7.6692494, 1e-6));
    CHECK(q.residual <= 1e-12);
}

TEST_CASE("gamma_quantile round trip and residual contract", "[special_fn][property]") {
    for (double a : {0.2, 1.0, 3.0, 8.0, 16.0, 80.0})
        for (double u : {1e-9, 1e-4, 0.01, 0.1, 0.37, 0.5, 0.9, 0.999, 1.0 - 1e-8}) {
            INFO("a = " << a << ", u = " << u);
            const QuantileResult q = gamma_quantile(a, u);
            CHECK(std::isfinite(q.value));
            CHECK(q.value >= 0.0);
            CHECK(q.residual <= 1e-12);
            CHECK(q.iterations <= kQuantileMaxIter);
            CHECK_THAT(gamma_cdf(a, q.value), WithinAbs(u, 1e-10));
        }
}

TEST_CASE("gamma_quantile strictly increases on a 1000-point grid", "[special_fn][property]") {
    for (double a : {1.0, 8.0}) {
        double prev = -1.0;
        for (int k = 1; k <= 1000; ++k) {
            const double v = gamma_quantile(a, k / 1001.0).value;
            REQUIRE(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("gamma_quantile domain errors", "[special_fn]") {
    CHECK_THROWS_AS(gamma_quantile(8.0, 0.0), DomainError);
    CHECK_THROWS_AS(gamma_quantile(8.0, 1.0), DomainError);
    CHECK_THROWS_AS(gamma_quantile(-1.0, 0.5), DomainError);
}

TEST_CASE("beta_cdf closed forms", "[special_fn]") {
    CHECK(beta_cdf(2.0, 3.0, 0.0) == 0.0);
    CHECK_THAT(beta_cdf(1.0, 1.0, 0.3), WithinAbs(0.3, 1e-15));
    CHECK_THAT(beta_cdf(2.0, 3.0, 0.5), WithinAbs(0.6875, 1e-14));
    CHECK_THAT(beta_cdf(2.0, 3.0, 1.0), WithinAbs(1.0, 1e-15));
}

TEST_CASE("beta_cdf matches quadrature and Boost.Math", "[special_fn]") {
    for (double a : {0.5, 1.0, 2.5, 8.0, 16.0})
        for (double b : {0.5, 1.0, 2.5, 40.0})
            for (double x : {0.01, 0.2, 0.5, 0.8, 0.99}) {
                INFO("a = " << a << ", b = " << b << ", x = " << x);
                CHECK_THAT(beta_cdf(a, b, x), WithinAbs(boost::math::ibeta(a, b, x), 1e-13));
                if (a >= 1.0 && b >= 1.0)
                    CHECK_THAT(beta_cdf(a, b, x), WithinAbs(oracle::beta_cdf_quadrature(a, b, x), 1e-12));
            }
}

TEST_CASE("beta_cdf symmetry I_x(a,b) = 1 - I_{1-x}(b,a)", "[special_fn][property]") {
    for (double a : {0.7, 3.0, 8.0})
        for (double b : {0.7, 2.5, 500.0})
            for (double x = 0.05; x < 1.0; x += 0.05)
                CHECK_THAT(beta_cdf(a, b, x) + beta_cdf(b, a, 1.0 - x), WithinAbs(1.0, 1e-13));
}

TEST_CASE("beta_cdf domain errors", "[special_fn]") {
    CHECK_THROWS_AS(beta_cdf(0.0, 1.0, 0.5), DomainError);
    CHECK_THROWS_AS(beta_cdf(1.0, -1.0, 0.5), DomainError);
    CHECK_THROWS_AS(beta_cdf(1.0, 1.0, 1.5), DomainError);
    CHECK_THROWS_AS(beta_cdf(1.0, 1.0, -0.1), DomainError);
}

TEST_CASE("fisher_quantile closed forms", "[special_fn]") {
    CHECK_THAT(fisher_quantile(2, 2.0, 0.5).value, WithinRel(1.0, 1e-12));
    CHECK(fisher_quantile(16, 5.0, 1e-300).value < 1e-10);
    // F(2,2) cdf is x / (1 + x)
    for (double u : {0.1, 0.25, 0.75, 0.99})
        CHECK_THAT(fisher_quantile(2, 2.0, u).value, WithinRel(u / (1.0 - u), 1e-11));
}

TEST_CASE("fisher_quantile(16, 5, 0.9) against bisection on beta_cdf", "[special_fn]") {
    const double x = fisher_quantile(16, 5.0, 0.9).value;
    CHECK_THAT(beta_cdf(8.0, 2.5, 16.0 * x / (16.0 * x + 5.0)), WithinAbs(0.9, 1e-10));
    const double oracle_x = oracle::bisect(
        [](double t) { return boost::math::ibeta(8.0, 2.5, 16.0 * t / (16.0 * t + 5.0)) - 0.9; },
        0.0, 100.0, 1e-14);
    CHECK_THAT(x, WithinRel(oracle_x, 1e-9));
}

TEST_CASE("fisher_cdf matches quadrature of the F density", "[special_fn]") {
    for (int d1 : {2, 4, 16})
        for (double d2 : {1.0, 5.0, 40.0})
            for (double x : {0.05, 0.5, 1.0, 3.0, 20.0}) {
                const double a = 0.5 * d1;
                const double b = 0.5 * d2;
                const double log_norm = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
                auto pdf = [&](double t) {
                    if (t <= 0.0) return d1 == 2 ? 1.0 : 0.0;
                    return std::exp(a * std::log(d1 / d2) + (a - 1.0) * std::log(t) -
                                    (a + b) * std::log1p(d1 * t / d2) - log_norm);
                };
                INFO("d1 = " << d1 << ", d2 = " << d2 << ", x = " << x);
                CHECK_THAT(fisher_cdf(d1, d2, x), WithinAbs(oracle::integrate(pdf, 0.0, x), 1e-12));
                CHECK_THAT(fisher_pdf(d1, d2, x), WithinRel(pdf(x), 1e-12));
            }
}

TEST_CASE("fisher_quantile round trip and monotonicity", "[special_fn][property]") {
    for (double d2 : {1.0, 5.0, 10.0, 1000.0})
        for (double u : {1e-8, 0.01, 0.3, 0.5, 0.9, 0.999}) {
            INFO("d2 = " << d2 << ", u = " << u);
            const QuantileResult q = fisher_quantile(16, d2, u);
            CHECK(q.residual <= 1e-12);
            CHECK_THAT(fisher_cdf(16, d2, q.value), WithinAbs(u, 1e-10));
        }
    double prev = -1.0;
    for (int k = 1; k <= 1000; ++k) {
        const double v = fisher_quantile(16, 5.0, k / 1001.0).value;
        REQUIRE(v > prev);
        prev = v;
    }
}

TEST_CASE("fisher_quantile domain errors", "[special_fn]") {
    CHECK_THROWS_AS(fisher_quantile(0, 5.0, 0.5), DomainError);
    CHECK_THROWS_AS(fisher_quantile(16, 0.0, 0.5), DomainError);
    CHECK_THROWS_AS(fisher_quantile(16, 5.0, 1.0), DomainError);
}

TEST_CASE("numeric errors carry the best iterate", "[special_fn]") {
    const NumericError e("quantile did not converge", 1.5, 1e-3);
    CHECK(e.best_iterate() == 1.5);
    CHECK(e.residual() == 1e-3);
}
