#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "oracles.hpp"
#include "shapekit/ces_sampling.hpp"
#include "shapekit/errors.hpp"

using namespace shapekit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const Complex kRho = std::polar(0.8, 2.0 * M_PI / 5.0);

struct Moments {
    double mean = 0.0;
    double se = 0.0;
};

Moments moments(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return {m, std::sqrt(ss / (n - 1.0) / n)};
}

double ks_against(std::vector<double> x, const std::function<double(double)>& cdf) {
    std::sort(x.begin(), x.end());
    std::vector<double> c(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) c[i] = cdf(x[i]);
    return oracle::ks_statistic(c);
}

double ks_against_density(std::vector<double> x, const std::function<double(double)>& log_density) {
    std::sort(x.begin(), x.end());
    return oracle::ks_statistic(oracle::cdf_sorted(log_density, x));
}

}  // namespace

TEST_CASE("toeplitz scatter: zero correlation gives the identity", "[ces_sampling]") {
    CHECK(toeplitz_scatter(0.0, 4).matrix() == CMatrix::Identity(4, 4));
}

TEST_CASE("toeplitz scatter: first column is [1, rho, ..., rho^{N-1}]", "[ces_sampling]") {
    const HermitianPD s = toeplitz_scatter(kRho, 8);
    CHECK(s(1, 0) == kRho);
    CHECK(s(0, 1) == std::conj(kRho));
    CHECK(s(0, 0) == Complex(1.0));
    Complex p = 1.0;
    for (Index i = 0; i < 8; ++i) {
        CHECK(std::abs(s(i, 0) - p) <= 1e-15);
        p *= kRho;
    }
    for (Index i = 0; i < 8; ++i)
        for (Index j = 0; j < 8; ++j) {
            CHECK(s(i, j) == std::conj(s(j, i)));
            if (i > 0 && j > 0) CHECK(s(i, j) == s(i - 1, j - 1));
        }
    CHECK_THROWS_AS(toeplitz_scatter(Complex(1.0, 0.0), 3), DomainError);
}

TEST_CASE("sphere samples have unit norm", "[ces_sampling]") {
    RngStream rng(1, 0);
    const CVector u1 = sample_sphere(1, rng);
    CHECK_THAT(std::abs(u1(0)), WithinAbs(1.0, 1e-14));
    for (int i = 0; i < 1000; ++i) REQUIRE(std::abs(sample_sphere(8, rng).norm() - 1.0) <= 1e-14);
}

TEST_CASE("sphere second moment is I/N", "[ces_sampling]") {
    const Index n = 4;
    const int draws = 100000;
    RngStream rng(2, 0);
    std::vector<std::vector<double>> re(n * n), im(n * n);
    for (int d = 0; d < draws; ++d) {
        const CVector u = sample_sphere(n, rng);
        const CMatrix o = u * u.adjoint();
        for (Index k = 0; k < n * n; ++k) {
            re[k].push_back(o(k % n, k / n).real());
            im[k].push_back(o(k % n, k / n).imag());
        }
    }
    for (Index k = 0; k < n * n; ++k) {
        const double target = (k % n == k / n) ? 1.0 / n : 0.0;
        const Moments mr = moments(re[k]);
        const Moments mi = moments(im[k]);
        INFO("entry " << k);
        CHECK(std::abs(mr.mean - target) <= 3.0 * mr.se);
        if (k % n != k / n) CHECK(std::abs(mi.mean) <= 3.0 * mi.se);
    }
}

TEST_CASE("complex t modular mean equals N sigma^2", "[ces_sampling]") {
    const ModularLaw law = ModularLaw::complex_t(8, 2.0, 0.5);
    CHECK_THAT(law.mean(), WithinRel(32.0, 1e-14));
    CHECK_THAT(ModularLaw::complex_t_with_power(8, 2.0, 4.0).mean(), WithinRel(32.0, 1e-14));
    // independent quadrature of t^N h(t)
    CHECK_THAT(oracle::mean_by_quadrature(oracle::complex_t_log_density(8, 2.0, 0.5), std::log(16.0)),
               WithinRel(32.0, 1e-8));
    RngStream rng(3, 0);
    std::vector<double> q(1000000);
    for (auto& v : q) v = sample_modular(law, rng);
    const Moments m = moments(q);
    INFO("mean " << m.mean << " se " << m.se);
    CHECK(std::abs(m.mean - 32.0) <= 3.0 * m.se);
}

TEST_CASE("generalized Gaussian with s = 1 is a Gamma(N, b) variate", "[ces_sampling]") {
    const double b = 2.5;
    const ModularLaw law = ModularLaw::generalized_gaussian(8, 1.0, b);
    RngStream rng(4, 0);
    std::vector<double> q(100000);
    for (auto& v : q) v = sample_modular(law, rng);
    CHECK(ks_against(q, [&](double x) { return boost::math::gamma_p(8.0, x / b); }) <
          oracle::ks_critical_1pct(q.size()));
}

TEST_CASE("complex t approaches the Gaussian law as lambda grows", "[ces_sampling]") {
    const double sigma2 = 4.0;
    const ModularLaw law = ModularLaw::complex_t_with_power(8, 1e7, sigma2);
    RngStream rng(5, 0);
    std::vector<double> q(100000);
    for (auto& v : q) v = sample_modular(law, rng);
    CHECK(ks_against(q, [&](double x) { return boost::math::gamma_p(8.0, x / sigma2); }) <= 0.01);
}

TEST_CASE("modular samplers pass KS tests against quadrature cdfs", "[ces_sampling]") {
    const std::size_t n = 100000;
    SECTION("complex t") {
        for (double lambda : {1.5, 2.0, 10.0}) {
            const ModularLaw law = ModularLaw::complex_t_with_power(8, lambda, 4.0);
            const double eta = lambda / (4.0 * (lambda - 1.0));
            RngStream rng(6, static_cast<std::uint64_t>(lambda * 2));
            std::vector<double> q(n);
            for (auto& v : q) v = sample_modular(law, rng);
            INFO("lambda " << lambda);
            CHECK(ks_against_density(q, oracle::complex_t_log_density(8, lambda, eta)) <
                  oracle::ks_critical_1pct(n));
        }
    }
    SECTION("generalized Gaussian") {
        for (double s : {0.1, 0.5, 2.0}) {
            const double b = gg_scale_for_power(4.0, s, 8);
            const ModularLaw law = ModularLaw::generalized_gaussian(8, s, b);
            RngStream rng(7, static_cast<std::uint64_t>(s * 10));
            std::vector<double> q(n);
            for (auto& v : q) v = sample_modular(law, rng);
            INFO("s " << s);
            CHECK(ks_against_density(q, oracle::gg_log_density(8, s, b)) < oracle::ks_critical_1pct(n));
        }
    }
}

TEST_CASE("gg_scale_for_power matches the power", "[ces_sampling]") {
    for (Index n : {1, 4, 8}) CHECK_THAT(gg_scale_for_power(4.0, 1.0, n), WithinRel(4.0, 1e-13));
    const double b = gg_scale_for_power(4.0, 0.1, 8);
    const double mean = oracle::mean_by_quadrature(oracle::gg_log_density(8, 0.1, b), std::log(32.0));
    CHECK_THAT(mean, WithinRel(32.0, 1e-6));
    const ModularLaw law = ModularLaw::generalized_gaussian(8, 0.1, b);
    CHECK_THAT(law.power(), WithinRel(4.0, 1e-12));
    RngStream rng(8, 0);
    std::vector<double> q(200000);
    for (auto& v : q) v = sample_modular(law, rng) / 8.0;
    const Moments m = moments(q);
    CHECK(std::abs(m.mean - 4.0) <= 3.0 * m.se);
}

TEST_CASE("CES covariance equals power times scatter", "[ces_sampling]") {
    const Index n = 8;
    const HermitianPD eye(CMatrix::Identity(n, n));
    const CesModel model = make_ces_model(eye, ModularLaw::complex_t_with_power(n, 2.0, 4.0));
    RngStream rng(9, 0);
    const int draws = 1000000;
    // diagonal entries and one off-diagonal entry
    std::vector<double> d0(draws), d5(draws), off(draws);
    for (int i = 0; i < draws; ++i) {
        const CVector z = sample_ces(model.scatter_sqrt, model.law, rng);
        d0[i] = std::norm(z(0));
        d5[i] = std::norm(z(5));
        off[i] = (z(1) * std::conj(z(2))).real();
    }
    for (const auto* x : {&d0, &d5}) {
        const Moments m = moments(*x);
        INFO("mean " << m.mean << " se " << m.se);
        CHECK(std::abs(m.mean - 4.0) <= 3.0 * m.se);
    }
    const Moments mo = moments(off);
    CHECK(std::abs(mo.mean) <= 3.0 * mo.se);
}

TEST_CASE("CES sample with constant modular value lies on the ellipsoid", "[ces_sampling]") {
    const HermitianPD sigma = toeplitz_scatter(kRho, 8);
    const CesModel model = make_ces_model(sigma, ModularLaw::complex_t(8, 3.0, 1.0));
    const CMatrix inv = sigma.matrix().inverse();
    RngStream rng(10, 0);
    for (int i = 0; i < 100; ++i) {
        const CVector z = sample_ces(model.scatter_sqrt, 7.5, rng);
        REQUIRE_THAT((z.adjoint() * inv * z)(0).real(), WithinRel(7.5, 1e-12));
    }
}

TEST_CASE("Mahalanobis statistics follow the modular law", "[ces_sampling]") {
    const HermitianPD sigma = toeplitz_scatter(kRho, 8);
    const ModularLaw law = ModularLaw::complex_t_with_power(8, 2.0, 4.0);
    const CesModel model = make_ces_model(sigma, law);
    const Eigen::LLT<CMatrix> llt(sigma.matrix());
    RngStream rng(11, 0);
    std::vector<double> q(100000);
    for (auto& v : q) v = llt.matrixL().solve(sample_ces(model.scatter_sqrt, law, rng)).squaredNorm();
    CHECK(ks_against_density(q, oracle::complex_t_log_density(8, 2.0, 0.5)) <
          oracle::ks_critical_1pct(q.size()));
}

TEST_CASE("CES law is invariant under unitary rotation", "[ces_sampling]") {
    const Index n = 6;
    const CesModel model = make_ces_model(HermitianPD(CMatrix::Identity(n, n)),
                                          ModularLaw::complex_t_with_power(n, 3.0, 1.0));
    const CMatrix a = oracle::random_matrix(n, n, 5);
    const CMatrix u = Eigen::HouseholderQR<CMatrix>(a).householderQ();
    RngStream rng(12, 0);
    std::vector<double> plain(50000), rotated(50000);
    for (std::size_t i = 0; i < plain.size(); ++i) {
        const CVector z = sample_ces(model.scatter_sqrt, model.law, rng);
        const CVector w = u * z;
        plain[i] = std::norm(z(0)) / z.squaredNorm();
        rotated[i] = std::norm(w(0)) / w.squaredNorm();
    }
    // |x_1|^2 / ||x||^2 is Beta(1, N-1) for any spherically invariant x
    auto beta_cdf = [n](double x) { return 1.0 - std::pow(1.0 - x, static_cast<double>(n - 1)); };
    CHECK(ks_against(plain, beta_cdf) < oracle::ks_critical_1pct(plain.size()));
    CHECK(ks_against(rotated, beta_cdf) < oracle::ks_critical_1pct(rotated.size()));
}

TEST_CASE("identical streams give bit-identical datasets", "[ces_sampling]") {
    const CesModel model =
        make_ces_model(toeplitz_scatter(kRho, 8), ModularLaw::complex_t_with_power(8, 2.0, 4.0));
    RngStream a(13, 4), b(13, 4), c(13, 5);
    const Dataset da = sample_ces_dataset(model, 40, a);
    const Dataset db = sample_ces_dataset(model, 40, b);
    const Dataset dc = sample_ces_dataset(model, 40, c);
    CHECK(da == db);
    CHECK_FALSE(da == dc);
}

TEST_CASE("contaminated sampling: Bernoulli labels", "[ces_sampling]") {
    const Index n = 4;
    const CesModel nominal =
        make_ces_model(toeplitz_scatter(0.5, n), ModularLaw::complex_t_with_power(n, 2.0, 4.0));
    const CesModel contaminant = make_ces_model(
        HermitianPD(4.0 * CMatrix::Identity(n, n)),
        ModularLaw::generalized_gaussian(n, 0.1, gg_scale_for_power(4.0, 0.1, n)));
    RngStream rng(14, 0);
    const auto none = sample_contaminated_labeled({0.0, nominal, contaminant}, 1000, rng);
    CHECK(std::none_of(none.contaminated.begin(), none.contaminated.end(), [](bool b) { return b; }));
    const auto all = sample_contaminated_labeled({1.0, nominal, contaminant}, 1000, rng);
    CHECK(std::all_of(all.contaminated.begin(), all.contaminated.end(), [](bool b) { return b; }));
    const int count = 100000;
    const auto mixed = sample_contaminated_labeled({0.1, nominal, contaminant}, count, rng);
    const auto k = std::count(mixed.contaminated.begin(), mixed.contaminated.end(), true);
    CHECK(std::abs(k - 0.1 * count) <= 3.0 * std::sqrt(count * 0.1 * 0.9));
    CHECK(mixed.data.size() == count);
    CHECK_THROWS_AS(sample_contaminated({1.5, nominal, contaminant}, 10, rng), DomainError);
}

TEST_CASE("outlier datasets", "[ces_sampling]") {
    const CesModel nominal =
        make_ces_model(toeplitz_scatter(kRho, 8), ModularLaw::complex_t_with_power(8, 2.0, 4.0));
    RngStream rng(15, 0);
    const auto pure = build_outlier_dataset_labeled(50, 0, nominal, rng);
    CHECK(pure.data.size() == 50);
    CHECK(std::none_of(pure.contaminated.begin(), pure.contaminated.end(), [](bool b) { return b; }));

    const auto mix = build_outlier_dataset_labeled(30, 30, nominal, rng);
    int unit = 0;
    for (Index l = 0; l < mix.data.size(); ++l) {
        const bool is_unit = std::abs(mix.data.column(l).norm() - 1.0) <= 1e-14;
        unit += is_unit;
        if (mix.contaminated[static_cast<std::size_t>(l)]) CHECK(is_unit);
    }
    CHECK(unit == 30);
    // order is randomized: outliers are not all at the end
    CHECK_FALSE(std::all_of(mix.contaminated.begin() + 30, mix.contaminated.end(), [](bool b) { return b; }));
    CHECK_THROWS_AS(build_outlier_dataset(0, 0, nominal, rng), DomainError);
}
