#include "shapekit/scores.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "shapekit/errors.hpp"
#include "shapekit/special_fn.hpp"

namespace shapekit {

ScoreFunction ScoreFunction::van_der_waerden(Index dim) {
    if (dim < 1) throw DomainError("score: dimension must be >= 1");
    return ScoreFunction(VanDerWaerden{}, dim);
}

ScoreFunction ScoreFunction::t_nu(Index dim, double nu) {
    if (dim < 1) throw DomainError("score: dimension must be >= 1");
    if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("t_nu score: nu must be > 0");
    return ScoreFunction(TNu{nu}, dim);
}

ScoreFunction ScoreFunction::power(Index dim, double a) {
    if (dim < 1) throw DomainError("score: dimension must be >= 1");
    if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("power score: a must be >= 0");
    return ScoreFunction(Power{a}, dim);
}

double ScoreFunction::operator()(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("score: argument must lie in (0, 1)");
    const double n = static_cast<double>(dim_);
    if (std::holds_alternative<VanDerWaerden>(kind_))
        return special::gamma_quantile(n, u).value;
    if (const auto* t = std::get_if<TNu>(&kind_)) {
        const double q = special::fisher_quantile(static_cast<int>(2 * dim_), t->nu, u).value;
        if (std::isinf(q)) return n + 0.5 * t->nu;
        return n * (2.0 * n + t->nu) * q / (t->nu + 2.0 * n * q);
    }
    const double a = std::get<Power>(kind_).a;
    return n * (a + 1.0) * std::pow(u, a);
}

double ScoreFunction::upper_bound() const {
    const double n = static_cast<double>(dim_);
    if (std::holds_alternative<VanDerWaerden>(kind_)) return std::numeric_limits<double>::infinity();
    if (const auto* t = std::get_if<TNu>(&kind_)) return n + 0.5 * t->nu;
    return n * (std::get<Power>(kind_).a + 1.0);
}

std::string ScoreFunction::label() const {
    if (std::holds_alternative<VanDerWaerden>(kind_)) return "vdw";
    std::ostringstream os;
    if (const auto* t = std::get_if<TNu>(&kind_)) {
        os << "t" << t->nu;
        return os.str();
    }
    const double a = std::get<Power>(kind_).a;
    if (a == 1.0) return "wilcoxon";
    if (a == 2.0) return "spearman";
    os << "power" << a;
    return os.str();
}

double evaluate(const ScoreFunction& k, double u) { return k(u); }

std::vector<Index> ranks(std::span<const double> values) {
    for (double v : values)
        if (!std::isfinite(v)) throw DataError("ranks: non-finite value");
    std::vector<Index> order(values.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return values[a] < values[b]; });
    std::vector<Index> r(values.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        r[static_cast<std::size_t>(order[pos])] = static_cast<Index>(pos) + 1;
    return r;
}

std::vector<double> rank_scores(const ScoreFunction& k, Index count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    const double denom = static_cast<double>(count) + 1.0;
    for (Index r = 1; r <= count; ++r)
        out[static_cast<std::size_t>(r - 1)] = k(static_cast<double>(r) / denom);
    return out;
}

}  // namespace shapekit
