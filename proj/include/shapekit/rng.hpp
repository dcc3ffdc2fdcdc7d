#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace shapekit {

/// Reproducible random stream identified by (seed, stream id).
///
/// The engine is std::mt19937_64 (bit-exact by the standard); every
/// transform to uniform, normal and gamma variates is implemented here so
/// draws do not depend on the standard library's distribution classes.
/// A stream is not thread-safe; give each concurrent task its own.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1).
    double uniform_open();
    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);
    double normal();
    /// CN(0, 1): real and imaginary parts independent N(0, 1/2).
    std::complex<double> complex_normal();
    /// Gamma(shape, 1). Marsaglia-Tsang squeeze for shape >= 1, boosted
    /// with U^{1/shape} below 1.
    double gamma(double shape);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

/// Mixes several words into one seed (splitmix64 finalizer chain).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace shapekit
