#pragma once

#include <filesystem>

#include "shapekit/matrix_core.hpp"

namespace shapekit {

/// L complex N-vectors stored as the columns of an N x L matrix.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(CMatrix columns) : z_(std::move(columns)) {}
    Dataset(Index dim, Index count) : z_(CMatrix::Zero(dim, count)) {}

    Index dim() const noexcept { return z_.rows(); }
    Index size() const noexcept { return z_.cols(); }

    const CMatrix& matrix() const noexcept { return z_; }
    CMatrix& matrix() noexcept { return z_; }
    auto column(Index l) const { return z_.col(l); }
    auto column(Index l) { return z_.col(l); }

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.z_.rows() == b.z_.rows() && a.z_.cols() == b.z_.cols() && a.z_ == b.z_;
    }

private:
    CMatrix z_;
};

// Binary dataset dump. Little-endian throughout:
//   bytes 0..3   magic "CESD"
//   bytes 4..7   uint32 format version (1)
//   bytes 8..11  uint32 N
//   bytes 12..15 uint32 L
// followed by L records of N complex values, each stored as (re, im) IEEE-754
// binary64.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

void write_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace shapekit
