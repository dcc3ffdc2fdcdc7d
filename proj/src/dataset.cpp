#include "shapekit/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <vector>

#include "shapekit/errors.hpp"

namespace shapekit {
namespace {

constexpr std::array<char, 4> kMagic{'C', 'E', 'S', 'D'};

template <class T>
void put_le(std::vector<unsigned char>& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes.begin(), bytes.end());
    out.insert(out.end(), bytes.begin(), bytes.end());
}

template <class T>
T get_le(const unsigned char* p) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

}  // namespace

void write_dataset(const Dataset& data, const std::filesystem::path& path) {
    if (data.dim() > std::numeric_limits<std::uint32_t>::max() ||
        data.size() > std::numeric_limits<std::uint32_t>::max())
        throw ShapeError("write_dataset: dimensions exceed the 32-bit header fields");
    std::vector<unsigned char> buf;
    buf.reserve(16 + static_cast<std::size_t>(data.matrix().size()) * 16);
    buf.insert(buf.end(), kMagic.begin(), kMagic.end());
    put_le<std::uint32_t>(buf, kDatasetFormatVersion);
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(data.dim()));
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(data.size()));
    for (Index l = 0; l < data.size(); ++l)
        for (Index i = 0; i < data.dim(); ++i) {
            put_le<double>(buf, data.matrix()(i, l).real());
            put_le<double>(buf, data.matrix()(i, l).imag());
        }

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::ios_base::failure("cannot open " + path.string() + " for writing");
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw std::ios_base::failure("write failed for " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::ios_base::failure("cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
    if (buf.size() < 16 || std::memcmp(buf.data(), kMagic.data(), 4) != 0)
        throw DataError(path.string() + ": not a CESD dataset");
    const auto version = get_le<std::uint32_t>(buf.data() + 4);
    if (version != kDatasetFormatVersion)
        throw DataError(path.string() + ": unsupported CESD version " + std::to_string(version));
    const auto n = get_le<std::uint32_t>(buf.data() + 8);
    const auto l = get_le<std::uint32_t>(buf.data() + 12);
    const std::size_t expected = 16 + std::size_t(n) * std::size_t(l) * 16;
    if (buf.size() != expected)
        throw DataError(path.string() + ": payload size does not match header");

    Dataset data(n, l);
    const unsigned char* p = buf.data() + 16;
    for (std::uint32_t c = 0; c < l; ++c)
        for (std::uint32_t i = 0; i < n; ++i, p += 16)
            data.matrix()(i, c) = Complex(get_le<double>(p), get_le<double>(p + 8));
    return data;
}

}  // namespace shapekit
