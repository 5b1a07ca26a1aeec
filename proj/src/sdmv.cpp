#include "vsum/sdmv.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "SDMV I/O assumes a little-endian host");
static_assert(sizeof(float) == 4, "SDMV stores IEEE-754 binary32 values");

VSUM_NS_BEGIN

namespace {

template <typename T>
void write_pod(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::filesystem::path& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw FormatError("truncated SDMV file: " + path.string());
    }
    return value;
}

}  // namespace

void write_sdmv(const std::filesystem::path& path, const Tensor2& t) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    out.write(kSdmvMagic, 4);
    write_pod(out, kSdmvVersion);
    write_pod(out, static_cast<std::uint32_t>(t.rows));
    write_pod(out, static_cast<std::uint32_t>(t.cols));
    for (Real x : t.v) {
        const float f = static_cast<float>(x);
        out.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Tensor2 read_sdmv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open: " + path.string());
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kSdmvMagic, 4) != 0) {
        throw FormatError("bad magic in " + path.string());
    }
    const auto version = read_pod<std::uint16_t>(in, path);
    if (version != kSdmvVersion) {
        throw FormatError("unsupported SDMV version " + std::to_string(version) + " in " +
                          path.string());
    }
    const auto rows = read_pod<std::uint32_t>(in, path);
    const auto cols = read_pod<std::uint32_t>(in, path);
    if (rows > (1u << 24) || cols > (1u << 24)) {
        throw FormatError("implausible SDMV shape " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " in " + path.string());
    }
    Tensor2 t(static_cast<int>(rows), static_cast<int>(cols));
    for (Real& x : t.v) {
        float f;
        in.read(reinterpret_cast<char*>(&f), sizeof(float));
        if (!in) {
            throw FormatError("truncated SDMV file: " + path.string());
        }
        x = static_cast<Real>(f);
    }
    // trailing bytes would make round-trips ambiguous
    in.peek();
    if (!in.eof()) {
        throw FormatError("trailing data in SDMV file: " + path.string());
    }
    return t;
}

VSUM_NS_END
