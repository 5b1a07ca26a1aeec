#pragma once

#include <filesystem>

#include "vsum/tensor.hpp"

VSUM_NS_BEGIN

// SDMV tensor file: magic "SDMV", version u16, rows u32, cols u32, then
// rows*cols little-endian 32-bit floats in row-major order. Values are
// stored as float32 regardless of the engine's compile-time width.
inline constexpr char kSdmvMagic[4] = {'S', 'D', 'M', 'V'};
inline constexpr std::uint16_t kSdmvVersion = 1;

void write_sdmv(const std::filesystem::path& path, const Tensor2& t);
Tensor2 read_sdmv(const std::filesystem::path& path);

VSUM_NS_END
