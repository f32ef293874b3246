#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "peap/canvas.hpp"

namespace peap {

// Lossless, byte-reproducible PNG (fixed compression, no time chunk).
std::vector<std::uint8_t> encode_png(const PixelCanvas& canvas);

// Accepts gray, gray+alpha, RGB, RGBA and palette images; alpha is dropped,
// 16-bit samples are reduced to 8.
PixelCanvas decode_png(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace peap
