#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "peap/canvas.hpp"

namespace peap {

// Uniform page at one gray level.
PixelCanvas blank_page(int width, int height, std::uint8_t level = 255);

// rows x cols patches on a white page; exactly round(ratio * rows * cols)
// patches, chosen at random, are filled with uniform random gray pixels.
PixelCanvas textured_grid(int rows, int cols, int patch_size, double ratio, std::uint64_t seed);

// Space-separated words drawn from a fixed English vocabulary.
std::string random_paragraph(std::size_t words, std::uint64_t seed);

}  // namespace peap
