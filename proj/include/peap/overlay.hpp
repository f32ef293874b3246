#pragma once

#include "peap/canvas.hpp"
#include "peap/toyvit.hpp"

namespace peap {

// RGB copy of `base` with each heatmap cell tinted by a black-red-yellow-white
// ramp over the patch it covers. Values are scaled by the map's maximum;
// zero cells are left untouched.
PixelCanvas heatmap_overlay(const PixelCanvas& base, const Heatmap& map, int patch_size, double alpha = 0.5);

}  // namespace peap
