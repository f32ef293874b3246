#include "peap/overlay.hpp"

#include <algorithm>
#include <cmath>

#include "peap/error.hpp"

namespace peap {

PixelCanvas heatmap_overlay(const PixelCanvas& base, const Heatmap& map, int patch_size, double alpha) {
  if (patch_size < 1) throw Error(ErrorCode::InvalidSpec, "patch size must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidSpec, "alpha must lie in [0, 1]");
  if (map.rows * patch_size < base.height() || map.cols * patch_size < base.width()) {
    throw Error(ErrorCode::InvalidSpec, "heatmap grid does not cover the canvas");
  }
  PixelCanvas out = to_rgb(base);
  const double peak = map.values.empty() ? 0.0 : *std::max_element(map.values.begin(), map.values.end());
  if (!(peak > 0.0)) return out;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const double v = map.at(y / patch_size, x / patch_size) / peak;
      if (v <= 0.0) continue;
      const double ramp[3] = {std::clamp(3.0 * v, 0.0, 1.0), std::clamp(3.0 * v - 1.0, 0.0, 1.0),
                              std::clamp(3.0 * v - 2.0, 0.0, 1.0)};
      for (int c = 0; c < 3; ++c) {
        const double mixed = (1.0 - alpha) * out.at(x, y, c) + alpha * 255.0 * ramp[c];
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(mixed, 0.0, 255.0)));
      }
    }
  }
  return out;
}

}  // namespace peap
