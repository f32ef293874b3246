#include <cmath>

#include "peap/kernels.hpp"

namespace peap::kernels {

double noise_envelope(const NoiseField& f, int x, int y, int width, int height) {
  double e = 1.0;
  switch (f.kind) {
    case FieldKind::Radial: {
      const double dx = x - f.center_x, dy = y - f.center_y;
      e = std::sqrt(dx * dx + dy * dy) / f.max_radius;
      break;
    }
    case FieldKind::Horizontal:
      e = width > 1 ? static_cast<double>(x) / (width - 1) : 1.0;
      break;
    case FieldKind::Vertical:
      e = height > 1 ? static_cast<double>(y) / (height - 1) : 1.0;
      break;
    case FieldKind::MultiGaussian:
    case FieldKind::HighFreqGaussian:
      return 1.0;
  }
  return f.reverse ? 1.0 - e : e;
}

// Integer moments keep the result independent of summation order.
double single_patch_variance(std::span<const std::uint8_t> patch, int channels) {
  const std::size_t n = patch.size() / static_cast<std::size_t>(channels);
  std::uint64_t sum = 0, sum_sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t s = 0;
    for (int c = 0; c < channels; ++c) s += patch[i * channels + c];
    sum += s;
    sum_sq += s * s;
  }
  const double nn = static_cast<double>(n);
  const double num = static_cast<double>(n * sum_sq - sum * sum);
  return num / (nn * nn * static_cast<double>(channels * channels));
}

}  // namespace peap::kernels
