#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "peap/canvas.hpp"
#include "peap/kernels.hpp"

namespace peap {

enum class NoiseKind { None, Radial, Horizontal, Vertical, MultiGaussian, HighFreqGaussian };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

// Additive gray-level perturbation, clamped to [0, 255] after rounding.
//
//  Radial, Horizontal, Vertical: amplitude * envelope(x, y) * N(0, 1), where
//    the envelope rises linearly from 0 to 1 with distance from (center_x,
//    center_y), along x, or along y respectively (`reverse` flips it).
//  MultiGaussian: sum of `components` smooth blobs with random centers,
//    widths in [0.1, 0.3] * min(width, height) and signed peak heights of
//    magnitude amplitude * U(1, 2).
//  HighFreqGaussian: i.i.d. amplitude * N(0, 1) per pixel.
//
// Channels of an RGB canvas receive the same offset.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double amplitude = 0.0;
  double center_x = 0.5;  // fraction of width
  double center_y = 0.5;  // fraction of height
  bool reverse = false;
  int components = 3;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static NoiseSpec from_json(const nlohmann::json& j);
};

kernels::NoiseField resolve_field(const NoiseSpec& spec, int width, int height);

PixelCanvas apply_noise(const PixelCanvas& canvas, const NoiseSpec& noise, ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace peap
