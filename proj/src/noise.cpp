#include "peap/noise.hpp"

#include <algorithm>
#include <cmath>

#include "peap/error.hpp"
#include "peap/hash.hpp"
#include "peap/rng.hpp"

namespace peap {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::None: return "none";
    case NoiseKind::Radial: return "radial";
    case NoiseKind::Horizontal: return "horizontal";
    case NoiseKind::Vertical: return "vertical";
    case NoiseKind::MultiGaussian: return "multi-gaussian";
    case NoiseKind::HighFreqGaussian: return "high-freq-gaussian";
  }
  return "none";
}

NoiseKind parse_noise_kind(std::string_view name) {
  for (NoiseKind k : {NoiseKind::None, NoiseKind::Radial, NoiseKind::Horizontal, NoiseKind::Vertical,
                      NoiseKind::MultiGaussian, NoiseKind::HighFreqGaussian}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown noise kind '" + std::string(name) + "'");
}

void NoiseSpec::validate() const {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) throw Error(ErrorCode::InvalidSpec, "noise amplitude must be >= 0");
  if (components < 1 || components > 64) throw Error(ErrorCode::InvalidSpec, "noise components must be in [1, 64]");
}

nlohmann::json NoiseSpec::to_json() const {
  return {{"kind", to_string(kind)}, {"amplitude", amplitude}, {"center_x", center_x}, {"center_y", center_y},
          {"reverse", reverse},      {"components", components}, {"seed", seed}};
}

NoiseSpec NoiseSpec::from_json(const nlohmann::json& j) {
  NoiseSpec n;
  n.kind = parse_noise_kind(j.value("kind", std::string("none")));
  n.amplitude = j.value("amplitude", n.amplitude);
  n.center_x = j.value("center_x", n.center_x);
  n.center_y = j.value("center_y", n.center_y);
  n.reverse = j.value("reverse", n.reverse);
  n.components = j.value("components", n.components);
  n.seed = j.value("seed", n.seed);
  return n;
}

kernels::NoiseField resolve_field(const NoiseSpec& spec, int width, int height) {
  kernels::NoiseField f;
  f.amplitude = spec.amplitude;
  f.reverse = spec.reverse;
  f.seed = spec.seed;
  switch (spec.kind) {
    case NoiseKind::Radial: f.kind = kernels::FieldKind::Radial; break;
    case NoiseKind::Horizontal: f.kind = kernels::FieldKind::Horizontal; break;
    case NoiseKind::Vertical: f.kind = kernels::FieldKind::Vertical; break;
    case NoiseKind::MultiGaussian: f.kind = kernels::FieldKind::MultiGaussian; break;
    case NoiseKind::HighFreqGaussian:
    case NoiseKind::None: f.kind = kernels::FieldKind::HighFreqGaussian; break;
  }
  f.center_x = spec.center_x * (width - 1);
  f.center_y = spec.center_y * (height - 1);
  double r = 0.0;
  for (int cx : {0, width - 1}) {
    for (int cy : {0, height - 1}) r = std::max(r, std::hypot(cx - f.center_x, cy - f.center_y));
  }
  f.max_radius = r > 0.0 ? r : 1.0;
  if (spec.kind == NoiseKind::MultiGaussian) {
    Rng rng(derive_seed(spec.seed, "blobs"));
    const double side = std::min(width, height);
    for (int i = 0; i < spec.components; ++i) {
      kernels::Blob b;
      b.x = rng.uniform(0.0, width - 1.0);
      b.y = rng.uniform(0.0, height - 1.0);
      b.sigma = rng.uniform(0.1, 0.3) * side;
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      b.weight = sign * spec.amplitude * rng.uniform(1.0, 2.0);
      f.blobs.push_back(b);
    }
  }
  return f;
}

PixelCanvas apply_noise(const PixelCanvas& canvas, const NoiseSpec& noise, ExecPolicy policy) {
  noise.validate();
  PixelCanvas out = canvas;
  if (noise.kind == NoiseKind::None) return out;
  const kernels::NoiseField field = resolve_field(noise, canvas.width(), canvas.height());
  if (policy == ExecPolicy::Serial) {
    kernels::serial::add_noise(out.pixels(), out.width(), out.height(), out.channels(), field);
  } else {
    kernels::parallel::add_noise(out.pixels(), out.width(), out.height(), out.channels(), field);
  }
  out.provenance.spec_sha256 = sha256_hex(canvas.provenance.spec_sha256 + "+noise:" + noise.to_json().dump());
  return out;
}

}  // namespace peap
