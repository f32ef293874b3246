#pragma once

// Per-row bodies shared by the serial and OpenMP drivers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "peap/kernels.hpp"
#include "peap/rng.hpp"

namespace peap::kernels::detail {

inline void add_noise_row(std::uint8_t* row, int width, int height, int channels, int y, const NoiseField& f) {
  Rng rng(derive_seed(f.seed, static_cast<std::uint64_t>(y)));
  for (int x = 0; x < width; ++x) {
    double n = 0.0;
    if (f.kind == FieldKind::MultiGaussian) {
      for (const Blob& b : f.blobs) {
        const double dx = x - b.x, dy = y - b.y;
        n += b.weight * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
      }
    } else {
      n = f.amplitude * noise_envelope(f, x, y, width, height) * rng.normal();
    }
    for (int c = 0; c < channels; ++c) {
      std::uint8_t& px = row[x * channels + c];
      px = static_cast<std::uint8_t>(std::clamp(std::lround(px + n), 0L, 255L));
    }
  }
}

template <typename T>
void layer_norm_row(const T* x, std::size_t dim, const T* gamma, const T* beta, T* y) {
  T mean = 0;
  for (std::size_t i = 0; i < dim; ++i) mean += x[i];
  mean /= static_cast<T>(dim);
  T var = 0;
  for (std::size_t i = 0; i < dim; ++i) var += (x[i] - mean) * (x[i] - mean);
  var /= static_cast<T>(dim);
  const T inv = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
  for (std::size_t i = 0; i < dim; ++i) y[i] = (x[i] - mean) * inv * gamma[i] + beta[i];
}

template <typename T>
T gelu_value(T x) {
  constexpr T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  return static_cast<T>(0.5) * x * (T(1) + std::tanh(c * (x + static_cast<T>(0.044715) * x * x * x)));
}

// One query row of one head. Returns the number of keys visited.
template <typename T>
std::size_t attention_row(const T* q, const T* k, const T* v, std::size_t rows, std::size_t dim, std::size_t head,
                          std::size_t head_dim, std::size_t t, const std::uint8_t* key_keep, T* out, T* probs,
                          std::vector<T>& logits) {
  const std::size_t off = head * head_dim;
  const T scale = T(1) / std::sqrt(static_cast<T>(head_dim));
  const T* qt = q + t * dim + off;
  logits.assign(rows, -std::numeric_limits<T>::infinity());
  T max_logit = -std::numeric_limits<T>::infinity();
  std::size_t visited = 0;
  for (std::size_t j = 0; j < rows; ++j) {
    if (key_keep && !key_keep[j]) continue;
    const T* kj = k + j * dim + off;
    T dot = 0;
    for (std::size_t c = 0; c < head_dim; ++c) dot += qt[c] * kj[c];
    logits[j] = dot * scale;
    max_logit = std::max(max_logit, logits[j]);
    ++visited;
  }
  T* ot = out + t * dim + off;
  std::fill(ot, ot + head_dim, T(0));
  T* pt = probs ? probs + (head * rows + t) * rows : nullptr;
  if (pt) std::fill(pt, pt + rows, T(0));
  if (visited == 0) return 0;
  T denom = 0;
  for (std::size_t j = 0; j < rows; ++j) {
    if (key_keep && !key_keep[j]) continue;
    logits[j] = std::exp(logits[j] - max_logit);
    denom += logits[j];
  }
  for (std::size_t j = 0; j < rows; ++j) {
    if (key_keep && !key_keep[j]) continue;
    const T p = logits[j] / denom;
    if (pt) pt[j] = p;
    const T* vj = v + j * dim + off;
    for (std::size_t c = 0; c < head_dim; ++c) ot[c] += p * vj[c];
  }
  return visited;
}

}  // namespace peap::kernels::detail
