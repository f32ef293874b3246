#pragma once

// Data-parallel inner loops. Every kernel exists twice: `serial` is the
// plain reference implementation kept for testing, `parallel` is the
// OpenMP version used by default. Kernels whose per-element arithmetic is
// order-independent (noise, patch variance) agree bit for bit; the tensor
// kernels agree to rounding.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace peap {

enum class ExecPolicy { Serial, Parallel };

namespace kernels {

enum class FieldKind { Radial, Horizontal, Vertical, MultiGaussian, HighFreqGaussian };

struct Blob {
  double x = 0, y = 0, sigma = 1, weight = 0;
};

// Resolved additive gray-level field; see noise.hpp for the user-facing spec.
struct NoiseField {
  FieldKind kind = FieldKind::HighFreqGaussian;
  double amplitude = 0;
  double center_x = 0, center_y = 0;  // pixels, radial only
  double max_radius = 1;
  bool reverse = false;
  std::uint64_t seed = 0;
  std::vector<Blob> blobs;
};

// Sum of attention-side multiply-add FLOPs actually executed (2 per MAC).
struct FlopCounter {
  std::uint64_t attention = 0;
  std::uint64_t projection = 0;
  std::uint64_t mlp = 0;
  std::uint64_t embed = 0;
  std::uint64_t total() const { return attention + projection + mlp + embed; }
};

namespace serial {

void add_noise(std::span<std::uint8_t> pixels, int width, int height, int channels, const NoiseField& field);

// Population variance of the gray level of `count` contiguous patches of
// `patch_pixels` pixels with `channels` interleaved samples each.
void patch_variances(std::span<const std::uint8_t> patches, std::size_t patch_pixels, int channels,
                     std::span<double> out);

// y[rows x out] = x[rows x in] * w[in x out] + b
template <typename T>
void linear(const T* x, std::size_t rows, std::size_t in, const T* w, const T* b, std::size_t out, T* y);

template <typename T>
void layer_norm(const T* x, std::size_t rows, std::size_t dim, const T* gamma, const T* beta, T* y);

template <typename T>
void gelu(T* x, std::size_t n);

// Multi-head scaled dot-product attention over row-major q/k/v [rows x dim].
// key_keep (nullable) excludes keys from every query's softmax. probs
// (nullable) receives [heads x rows x rows] row-stochastic weights.
template <typename T>
void attention(const T* q, const T* k, const T* v, std::size_t rows, std::size_t heads, std::size_t head_dim,
               const std::uint8_t* key_keep, T* out, T* probs, FlopCounter* flops);

}  // namespace serial

namespace parallel {

void add_noise(std::span<std::uint8_t> pixels, int width, int height, int channels, const NoiseField& field);
void patch_variances(std::span<const std::uint8_t> patches, std::size_t patch_pixels, int channels,
                     std::span<double> out);

template <typename T>
void linear(const T* x, std::size_t rows, std::size_t in, const T* w, const T* b, std::size_t out, T* y);
template <typename T>
void layer_norm(const T* x, std::size_t rows, std::size_t dim, const T* gamma, const T* beta, T* y);
template <typename T>
void gelu(T* x, std::size_t n);
template <typename T>
void attention(const T* q, const T* k, const T* v, std::size_t rows, std::size_t heads, std::size_t head_dim,
               const std::uint8_t* key_keep, T* out, T* probs, FlopCounter* flops);

}  // namespace parallel

// Shared per-element helpers (both variants must agree on these).
double noise_envelope(const NoiseField& field, int x, int y, int width, int height);
double single_patch_variance(std::span<const std::uint8_t> patch, int channels);

inline constexpr double kLayerNormEps = 1e-5;

}  // namespace kernels
}  // namespace peap
