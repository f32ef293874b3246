#include <omp.h>

#include "rows.hpp"

namespace peap::kernels::parallel {

void add_noise(std::span<std::uint8_t> pixels, int width, int height, int channels, const NoiseField& field) {
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < height; ++y) {
    detail::add_noise_row(pixels.data() + y * stride, width, height, channels, y, field);
  }
}

void patch_variances(std::span<const std::uint8_t> patches, std::size_t patch_pixels, int channels,
                     std::span<double> out) {
  const std::size_t len = patch_pixels * static_cast<std::size_t>(channels);
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = single_patch_variance(patches.subspan(static_cast<std::size_t>(i) * len, len), channels);
  }
}

// Row-parallel, k-outer so the inner loop streams a contiguous weight row.
template <typename T>
void linear(const T* x, std::size_t rows, std::size_t in, const T* w, const T* b, std::size_t out, T* y) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    T* yr = y + r * out;
    for (std::size_t j = 0; j < out; ++j) yr[j] = b ? b[j] : T(0);
    const T* xr = x + r * in;
    for (std::size_t k = 0; k < in; ++k) {
      const T xv = xr[k];
      const T* wk = w + k * out;
#pragma omp simd
      for (std::size_t j = 0; j < out; ++j) yr[j] += xv * wk[j];
    }
  }
}

template <typename T>
void layer_norm(const T* x, std::size_t rows, std::size_t dim, const T* gamma, const T* beta, T* y) {
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) detail::layer_norm_row(x + r * dim, dim, gamma, beta, y + r * dim);
}

template <typename T>
void gelu(T* x, std::size_t n) {
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) x[i] = detail::gelu_value(x[i]);
}

template <typename T>
void attention(const T* q, const T* k, const T* v, std::size_t rows, std::size_t heads, std::size_t head_dim,
               const std::uint8_t* key_keep, T* out, T* probs, FlopCounter* flops) {
  const std::size_t dim = heads * head_dim;
  const auto work = static_cast<std::ptrdiff_t>(heads * rows);
  std::uint64_t visited = 0;
#pragma omp parallel reduction(+ : visited)
  {
    std::vector<T> logits;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < work; ++i) {
      const auto h = static_cast<std::size_t>(i) / rows;
      const auto t = static_cast<std::size_t>(i) % rows;
      visited += detail::attention_row(q, k, v, rows, dim, h, head_dim, t, key_keep, out, probs, logits);
    }
  }
  if (flops) flops->attention += 4 * head_dim * visited;
}

#define PEAP_INSTANTIATE(T)                                                                                      \
  template void linear<T>(const T*, std::size_t, std::size_t, const T*, const T*, std::size_t, T*);             \
  template void layer_norm<T>(const T*, std::size_t, std::size_t, const T*, const T*, T*);                      \
  template void gelu<T>(T*, std::size_t);                                                                       \
  template void attention<T>(const T*, const T*, const T*, std::size_t, std::size_t, std::size_t,               \
                             const std::uint8_t*, T*, T*, FlopCounter*);
PEAP_INSTANTIATE(float)
PEAP_INSTANTIATE(double)
#undef PEAP_INSTANTIATE

}  // namespace peap::kernels::parallel
