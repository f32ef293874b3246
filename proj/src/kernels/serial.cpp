#include "rows.hpp"

namespace peap::kernels::serial {

void add_noise(std::span<std::uint8_t> pixels, int width, int height, int channels, const NoiseField& field) {
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    detail::add_noise_row(pixels.data() + y * stride, width, height, channels, y, field);
  }
}

void patch_variances(std::span<const std::uint8_t> patches, std::size_t patch_pixels, int channels,
                     std::span<double> out) {
  const std::size_t len = patch_pixels * static_cast<std::size_t>(channels);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = single_patch_variance(patches.subspan(i * len, len), channels);
}

// Reference order: one dot product per output element.
template <typename T>
void linear(const T* x, std::size_t rows, std::size_t in, const T* w, const T* b, std::size_t out, T* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < out; ++j) {
      T acc = b ? b[j] : T(0);
      for (std::size_t k = 0; k < in; ++k) acc += x[r * in + k] * w[k * out + j];
      y[r * out + j] = acc;
    }
  }
}

template <typename T>
void layer_norm(const T* x, std::size_t rows, std::size_t dim, const T* gamma, const T* beta, T* y) {
  for (std::size_t r = 0; r < rows; ++r) detail::layer_norm_row(x + r * dim, dim, gamma, beta, y + r * dim);
}

template <typename T>
void gelu(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = detail::gelu_value(x[i]);
}

template <typename T>
void attention(const T* q, const T* k, const T* v, std::size_t rows, std::size_t heads, std::size_t head_dim,
               const std::uint8_t* key_keep, T* out, T* probs, FlopCounter* flops) {
  std::vector<T> logits;
  std::uint64_t visited = 0;
  const std::size_t dim = heads * head_dim;
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t t = 0; t < rows; ++t) {
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

}  // namespace peap::kernels::serial
