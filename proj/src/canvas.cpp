#include "peap/canvas.hpp"

#include "peap/error.hpp"
#include "peap/hash.hpp"

namespace peap {

std::string Provenance::key() const {
  return sha256_hex(input_sha256 + ":" + spec_sha256 + ":" + std::to_string(seed));
}

namespace {
void check_shape(int width, int height, int channels) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidSpec, "canvas dimensions must be positive");
  if (channels != 1 && channels != 3) throw Error(ErrorCode::InvalidSpec, "canvas channels must be 1 or 3");
}
}  // namespace

PixelCanvas::PixelCanvas(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels), background_(fill) {
  check_shape(width, height, channels);
  pixels_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

PixelCanvas::PixelCanvas(int width, int height, int channels, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  check_shape(width, height, channels);
  if (pixels_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw Error(ErrorCode::InvalidSpec, "pixel buffer does not match width*height*channels");
  }
}

PixelCanvas to_gray(const PixelCanvas& canvas) {
  if (canvas.channels() == 1) return canvas;
  PixelCanvas out(canvas.width(), canvas.height(), 1, canvas.background());
  auto src = canvas.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const unsigned sum = src[3 * i] + src[3 * i + 1] + src[3 * i + 2];
    dst[i] = static_cast<std::uint8_t>((sum + 1) / 3);
  }
  out.provenance = canvas.provenance;
  return out;
}

PixelCanvas to_rgb(const PixelCanvas& canvas) {
  if (canvas.channels() == 3) return canvas;
  PixelCanvas out(canvas.width(), canvas.height(), 3, canvas.background());
  auto src = canvas.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  out.provenance = canvas.provenance;
  return out;
}

PixelCanvas crop(const PixelCanvas& canvas, int width, int height) {
  if (width > canvas.width() || height > canvas.height()) {
    throw Error(ErrorCode::InvalidSpec, "crop region exceeds canvas");
  }
  PixelCanvas out(width, height, canvas.channels(), canvas.background());
  const std::size_t row_bytes = static_cast<std::size_t>(width) * canvas.channels();
  for (int y = 0; y < height; ++y) {
    auto src = canvas.pixels().subspan(static_cast<std::size_t>(y) * canvas.width() * canvas.channels(), row_bytes);
    std::copy(src.begin(), src.end(), out.pixels().begin() + static_cast<std::ptrdiff_t>(y * row_bytes));
  }
  out.provenance = canvas.provenance;
  return out;
}

}  // namespace peap
