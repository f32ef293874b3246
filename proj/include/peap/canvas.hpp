#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace peap {

// Where a canvas came from: hash of the rendered content, hash of the
// canonical render (and noise) settings, and the sampling seed.
struct Provenance {
  std::string input_sha256;
  std::string spec_sha256;
  std::uint64_t seed = 0;

  // Stable cache key over all three fields.
  std::string key() const;
  bool operator==(const Provenance&) const = default;
};

// Row-major 8-bit raster with 1 (gray) or 3 (RGB) interleaved channels.
class PixelCanvas {
 public:
  PixelCanvas() = default;
  PixelCanvas(int width, int height, int channels, std::uint8_t fill);
  PixelCanvas(int width, int height, int channels, std::vector<std::uint8_t> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  // Gray level used when the canvas is padded or extended.
  std::uint8_t background() const noexcept { return background_; }
  void set_background(std::uint8_t level) noexcept { background_ = level; }

  Provenance provenance;

  bool same_pixels(const PixelCanvas& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_ &&
           pixels_ == other.pixels_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::uint8_t background_ = 255;
  std::vector<std::uint8_t> pixels_;
};

// Gray copy using the unweighted channel mean (rounded).
PixelCanvas to_gray(const PixelCanvas& canvas);
PixelCanvas to_rgb(const PixelCanvas& canvas);

// Top-left crop; the region must lie inside the canvas.
PixelCanvas crop(const PixelCanvas& canvas, int width, int height);

}  // namespace peap
