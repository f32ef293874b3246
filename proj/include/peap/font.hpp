#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace peap {

struct FontBox {
  int x_min = 0, y_min = 0, x_max = 0, y_max = 0;
};

// Antialiased coverage for one glyph, placed at integer canvas coordinates.
struct GlyphBitmap {
  int left = 0;
  int top = 0;
  int width = 0;
  int height = 0;
  std::vector<float> coverage;  // row-major, values in [0, 1]
};

// Minimal TrueType reader: cmap (formats 4 and 12), hmtx, loca/glyf
// including composite glyphs. No hinting, no kerning, no shaping.
class Font {
 public:
  explicit Font(std::vector<std::uint8_t> data);

  // The sans-serif face compiled into the library.
  static const Font& bundled();

  int units_per_em() const noexcept { return units_per_em_; }
  FontBox global_box() const noexcept { return global_box_; }

  // nullopt when the code point maps to the missing-glyph slot.
  std::optional<std::uint16_t> glyph_index(char32_t code_point) const;

  int advance(std::uint16_t glyph) const;
  // nullopt for glyphs without outlines (e.g. space).
  std::optional<FontBox> glyph_box(std::uint16_t glyph) const;

  // Glyph drawn with its origin at (pen_x, baseline_y) in canvas pixels,
  // scale = pixels per font unit. The bitmap covers exactly the pixels
  // touched by the glyph's bounding box.
  GlyphBitmap rasterize(std::uint16_t glyph, float scale, float pen_x, float baseline_y) const;

 private:
  struct Point {
    float x, y;
    bool on_curve;
  };
  using Contour = std::vector<Point>;

  std::span<const std::uint8_t> glyph_data(std::uint16_t glyph) const;
  void append_contours(std::uint16_t glyph, const float (&xform)[6], std::vector<Contour>& out, int depth) const;

  std::vector<std::uint8_t> data_;
  std::uint32_t cmap_subtable_ = 0;
  int cmap_format_ = 0;
  std::uint32_t glyf_ = 0;
  std::uint32_t loca_ = 0;
  std::uint32_t hmtx_ = 0;
  bool long_loca_ = false;
  int units_per_em_ = 0;
  int num_glyphs_ = 0;
  int num_hmetrics_ = 0;
  FontBox global_box_;
};

}  // namespace peap
