#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "peap/canvas.hpp"

namespace peap {

class Font;

inline constexpr int kMinFontSize = 15;
inline constexpr int kMaxFontSize = 25;
inline constexpr int kMinPadding = 5;
inline constexpr int kMaxPadding = 30;

struct RenderSpec {
  int width_min = 512;
  int width_max = 1024;
  int base_height = 256;
  int font_size = 20;  // pixel em size; one point per pixel
  int padding = 15;
  std::uint8_t foreground = 0;
  std::uint8_t background = 255;
  double line_spacing = 1.25;
  int channels = 1;
  std::uint64_t seed = 0;

  // Copy of `base` with font size and padding drawn uniformly from their
  // allowed ranges using `seed`.
  static RenderSpec sampled(std::uint64_t seed);
  static RenderSpec sampled(std::uint64_t seed, const RenderSpec& base);

  void validate() const;
  nlohmann::json to_json() const;
  static RenderSpec from_json(const nlohmann::json& j);
  std::string sha256() const;
};

enum class CellAlign { Left, Center, Right };

struct TableData {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<CellAlign> align;  // empty = all left

  void validate() const;
  // Pipe-delimited text form used wherever the table travels as text.
  std::string to_text() const;
  nlohmann::json to_json() const;
  static TableData from_json(const nlohmann::json& j);
};

// Collapses horizontal whitespace, unifies line breaks, trims each line and
// squeezes runs of blank lines to one.
std::string normalize_whitespace(std::string_view text);

struct LayoutPlan {
  int width = 0;
  int height = 0;
  int line_height = 0;
  int ascent = 0;   // pixels above the baseline reserved on the first line
  int descent = 0;  // pixels below the baseline reserved on the last line
  int text_box_width = 0;
  std::size_t char_count = 0;
  std::vector<std::string> lines;
};

// Width tier by code-point count of the normalized text.
int width_for_length(std::size_t char_count, const RenderSpec& spec);

LayoutPlan plan_layout(std::string_view text, const RenderSpec& spec);

PixelCanvas render_text(std::string_view text, const RenderSpec& spec);
PixelCanvas render_table(const TableData& table, const RenderSpec& spec);

// Text and tables laid out top to bottom on one page.
using DocumentBlock = std::variant<std::string, TableData>;
PixelCanvas render_document(const std::vector<DocumentBlock>& blocks, const RenderSpec& spec);

// Pen advance and ink extent of a single line, in pixels.
struct LineMetrics {
  float advance = 0.0f;
  float ink_left = 0.0f;
  float ink_right = 0.0f;
  bool has_ink = false;
};
LineMetrics measure_line(std::u32string_view line, const Font& font, int font_size);

std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

}  // namespace peap
