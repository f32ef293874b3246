#include "peap/render.hpp"

#include <algorithm>
#include <cmath>

#include "peap/error.hpp"
#include "peap/font.hpp"
#include "peap/hash.hpp"
#include "peap/rng.hpp"

namespace peap {

// ---------------------------------------------------------------- utf-8

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int len;
    char32_t cp;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      throw Error(ErrorCode::CodecError, "invalid UTF-8 lead byte");
    }
    if (i + static_cast<std::size_t>(len) > text.size()) throw Error(ErrorCode::CodecError, "truncated UTF-8");
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) throw Error(ErrorCode::CodecError, "invalid UTF-8 continuation");
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }
  return out;
}

// ---------------------------------------------------------------- specs

RenderSpec RenderSpec::sampled(std::uint64_t seed) { return sampled(seed, RenderSpec{}); }

RenderSpec RenderSpec::sampled(std::uint64_t seed, const RenderSpec& base) {
  RenderSpec spec = base;
  Rng rng(derive_seed(seed, "layout"));
  spec.font_size = static_cast<int>(rng.uniform_int(kMinFontSize, kMaxFontSize));
  spec.padding = static_cast<int>(rng.uniform_int(kMinPadding, kMaxPadding));
  spec.seed = seed;
  return spec;
}

void RenderSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); };
  if (width_min <= 0 || width_max < width_min) fail("need 0 < width_min <= width_max");
  if (base_height <= 0) fail("base_height must be positive");
  if (font_size < kMinFontSize || font_size > kMaxFontSize) fail("font_size outside [15, 25]");
  if (padding < kMinPadding || padding > kMaxPadding) fail("padding outside [5, 30]");
  if (!(line_spacing >= 1.0 && line_spacing <= 3.0)) fail("line_spacing outside [1, 3]");
  if (channels != 1 && channels != 3) fail("channels must be 1 or 3");
  if (width_min - 2 * padding < 2 * font_size) fail("width_min leaves no room for text");
}

nlohmann::json RenderSpec::to_json() const {
  return {{"width_min", width_min},       {"width_max", width_max},   {"base_height", base_height},
          {"font_size", font_size},       {"padding", padding},       {"foreground", foreground},
          {"background", background},     {"line_spacing", line_spacing}, {"channels", channels},
          {"seed", seed}};
}

RenderSpec RenderSpec::from_json(const nlohmann::json& j) {
  RenderSpec s;
  s.width_min = j.value("width_min", s.width_min);
  s.width_max = j.value("width_max", s.width_max);
  s.base_height = j.value("base_height", s.base_height);
  s.font_size = j.value("font_size", s.font_size);
  s.padding = j.value("padding", s.padding);
  s.foreground = j.value("foreground", s.foreground);
  s.background = j.value("background", s.background);
  s.line_spacing = j.value("line_spacing", s.line_spacing);
  s.channels = j.value("channels", s.channels);
  s.seed = j.value("seed", s.seed);
  return s;
}

std::string RenderSpec::sha256() const { return peap::sha256_hex(to_json().dump()); }

void TableData::validate() const {
  if (columns.empty()) throw Error(ErrorCode::EmptyInput, "table has no columns");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != columns.size()) {
      throw Error(ErrorCode::InvalidSpec, "table row " + std::to_string(r) + " has " +
                                              std::to_string(rows[r].size()) + " cells, expected " +
                                              std::to_string(columns.size()));
    }
  }
  if (!align.empty() && align.size() != columns.size()) {
    throw Error(ErrorCode::InvalidSpec, "alignment list does not match column count");
  }
}

std::string TableData::to_text() const {
  auto row_text = [](const std::vector<std::string>& cells) {
    std::string line = "|";
    for (const auto& c : cells) line += " " + c + " |";
    return line;
  };
  std::string out = row_text(columns) + "\n|";
  for (std::size_t i = 0; i < columns.size(); ++i) out += "---|";
  for (const auto& r : rows) out += "\n" + row_text(r);
  return out;
}

nlohmann::json TableData::to_json() const {
  nlohmann::json j{{"columns", columns}, {"rows", rows}};
  if (!align.empty()) {
    auto& a = j["align"] = nlohmann::json::array();
    for (CellAlign c : align) a.push_back(c == CellAlign::Left ? "left" : c == CellAlign::Center ? "center" : "right");
  }
  return j;
}

TableData TableData::from_json(const nlohmann::json& j) {
  TableData t;
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& row : j.at("rows")) {
    std::vector<std::string> cells;
    for (const auto& cell : row) cells.push_back(cell.is_string() ? cell.get<std::string>() : cell.dump());
    t.rows.push_back(std::move(cells));
  }
  if (j.contains("align")) {
    for (const auto& a : j.at("align")) {
      const auto s = a.get<std::string>();
      if (s == "left") t.align.push_back(CellAlign::Left);
      else if (s == "center") t.align.push_back(CellAlign::Center);
      else if (s == "right") t.align.push_back(CellAlign::Right);
      else throw Error(ErrorCode::InvalidSpec, "unknown alignment " + s);
    }
  }
  return t;
}

// ---------------------------------------------------------------- layout

std::string normalize_whitespace(std::string_view text) {
  std::vector<std::string> lines(1);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      lines.emplace_back();
    } else if (c == '\n') {
      lines.emplace_back();
    } else if (c == ' ' || c == '\t' || c == '\v' || c == '\f') {
      if (!lines.back().empty() && lines.back().back() != ' ') lines.back() += ' ';
    } else if (static_cast<unsigned char>(c) < 0x20 || c == 0x7F) {
      // other control characters carry no glyph
    } else {
      lines.back() += c;
    }
  }
  std::string out;
  bool pending_blank = false;
  for (auto& line : lines) {
    while (!line.empty() && line.back() == ' ') line.pop_back();
    if (line.empty()) {
      pending_blank = !out.empty();
      continue;
    }
    if (!out.empty()) out += pending_blank ? "\n\n" : "\n";
    pending_blank = false;
    out += line;
  }
  return out;
}

int width_for_length(std::size_t char_count, const RenderSpec& spec) {
  const int tier = char_count <= 600 ? 512 : char_count <= 1500 ? 768 : 1024;
  return std::clamp(tier, spec.width_min, spec.width_max);
}

LineMetrics measure_line(std::u32string_view line, const Font& font, int font_size) {
  const float scale = static_cast<float>(font_size) / static_cast<float>(font.units_per_em());
  LineMetrics m;
  float pen = 0.0f;
  for (char32_t cp : line) {
    const auto glyph = font.glyph_index(cp);
    if (!glyph) throw Error(ErrorCode::GlyphUnavailable, "no glyph for U+" + std::to_string(static_cast<unsigned>(cp)));
    if (const auto box = font.glyph_box(*glyph)) {
      const float l = pen + static_cast<float>(box->x_min) * scale;
      const float r = pen + static_cast<float>(box->x_max) * scale;
      if (!m.has_ink) {
        m.ink_left = l;
        m.ink_right = r;
        m.has_ink = true;
      } else {
        m.ink_left = std::min(m.ink_left, l);
        m.ink_right = std::max(m.ink_right, r);
      }
    }
    pen += static_cast<float>(font.advance(*glyph)) * scale;
  }
  m.advance = pen;
  return m;
}

namespace {

// Shift that keeps the leftmost ink pixel at or right of the pen origin.
int left_shift(const LineMetrics& m) {
  return m.has_ink ? std::max(0, -static_cast<int>(std::floor(m.ink_left))) : 0;
}

int needed_width(const LineMetrics& m) {
  return m.has_ink ? left_shift(m) + static_cast<int>(std::ceil(m.ink_right)) : 0;
}

struct VerticalMetrics {
  int line_height;
  int ascent;
  int descent;
};

VerticalMetrics vertical_metrics(const Font& font, const RenderSpec& spec) {
  const double scale = static_cast<double>(spec.font_size) / font.units_per_em();
  return {static_cast<int>(std::ceil(spec.font_size * spec.line_spacing)),
          static_cast<int>(std::ceil(font.global_box().y_max * scale)),
          static_cast<int>(std::ceil(-font.global_box().y_min * scale))};
}

std::vector<std::u32string> split(std::u32string_view s, char32_t sep) {
  std::vector<std::u32string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    parts.emplace_back(s.substr(start, pos == std::u32string_view::npos ? std::u32string_view::npos : pos - start));
    if (pos == std::u32string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

void check_glyphs(std::u32string_view text, const Font& font) {
  for (char32_t cp : text) {
    if (cp == U'\n') continue;
    if (!font.glyph_index(cp)) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
      throw Error(ErrorCode::GlyphUnavailable, std::string("bundled font has no glyph for ") + buf);
    }
  }
}

// Greedy word wrap; words wider than the box are broken between characters.
std::vector<std::u32string> wrap_text(std::u32string_view text, int box_width, const Font& font, int font_size) {
  auto fits = [&](std::u32string_view s) { return needed_width(measure_line(s, font, font_size)) <= box_width; };
  std::vector<std::u32string> lines;
  for (const auto& paragraph : split(text, U'\n')) {
    std::u32string current;
    for (const auto& word : split(paragraph, U' ')) {
      if (word.empty()) continue;
      std::u32string candidate = current.empty() ? word : current + U' ' + word;
      if (fits(candidate)) {
        current = std::move(candidate);
        continue;
      }
      if (!current.empty()) {
        lines.push_back(std::move(current));
        current.clear();
      }
      if (fits(word)) {
        current = word;
        continue;
      }
      for (char32_t ch : word) {
        std::u32string next = current + ch;
        if (current.empty() || fits(next)) {
          current = std::move(next);
        } else {
          lines.push_back(std::move(current));
          current = std::u32string(1, ch);
        }
      }
    }
    lines.push_back(std::move(current));
  }
  return lines;
}

struct TextBlock {
  std::vector<std::u32string> lines;
  int height = 0;
};

struct TableBlock {
  const TableData* table = nullptr;
  std::vector<int> col_widths;  // includes the column's left rule
  std::vector<int> row_heights;  // includes the row's top rule; row 0 is the header
  std::vector<std::vector<std::vector<std::u32string>>> cells;  // [row][col] -> lines
  int pad_x = 0;
  int pad_y = 0;
  int width = 0;
  int height = 0;
};

using BlockLayout = std::variant<TextBlock, TableBlock>;

struct DocumentLayout {
  int width = 0;
  int height = 0;
  VerticalMetrics vm{};
  int gap = 0;
  std::vector<BlockLayout> blocks;
};

int text_height(std::size_t lines, const VerticalMetrics& vm) {
  return vm.ascent + static_cast<int>(lines - 1) * vm.line_height + vm.descent;
}

int natural_width(std::u32string_view text, const Font& font, int font_size) {
  int w = 0;
  for (const auto& p : split(text, U'\n')) w = std::max(w, needed_width(measure_line(p, font, font_size)));
  return w;
}

TableBlock layout_table(const TableData& table, int available, const Font& font, const RenderSpec& spec,
                        const VerticalMetrics& vm) {
  TableBlock tb;
  tb.table = &table;
  tb.pad_x = std::max(4, spec.font_size / 3);
  tb.pad_y = std::max(3, spec.font_size / 5);
  const std::size_t ncols = table.columns.size();
  const std::size_t nrows = table.rows.size() + 1;

  std::vector<std::vector<std::u32string>> text(nrows, std::vector<std::u32string>(ncols));
  for (std::size_t c = 0; c < ncols; ++c) text[0][c] = decode_utf8(normalize_whitespace(table.columns[c]));
  for (std::size_t r = 1; r < nrows; ++r) {
    for (std::size_t c = 0; c < ncols; ++c) text[r][c] = decode_utf8(normalize_whitespace(table.rows[r - 1][c]));
  }
  for (const auto& row : text) {
    for (const auto& cell : row) check_glyphs(cell, font);
  }

  const int chrome = 1 + 2 * tb.pad_x;
  const int min_width = chrome + static_cast<int>(std::ceil(spec.font_size * 1.2));
  std::vector<int> natural(ncols, min_width);
  for (std::size_t c = 0; c < ncols; ++c) {
    for (std::size_t r = 0; r < nrows; ++r) {
      natural[c] = std::max(natural[c], chrome + natural_width(text[r][c], font, spec.font_size));
    }
  }
  const int budget = available - 1;  // closing right rule
  long total = 0;
  for (int w : natural) total += w;
  tb.col_widths = natural;
  if (total > budget) {
    if (static_cast<long>(min_width) * static_cast<long>(ncols) > budget) {
      throw Error(ErrorCode::InvalidSpec, "table has too many columns for width_max");
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      tb.col_widths[c] = std::max(min_width, static_cast<int>(static_cast<long>(natural[c]) * budget / total));
    }
    long sum = 0;
    for (int w : tb.col_widths) sum += w;
    while (sum > budget) {
      auto widest = std::max_element(tb.col_widths.begin(), tb.col_widths.end());
      --*widest;
      --sum;
    }
  }

  tb.cells.assign(nrows, std::vector<std::vector<std::u32string>>(ncols));
  tb.row_heights.assign(nrows, 0);
  for (std::size_t r = 0; r < nrows; ++r) {
    std::size_t max_lines = 1;
    for (std::size_t c = 0; c < ncols; ++c) {
      tb.cells[r][c] = wrap_text(text[r][c], tb.col_widths[c] - chrome, font, spec.font_size);
      max_lines = std::max(max_lines, tb.cells[r][c].size());
    }
    tb.row_heights[r] = 1 + 2 * tb.pad_y + text_height(max_lines, vm);
  }
  tb.width = 1;
  for (int w : tb.col_widths) tb.width += w;
  tb.height = 1;
  for (int h : tb.row_heights) tb.height += h;
  return tb;
}

DocumentLayout layout_document(const std::vector<DocumentBlock>& blocks, const RenderSpec& spec,
                               std::size_t* char_count_out = nullptr) {
  spec.validate();
  const Font& font = Font::bundled();
  DocumentLayout doc;
  doc.vm = vertical_metrics(font, spec);
  doc.gap = doc.vm.line_height;

  std::size_t char_count = 0;
  std::vector<std::u32string> texts(blocks.size());
  bool any_content = false;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (const auto* s = std::get_if<std::string>(&blocks[i])) {
      texts[i] = decode_utf8(normalize_whitespace(*s));
      char_count += texts[i].size();
      any_content = any_content || !texts[i].empty();
    } else {
      const auto& t = std::get<TableData>(blocks[i]);
      t.validate();
      any_content = true;
      for (const auto& c : t.columns) char_count += decode_utf8(c).size();
      for (const auto& row : t.rows) {
        for (const auto& c : row) char_count += decode_utf8(c).size();
      }
    }
  }
  if (!any_content) throw Error(ErrorCode::EmptyInput, "nothing to render after whitespace normalization");
  if (char_count_out) *char_count_out = char_count;

  doc.width = width_for_length(char_count, spec);
  const int available = spec.width_max - 2 * spec.padding;
  std::vector<std::size_t> source;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (std::holds_alternative<std::string>(blocks[i])) {
      if (texts[i].empty()) continue;
      check_glyphs(texts[i], font);
      doc.blocks.emplace_back(TextBlock{});
    } else {
      TableBlock tb = layout_table(std::get<TableData>(blocks[i]), available, font, spec, doc.vm);
      doc.width = std::min(spec.width_max, std::max(doc.width, tb.width + 2 * spec.padding));
      doc.blocks.emplace_back(std::move(tb));
    }
    source.push_back(i);
  }
  // Text wraps against the final page width, which tables may have widened.
  int content_height = 0;
  for (std::size_t k = 0; k < doc.blocks.size(); ++k) {
    if (auto* tb = std::get_if<TextBlock>(&doc.blocks[k])) {
      tb->lines = wrap_text(texts[source[k]], doc.width - 2 * spec.padding, font, spec.font_size);
      tb->height = text_height(tb->lines.size(), doc.vm);
    }
    if (k > 0) content_height += doc.gap;
    content_height += std::visit([](const auto& b) { return b.height; }, doc.blocks[k]);
  }
  const int needed = content_height + 2 * spec.padding;
  doc.height = std::max(1, (needed + spec.base_height - 1) / spec.base_height) * spec.base_height;
  return doc;
}

// ---------------------------------------------------------------- drawing

struct Clip {
  int x0, y0, x1, y1;
};

void draw_line_text(PixelCanvas& canvas, std::u32string_view line, int x, int baseline, const Clip& clip,
                    const RenderSpec& spec, const Font& font) {
  const float scale = static_cast<float>(spec.font_size) / static_cast<float>(font.units_per_em());
  const LineMetrics m = measure_line(line, font, spec.font_size);
  const float origin = static_cast<float>(x + left_shift(m));
  float pen = 0.0f;
  for (char32_t cp : line) {
    const std::uint16_t glyph = *font.glyph_index(cp);
    const GlyphBitmap bmp = font.rasterize(glyph, scale, origin + pen, static_cast<float>(baseline));
    for (int gy = 0; gy < bmp.height; ++gy) {
      const int cy = bmp.top + gy;
      if (cy < clip.y0 || cy >= clip.y1) continue;
      for (int gx = 0; gx < bmp.width; ++gx) {
        const int cx = bmp.left + gx;
        if (cx < clip.x0 || cx >= clip.x1) continue;
        const float cov = bmp.coverage[static_cast<std::size_t>(gy) * bmp.width + gx];
        if (cov <= 0.0f) continue;
        for (int c = 0; c < canvas.channels(); ++c) {
          std::uint8_t& px = canvas.at(cx, cy, c);
          const float v = static_cast<float>(px) + (static_cast<float>(spec.foreground) - px) * cov;
          px = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
      }
    }
    pen += static_cast<float>(font.advance(glyph)) * scale;
  }
}

void fill_rect(PixelCanvas& canvas, int x0, int y0, int x1, int y1, std::uint8_t level) {
  for (int y = std::max(0, y0); y < std::min(canvas.height(), y1); ++y) {
    for (int x = std::max(0, x0); x < std::min(canvas.width(), x1); ++x) {
      for (int c = 0; c < canvas.channels(); ++c) canvas.at(x, y, c) = level;
    }
  }
}

void draw_table(PixelCanvas& canvas, const TableBlock& tb, int x0, int y0, const DocumentLayout& doc,
                const RenderSpec& spec, const Font& font) {
  const TableData& table = *tb.table;
  const auto shade = static_cast<std::uint8_t>(std::lround(0.85 * spec.background + 0.15 * spec.foreground));
  const int ncols = static_cast<int>(tb.col_widths.size());
  int y = y0;
  for (std::size_t r = 0; r < tb.row_heights.size(); ++r) {
    const int h = tb.row_heights[r];
    if (r == 0) fill_rect(canvas, x0, y, x0 + tb.width, y + h, shade);
    fill_rect(canvas, x0, y, x0 + tb.width, y + 1, spec.foreground);
    int x = x0;
    for (int c = 0; c < ncols; ++c) {
      const int w = tb.col_widths[c];
      fill_rect(canvas, x, y, x + 1, y + h, spec.foreground);
      const Clip clip{x + 1 + tb.pad_x, y + 1, x + w - tb.pad_x, y + h};
      const int inner = w - 1 - 2 * tb.pad_x;
      const CellAlign align = table.align.empty() ? CellAlign::Left : table.align[c];
      const auto& lines = tb.cells[r][c];
      for (std::size_t li = 0; li < lines.size(); ++li) {
        int offset = 0;
        if (align != CellAlign::Left) {
          const int used = needed_width(measure_line(lines[li], font, spec.font_size));
          offset = align == CellAlign::Right ? inner - used : (inner - used) / 2;
        }
        const int baseline = y + 1 + tb.pad_y + doc.vm.ascent + static_cast<int>(li) * doc.vm.line_height;
        draw_line_text(canvas, lines[li], x + 1 + tb.pad_x + std::max(0, offset), baseline, clip, spec, font);
      }
      x += w;
    }
    fill_rect(canvas, x, y, x + 1, y + h, spec.foreground);
    y += h;
  }
  fill_rect(canvas, x0, y, x0 + tb.width, y + 1, spec.foreground);
}

std::string document_digest_source(const std::vector<DocumentBlock>& blocks) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : blocks) {
    if (const auto* s = std::get_if<std::string>(&b)) j.push_back({{"text", *s}});
    else j.push_back({{"table", std::get<TableData>(b).to_json()}});
  }
  return j.dump();
}

}  // namespace

LayoutPlan plan_layout(std::string_view text, const RenderSpec& spec) {
  LayoutPlan plan;
  const DocumentLayout doc = layout_document({std::string(text)}, spec, &plan.char_count);
  plan.width = doc.width;
  plan.height = doc.height;
  plan.line_height = doc.vm.line_height;
  plan.ascent = doc.vm.ascent;
  plan.descent = doc.vm.descent;
  plan.text_box_width = doc.width - 2 * spec.padding;
  for (const auto& line : std::get<TextBlock>(doc.blocks.front()).lines) plan.lines.push_back(encode_utf8(line));
  return plan;
}

PixelCanvas render_document(const std::vector<DocumentBlock>& blocks, const RenderSpec& spec) {
  const DocumentLayout doc = layout_document(blocks, spec);
  const Font& font = Font::bundled();
  PixelCanvas canvas(doc.width, doc.height, spec.channels, spec.background);
  const Clip page{spec.padding, spec.padding, doc.width - spec.padding, doc.height - spec.padding};
  int y = spec.padding;
  for (const auto& block : doc.blocks) {
    if (&block != &doc.blocks.front()) y += doc.gap;
    if (const auto* tb = std::get_if<TextBlock>(&block)) {
      for (std::size_t i = 0; i < tb->lines.size(); ++i) {
        const int baseline = y + doc.vm.ascent + static_cast<int>(i) * doc.vm.line_height;
        draw_line_text(canvas, tb->lines[i], spec.padding, baseline, page, spec, font);
      }
      y += tb->height;
    } else {
      const auto& table = std::get<TableBlock>(block);
      draw_table(canvas, table, spec.padding, y, doc, spec, font);
      y += table.height;
    }
  }
  canvas.provenance = {sha256_hex(document_digest_source(blocks)), spec.sha256(), spec.seed};
  return canvas;
}

PixelCanvas render_text(std::string_view text, const RenderSpec& spec) {
  return render_document({std::string(text)}, spec);
}

PixelCanvas render_table(const TableData& table, const RenderSpec& spec) {
  table.validate();
  return render_document({table}, spec);
}

}  // namespace peap
