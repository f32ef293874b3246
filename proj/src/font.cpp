#include "peap/font.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "peap/error.hpp"

namespace peap {

namespace assets {
extern const std::uint8_t dejavu_sans_ttf[];
extern const std::size_t dejavu_sans_ttf_size;
}  // namespace assets

namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8(std::size_t off) const {
    check(off, 1);
    return data_[off];
  }
  std::uint16_t u16(std::size_t off) const {
    check(off, 2);
    return static_cast<std::uint16_t>(data_[off] << 8 | data_[off + 1]);
  }
  std::int16_t i16(std::size_t off) const { return static_cast<std::int16_t>(u16(off)); }
  std::uint32_t u32(std::size_t off) const {
    check(off, 4);
    return static_cast<std::uint32_t>(data_[off]) << 24 | static_cast<std::uint32_t>(data_[off + 1]) << 16 |
           static_cast<std::uint32_t>(data_[off + 2]) << 8 | data_[off + 3];
  }

 private:
  void check(std::size_t off, std::size_t len) const {
    if (off + len > data_.size()) throw Error(ErrorCode::CodecError, "truncated font data");
  }
  std::span<const std::uint8_t> data_;
};

std::uint32_t find_table(const Reader& r, const char* tag) {
  const int count = r.u16(4);
  for (int i = 0; i < count; ++i) {
    const std::size_t rec = 12 + 16 * static_cast<std::size_t>(i);
    const std::uint32_t t = r.u32(rec);
    const std::uint32_t want = static_cast<std::uint32_t>(static_cast<unsigned char>(tag[0])) << 24 |
                               static_cast<std::uint32_t>(static_cast<unsigned char>(tag[1])) << 16 |
                               static_cast<std::uint32_t>(static_cast<unsigned char>(tag[2])) << 8 |
                               static_cast<unsigned char>(tag[3]);
    if (t == want) return r.u32(rec + 8);
  }
  throw Error(ErrorCode::CodecError, std::string("font lacks table ") + tag);
}

// Signed-area accumulation rasterizer: each edge deposits its coverage
// delta into the cells it crosses; a running sum per row yields coverage.
class Accumulator {
 public:
  Accumulator(int width, int height)
      : width_(width), height_(height), cells_(static_cast<std::size_t>(width) * height + 4, 0.0f) {}

  void line(float x0, float y0, float x1, float y1) {
    if (y0 == y1) return;
    float dir = 1.0f;
    if (y0 > y1) {
      std::swap(x0, x1);
      std::swap(y0, y1);
      dir = -1.0f;
    }
    const float dxdy = (x1 - x0) / (y1 - y0);
    float x = x0;
    if (y0 < 0.0f) x -= y0 * dxdy;
    const int y_begin = std::max(0, static_cast<int>(y0));
    const int y_end = std::min(height_, static_cast<int>(std::ceil(y1)));
    for (int y = y_begin; y < y_end; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * width_;
      const float dy = std::min(static_cast<float>(y + 1), y1) - std::max(static_cast<float>(y), y0);
      const float x_next = x + dxdy * dy;
      const float d = dy * dir;
      const float xa = std::min(x, x_next);
      const float xb = std::max(x, x_next);
      const float xa_floor = std::floor(xa);
      const int xa_i = static_cast<int>(xa_floor);
      const int xb_i = static_cast<int>(std::ceil(xb));
      if (xa_i < 0) {
        x = x_next;
        continue;
      }
      if (xb_i <= xa_i + 1) {
        const float xm = 0.5f * (x + x_next) - xa_floor;
        cells_[row + xa_i] += d - d * xm;
        cells_[row + xa_i + 1] += d * xm;
      } else {
        const float s = 1.0f / (xb - xa);
        const float xa_frac = xa - xa_floor;
        const float a0 = 0.5f * s * (1.0f - xa_frac) * (1.0f - xa_frac);
        const float xb_frac = xb - static_cast<float>(xb_i) + 1.0f;
        const float am = 0.5f * s * xb_frac * xb_frac;
        cells_[row + xa_i] += d * a0;
        if (xb_i == xa_i + 2) {
          cells_[row + xa_i + 1] += d * (1.0f - a0 - am);
        } else {
          const float a1 = s * (1.5f - xa_frac);
          cells_[row + xa_i + 1] += d * (a1 - a0);
          for (int xi = xa_i + 2; xi < xb_i - 1; ++xi) cells_[row + xi] += d * s;
          const float a2 = a1 + static_cast<float>(xb_i - xa_i - 3) * s;
          cells_[row + xb_i - 1] += d * (1.0f - a2 - am);
        }
        cells_[row + xb_i] += d * am;
      }
      x = x_next;
    }
  }

  std::vector<float> coverage() const {
    std::vector<float> out(static_cast<std::size_t>(width_) * height_);
    float acc = 0.0f;
    for (std::size_t i = 0; i < out.size(); ++i) {
      acc += cells_[i];
      out[i] = std::min(1.0f, std::abs(acc));
    }
    return out;
  }

 private:
  int width_;
  int height_;
  std::vector<float> cells_;
};

}  // namespace

Font::Font(std::vector<std::uint8_t> data) : data_(std::move(data)) {
  const Reader r(data_);
  const std::uint32_t head = find_table(r, "head");
  units_per_em_ = r.u16(head + 18);
  global_box_ = {r.i16(head + 36), r.i16(head + 38), r.i16(head + 40), r.i16(head + 42)};
  long_loca_ = r.i16(head + 50) != 0;
  num_glyphs_ = r.u16(find_table(r, "maxp") + 4);
  num_hmetrics_ = r.u16(find_table(r, "hhea") + 34);
  hmtx_ = find_table(r, "hmtx");
  loca_ = find_table(r, "loca");
  glyf_ = find_table(r, "glyf");
  if (units_per_em_ <= 0 || num_hmetrics_ <= 0) throw Error(ErrorCode::CodecError, "invalid font header");

  const std::uint32_t cmap = find_table(r, "cmap");
  const int subtables = r.u16(cmap + 2);
  int best_rank = -1;
  for (int i = 0; i < subtables; ++i) {
    const std::size_t rec = cmap + 4 + 8 * static_cast<std::size_t>(i);
    const int platform = r.u16(rec);
    const int encoding = r.u16(rec + 2);
    const std::uint32_t off = cmap + r.u32(rec + 4);
    const int format = r.u16(off);
    int rank = -1;
    if (format == 12 && (platform == 3 || platform == 0)) rank = 2;
    else if (format == 4 && ((platform == 3 && encoding == 1) || platform == 0)) rank = 1;
    if (rank > best_rank) {
      best_rank = rank;
      cmap_subtable_ = off;
      cmap_format_ = format;
    }
  }
  if (best_rank < 0) throw Error(ErrorCode::CodecError, "font has no unicode cmap");
}

const Font& Font::bundled() {
  static const Font font(std::vector<std::uint8_t>(assets::dejavu_sans_ttf,
                                                   assets::dejavu_sans_ttf + assets::dejavu_sans_ttf_size));
  return font;
}

std::optional<std::uint16_t> Font::glyph_index(char32_t cp) const {
  const Reader r(data_);
  const std::uint32_t t = cmap_subtable_;
  std::uint32_t glyph = 0;
  if (cmap_format_ == 12) {
    const std::uint32_t groups = r.u32(t + 12);
    std::uint32_t lo = 0, hi = groups;
    while (lo < hi) {
      const std::uint32_t mid = (lo + hi) / 2;
      const std::size_t g = t + 16 + 12 * static_cast<std::size_t>(mid);
      const std::uint32_t start = r.u32(g), end = r.u32(g + 4);
      if (cp < start) hi = mid;
      else if (cp > end) lo = mid + 1;
      else {
        glyph = r.u32(g + 8) + (cp - start);
        break;
      }
    }
  } else {
    if (cp > 0xFFFF) return std::nullopt;
    const int seg_count = r.u16(t + 6) / 2;
    const std::size_t ends = t + 14;
    const std::size_t starts = ends + 2 * seg_count + 2;
    const std::size_t deltas = starts + 2 * seg_count;
    const std::size_t ranges = deltas + 2 * seg_count;
    for (int i = 0; i < seg_count; ++i) {
      if (cp > r.u16(ends + 2 * i)) continue;
      const std::uint16_t start = r.u16(starts + 2 * i);
      if (cp < start) break;
      const std::uint16_t range = r.u16(ranges + 2 * i);
      const std::uint16_t delta = r.u16(deltas + 2 * i);
      if (range == 0) {
        glyph = (cp + delta) & 0xFFFF;
      } else {
        const std::size_t addr = ranges + 2 * i + range + 2 * (cp - start);
        const std::uint16_t g = r.u16(addr);
        glyph = g == 0 ? 0 : (g + delta) & 0xFFFF;
      }
      break;
    }
  }
  if (glyph == 0 || glyph >= static_cast<std::uint32_t>(num_glyphs_)) return std::nullopt;
  return static_cast<std::uint16_t>(glyph);
}

int Font::advance(std::uint16_t glyph) const {
  const Reader r(data_);
  const int idx = std::min<int>(glyph, num_hmetrics_ - 1);
  return r.u16(hmtx_ + 4 * static_cast<std::size_t>(idx));
}

std::span<const std::uint8_t> Font::glyph_data(std::uint16_t glyph) const {
  const Reader r(data_);
  std::uint32_t begin, end;
  if (long_loca_) {
    begin = r.u32(loca_ + 4 * static_cast<std::size_t>(glyph));
    end = r.u32(loca_ + 4 * static_cast<std::size_t>(glyph) + 4);
  } else {
    begin = 2u * r.u16(loca_ + 2 * static_cast<std::size_t>(glyph));
    end = 2u * r.u16(loca_ + 2 * static_cast<std::size_t>(glyph) + 2);
  }
  if (end <= begin) return {};
  if (glyf_ + end > data_.size()) throw Error(ErrorCode::CodecError, "glyph outside glyf table");
  return std::span(data_).subspan(glyf_ + begin, end - begin);
}

std::optional<FontBox> Font::glyph_box(std::uint16_t glyph) const {
  const auto g = glyph_data(glyph);
  if (g.size() < 10) return std::nullopt;
  const Reader r(g);
  return FontBox{r.i16(2), r.i16(4), r.i16(6), r.i16(8)};
}

void Font::append_contours(std::uint16_t glyph, const float (&m)[6], std::vector<Contour>& out, int depth) const {
  if (depth > 8) throw Error(ErrorCode::CodecError, "composite glyph nesting too deep");
  const auto g = glyph_data(glyph);
  if (g.size() < 10) return;
  const Reader r(g);
  const int contours = r.i16(0);
  auto apply = [&m](float x, float y, bool on) {
    return Point{m[0] * x + m[2] * y + m[4], m[1] * x + m[3] * y + m[5], on};
  };

  if (contours >= 0) {
    std::vector<int> ends(static_cast<std::size_t>(contours));
    for (int i = 0; i < contours; ++i) ends[i] = r.u16(10 + 2 * static_cast<std::size_t>(i));
    const int points = contours == 0 ? 0 : ends.back() + 1;
    std::size_t off = 10 + 2 * static_cast<std::size_t>(contours);
    off += 2 + r.u16(off);  // skip instructions

    std::vector<std::uint8_t> flags;
    flags.reserve(static_cast<std::size_t>(points));
    while (static_cast<int>(flags.size()) < points) {
      const std::uint8_t f = r.u8(off++);
      flags.push_back(f);
      if (f & 0x08) {
        for (int rep = r.u8(off++); rep > 0; --rep) flags.push_back(f);
      }
    }
    std::vector<int> xs(static_cast<std::size_t>(points)), ys(static_cast<std::size_t>(points));
    int v = 0;
    for (int i = 0; i < points; ++i) {
      const std::uint8_t f = flags[i];
      if (f & 0x02) {
        const int d = r.u8(off++);
        v += (f & 0x10) ? d : -d;
      } else if (!(f & 0x10)) {
        v += r.i16(off);
        off += 2;
      }
      xs[i] = v;
    }
    v = 0;
    for (int i = 0; i < points; ++i) {
      const std::uint8_t f = flags[i];
      if (f & 0x04) {
        const int d = r.u8(off++);
        v += (f & 0x20) ? d : -d;
      } else if (!(f & 0x20)) {
        v += r.i16(off);
        off += 2;
      }
      ys[i] = v;
    }
    int first = 0;
    for (int c = 0; c < contours; ++c) {
      Contour contour;
      for (int i = first; i <= ends[c]; ++i) {
        contour.push_back(apply(static_cast<float>(xs[i]), static_cast<float>(ys[i]), flags[i] & 0x01));
      }
      if (!contour.empty()) out.push_back(std::move(contour));
      first = ends[c] + 1;
    }
    return;
  }

  std::size_t off = 10;
  std::uint16_t flags;
  do {
    flags = r.u16(off);
    const std::uint16_t component = r.u16(off + 2);
    off += 4;
    float dx, dy;
    if (flags & 0x0001) {
      dx = r.i16(off);
      dy = r.i16(off + 2);
      off += 4;
    } else {
      dx = static_cast<std::int8_t>(r.u8(off));
      dy = static_cast<std::int8_t>(r.u8(off + 1));
      off += 2;
    }
    if (!(flags & 0x0002)) dx = dy = 0.0f;  // point matching is not supported
    float a = 1, b = 0, c = 0, d = 1;
    auto f2dot14 = [&r](std::size_t o) { return static_cast<float>(r.i16(o)) / 16384.0f; };
    if (flags & 0x0008) {
      a = d = f2dot14(off);
      off += 2;
    } else if (flags & 0x0040) {
      a = f2dot14(off);
      d = f2dot14(off + 2);
      off += 4;
    } else if (flags & 0x0080) {
      a = f2dot14(off);
      b = f2dot14(off + 2);
      c = f2dot14(off + 4);
      d = f2dot14(off + 6);
      off += 8;
    }
    // child point p maps to m * (A p + t)
    const float child[6] = {
        m[0] * a + m[2] * b, m[1] * a + m[3] * b, m[0] * c + m[2] * d,
        m[1] * c + m[3] * d, m[0] * dx + m[2] * dy + m[4], m[1] * dx + m[3] * dy + m[5],
    };
    append_contours(component, child, out, depth + 1);
  } while (flags & 0x0020);
}

GlyphBitmap Font::rasterize(std::uint16_t glyph, float scale, float pen_x, float baseline_y) const {
  GlyphBitmap bmp;
  const auto box = glyph_box(glyph);
  if (!box) return bmp;
  bmp.left = static_cast<int>(std::floor(pen_x + box->x_min * scale));
  bmp.top = static_cast<int>(std::floor(baseline_y - box->y_max * scale));
  const int right = static_cast<int>(std::ceil(pen_x + box->x_max * scale));
  const int bottom = static_cast<int>(std::ceil(baseline_y - box->y_min * scale));
  bmp.width = std::max(0, right - bmp.left);
  bmp.height = std::max(0, bottom - bmp.top);
  if (bmp.width == 0 || bmp.height == 0) return bmp;

  // font units -> bitmap-local pixels (y flipped)
  const float xform[6] = {scale, 0.0f, 0.0f, -scale, pen_x - static_cast<float>(bmp.left),
                          baseline_y - static_cast<float>(bmp.top)};
  std::vector<Contour> contours;
  append_contours(glyph, xform, contours, 0);

  // one spare column so edges ending on the right border stay in range
  Accumulator acc(bmp.width + 2, bmp.height);
  for (const Contour& contour : contours) {
    const std::size_t n = contour.size();
    std::size_t start = 0;
    while (start < n && !contour[start].on_curve) ++start;
    Point origin;
    if (start == n) {
      origin = {0.5f * (contour[0].x + contour[1 % n].x), 0.5f * (contour[0].y + contour[1 % n].y), true};
      start = 0;
    } else {
      origin = contour[start];
      start = (start + 1) % n;
    }
    Point pen = origin;
    std::optional<Point> control;
    auto quad_to = [&acc, &pen](const Point& ctrl, const Point& end) {
      const float ddx = pen.x - 2 * ctrl.x + end.x;
      const float ddy = pen.y - 2 * ctrl.y + end.y;
      const float dev = std::sqrt(ddx * ddx + ddy * ddy);
      const int steps = std::clamp(static_cast<int>(std::ceil(std::sqrt(dev * 3.0f))), 1, 24);
      Point prev = pen;
      for (int i = 1; i <= steps; ++i) {
        const float t = static_cast<float>(i) / static_cast<float>(steps);
        const float u = 1.0f - t;
        const Point p{u * u * pen.x + 2 * u * t * ctrl.x + t * t * end.x,
                      u * u * pen.y + 2 * u * t * ctrl.y + t * t * end.y, true};
        acc.line(prev.x, prev.y, p.x, p.y);
        prev = p;
      }
      pen = end;
    };
    for (std::size_t k = 0; k < n; ++k) {
      const Point& p = contour[(start + k) % n];
      if (p.on_curve) {
        if (control) {
          quad_to(*control, p);
          control.reset();
        } else {
          acc.line(pen.x, pen.y, p.x, p.y);
          pen = p;
        }
      } else if (control) {
        const Point mid{0.5f * (control->x + p.x), 0.5f * (control->y + p.y), true};
        quad_to(*control, mid);
        control = p;
      } else {
        control = p;
      }
    }
    if (control) quad_to(*control, origin);
    else if (pen.x != origin.x || pen.y != origin.y) acc.line(pen.x, pen.y, origin.x, origin.y);
  }

  const std::vector<float> full = acc.coverage();
  bmp.coverage.resize(static_cast<std::size_t>(bmp.width) * bmp.height);
  for (int y = 0; y < bmp.height; ++y) {
    std::memcpy(&bmp.coverage[static_cast<std::size_t>(y) * bmp.width],
                &full[static_cast<std::size_t>(y) * (bmp.width + 2)], sizeof(float) * bmp.width);
  }
  return bmp;
}

}  // namespace peap
