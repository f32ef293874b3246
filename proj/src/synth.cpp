#include "peap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "peap/error.hpp"
#include "peap/rng.hpp"

namespace peap {

namespace {

constexpr const char* kWords[] = {
    "the",      "model",   "reads",    "every",   "page",     "as",        "pixels",  "and",      "answers",
    "question", "about",   "tables",   "numbers", "passage",  "which",     "film",    "starring", "sequel",
    "will",     "there",   "be",       "a",       "of",       "in",        "for",     "with",     "patch",
    "vision",   "text",    "token",    "layout",  "image",    "reasoning", "step",    "answer",   "true",
    "false",    "because", "evidence", "shows",   "that",     "result",    "value",   "column",   "row",
    "total",    "average", "year",     "revenue", "increase", "decrease",  "between", "first",    "second"};

}  // namespace

PixelCanvas blank_page(int width, int height, std::uint8_t level) {
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidSpec, "page dimensions must be positive");
  PixelCanvas c(width, height, 1, level);
  c.set_background(level);
  return c;
}

PixelCanvas textured_grid(int rows, int cols, int patch_size, double ratio, std::uint64_t seed) {
  if (rows < 1 || cols < 1 || patch_size < 1) throw Error(ErrorCode::InvalidSpec, "grid dimensions must be positive");
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error(ErrorCode::InvalidSpec, "ratio must lie in [0, 1]");
  const std::size_t total = static_cast<std::size_t>(rows) * cols;
  const auto filled = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(total)));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, std::string_view("textured-grid")));
  for (std::size_t i = total; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
  PixelCanvas c = blank_page(cols * patch_size, rows * patch_size);
  for (std::size_t k = 0; k < filled; ++k) {
    const int pr = static_cast<int>(order[k] / cols), pc = static_cast<int>(order[k] % cols);
    for (int y = 0; y < patch_size; ++y) {
      for (int x = 0; x < patch_size; ++x) {
        c.at(pc * patch_size + x, pr * patch_size + y) = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
      }
    }
  }
  c.provenance.seed = seed;
  return c;
}

std::string random_paragraph(std::size_t words, std::uint64_t seed) {
  Rng rng(derive_seed(seed, std::string_view("paragraph")));
  constexpr auto n = static_cast<std::int64_t>(std::size(kWords));
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += kWords[rng.uniform_int(0, n - 1)];
  }
  return out;
}

}  // namespace peap
