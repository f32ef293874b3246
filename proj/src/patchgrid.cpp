#include "peap/patchgrid.hpp"

#include <cstring>

#include "peap/error.hpp"

namespace peap {

PatchGrid::PatchGrid(int patch_size, int rows, int cols, int channels, std::vector<std::uint8_t> data)
    : patch_size_(patch_size), rows_(rows), cols_(cols), channels_(channels), data_(std::move(data)) {
  if (patch_size <= 0 || rows <= 0 || cols <= 0) throw Error(ErrorCode::InvalidSpec, "empty patch grid");
  if (data_.size() != size() * patch_len()) throw Error(ErrorCode::InvalidSpec, "patch data size mismatch");
}

void PruneConfig::validate() const {
  if (!(variance_threshold >= 0.0)) throw Error(ErrorCode::InvalidSpec, "variance threshold must be >= 0");
}

PatchMask PatchMask::all_kept(int rows, int cols) {
  return from_kept(rows, cols, std::vector<std::uint8_t>(static_cast<std::size_t>(rows) * cols, 1));
}

PatchMask PatchMask::from_kept(int rows, int cols, std::vector<std::uint8_t> kept) {
  if (kept.size() != static_cast<std::size_t>(rows) * cols) {
    throw Error(ErrorCode::MaskMismatch, "mask length does not equal rows*cols");
  }
  PatchMask m{rows, cols, std::move(kept), 0};
  for (auto& k : m.kept) {
    k = k ? 1 : 0;
    m.retained += k;
  }
  return m;
}

nlohmann::json PatchMask::to_json(int patch_size) const {
  std::string bits;
  static constexpr char hex[] = "0123456789abcdef";
  for (std::size_t byte = 0; byte < (kept.size() + 7) / 8; ++byte) {
    unsigned v = 0;
    for (std::size_t b = 0; b < 8 && byte * 8 + b < kept.size(); ++b) v |= static_cast<unsigned>(kept[byte * 8 + b]) << b;
    bits += hex[v >> 4];
    bits += hex[v & 15];
  }
  return {{"rows", rows}, {"cols", cols}, {"patch_size", patch_size}, {"retained", retained}, {"bits", bits}};
}

PatchMask PatchMask::from_json(const nlohmann::json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto bits = j.at("bits").get<std::string>();
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (bits.size() != 2 * ((n + 7) / 8)) throw Error(ErrorCode::MaskMismatch, "bitset length does not match grid");
  std::vector<std::uint8_t> kept(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned byte = static_cast<unsigned>(std::stoul(bits.substr(2 * (i / 8), 2), nullptr, 16));
    kept[i] = (byte >> (i % 8)) & 1u;
  }
  PatchMask m = from_kept(rows, cols, std::move(kept));
  if (j.contains("retained") && j.at("retained").get<std::size_t>() != m.retained) {
    throw Error(ErrorCode::MaskMismatch, "retained count disagrees with bitset");
  }
  return m;
}

nlohmann::json PrunedSequence::index_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : tokens) {
    out.push_back({{"row", t.coord.row},
                   {"col", t.coord.col},
                   {"index", t.index},
                   {"x", t.coord.col * patch_size},
                   {"y", t.coord.row * patch_size}});
  }
  return out;
}

PatchGrid tile(const PixelCanvas& canvas, int patch_size) {
  if (patch_size <= 0) throw Error(ErrorCode::InvalidSpec, "patch size must be positive");
  if (canvas.empty()) throw Error(ErrorCode::InvalidSpec, "cannot tile an empty canvas");
  const int rows = (canvas.height() + patch_size - 1) / patch_size;
  const int cols = (canvas.width() + patch_size - 1) / patch_size;
  const int ch = canvas.channels();
  const std::size_t patch_row = static_cast<std::size_t>(patch_size) * ch;
  std::vector<std::uint8_t> data(static_cast<std::size_t>(rows) * cols * patch_size * patch_row, canvas.background());
  for (int pr = 0; pr < rows; ++pr) {
    for (int pc = 0; pc < cols; ++pc) {
      std::uint8_t* dst = data.data() + (static_cast<std::size_t>(pr) * cols + pc) * patch_size * patch_row;
      const int x0 = pc * patch_size;
      const int copy_w = std::min(patch_size, canvas.width() - x0);
      for (int py = 0; py < patch_size; ++py) {
        const int y = pr * patch_size + py;
        if (y >= canvas.height()) break;
        std::memcpy(dst + py * patch_row, canvas.pixels().data() + (static_cast<std::size_t>(y) * canvas.width() + x0) * ch, static_cast<std::size_t>(copy_w) * ch);
      }
    }
  }
  PatchGrid grid(patch_size, rows, cols, ch, std::move(data));
  grid.source_width = canvas.width();
  grid.source_height = canvas.height();
  grid.background = canvas.background();
  grid.provenance = canvas.provenance;
  return grid;
}

PixelCanvas reassemble(const PatchGrid& grid) {
  const int p = grid.patch_size();
  PixelCanvas out(grid.cols() * p, grid.rows() * p, grid.channels(), grid.background);
  const std::size_t patch_row = static_cast<std::size_t>(p) * grid.channels();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const GridCoord c = grid.coord(i);
    const auto patch = grid.patch(i);
    for (int py = 0; py < p; ++py) {
      std::memcpy(&out.at(c.col * p, c.row * p + py), patch.data() + py * patch_row, patch_row);
    }
  }
  out.provenance = grid.provenance;
  return out;
}

double patch_variance(std::span<const std::uint8_t> patch, int channels) {
  if (patch.empty() || channels <= 0 || patch.size() % static_cast<std::size_t>(channels) != 0) {
    throw Error(ErrorCode::InvalidSpec, "patch must be non-empty and hold whole pixels");
  }
  return kernels::single_patch_variance(patch, channels);
}

std::vector<double> patch_variances(const PatchGrid& grid, ExecPolicy policy) {
  std::vector<double> out(grid.size());
  const std::size_t pixels = static_cast<std::size_t>(grid.patch_size()) * grid.patch_size();
  if (policy == ExecPolicy::Serial) kernels::serial::patch_variances(grid.data(), pixels, grid.channels(), out);
  else kernels::parallel::patch_variances(grid.data(), pixels, grid.channels(), out);
  return out;
}

PatchMask blank_mask(const PatchGrid& grid, const PruneConfig& cfg, ExecPolicy policy) {
  cfg.validate();
  const std::vector<double> var = patch_variances(grid, policy);
  std::vector<std::uint8_t> kept(var.size());
  for (std::size_t i = 0; i < var.size(); ++i) kept[i] = var[i] < cfg.variance_threshold ? 0 : 1;
  return PatchMask::from_kept(grid.rows(), grid.cols(), std::move(kept));
}

PrunedSequence prune(const PatchGrid& grid, const PatchMask& mask) {
  if (mask.rows != grid.rows() || mask.cols != grid.cols() || mask.size() != grid.size()) {
    throw Error(ErrorCode::MaskMismatch, "mask shape does not match grid");
  }
  PrunedSequence seq{grid.patch_size(), grid.rows(), grid.cols(), grid.channels(), {}};
  seq.tokens.reserve(mask.retained);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!mask.kept[i]) continue;
    const auto patch = grid.patch(i);
    seq.tokens.push_back({grid.coord(i), i, std::vector<std::uint8_t>(patch.begin(), patch.end())});
  }
  return seq;
}

PrunedSequence prune(const PrunedSequence& seq, const std::vector<std::uint8_t>& keep) {
  if (keep.size() != seq.tokens.size()) throw Error(ErrorCode::MaskMismatch, "mask length does not match sequence");
  PrunedSequence out{seq.patch_size, seq.rows, seq.cols, seq.channels, {}};
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.tokens.push_back(seq.tokens[i]);
  }
  return out;
}

PruneStats prune_stats(const PatchMask& mask) {
  PruneStats s;
  s.total = mask.size();
  s.kept = mask.retained;
  s.pruned = s.total - s.kept;
  s.retained_ratio = s.total ? static_cast<double>(s.kept) / static_cast<double>(s.total) : 0.0;
  s.attention_cost_ratio = s.retained_ratio * s.retained_ratio;
  return s;
}

}  // namespace peap
