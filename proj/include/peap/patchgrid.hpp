#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "peap/canvas.hpp"
#include "peap/kernels.hpp"

namespace peap {

inline constexpr int kDefaultPatchSize = 28;
inline constexpr double kDefaultVarianceThreshold = 10.0;

struct GridCoord {
  int row = 0;
  int col = 0;
  auto operator<=>(const GridCoord&) const = default;
};

// Canvas padded with its background to whole patches, stored patch-major:
// patch i occupies patch_size^2 * channels contiguous samples, rows inside a
// patch are row-major.
class PatchGrid {
 public:
  PatchGrid() = default;
  PatchGrid(int patch_size, int rows, int cols, int channels, std::vector<std::uint8_t> data);

  int patch_size() const noexcept { return patch_size_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(rows_) * cols_; }
  std::size_t patch_len() const noexcept {
    return static_cast<std::size_t>(patch_size_) * patch_size_ * channels_;
  }

  std::span<const std::uint8_t> patch(std::size_t index) const { return std::span(data_).subspan(index * patch_len(), patch_len()); }
  std::span<const std::uint8_t> data() const noexcept { return data_; }
  GridCoord coord(std::size_t index) const {
    return {static_cast<int>(index / cols_), static_cast<int>(index % cols_)};
  }

  // Size of the canvas before padding.
  int source_width = 0;
  int source_height = 0;
  std::uint8_t background = 255;
  Provenance provenance;

 private:
  int patch_size_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 1;
  std::vector<std::uint8_t> data_;
};

struct PruneConfig {
  double variance_threshold = kDefaultVarianceThreshold;
  void validate() const;
};

struct PatchMask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> kept;  // 1 = kept, 0 = blank
  std::size_t retained = 0;

  std::size_t size() const noexcept { return kept.size(); }
  static PatchMask all_kept(int rows, int cols);
  static PatchMask from_kept(int rows, int cols, std::vector<std::uint8_t> kept);

  // {"rows", "cols", "patch_size", "retained", "bits"}; bits is the
  // hex-encoded little-endian bitset of kept flags in scan order.
  nlohmann::json to_json(int patch_size) const;
  static PatchMask from_json(const nlohmann::json& j);
};

struct PrunedToken {
  GridCoord coord;
  std::size_t index = 0;  // scan index in the unpruned grid
  std::vector<std::uint8_t> pixels;
};

struct PrunedSequence {
  int patch_size = 0;
  int rows = 0;
  int cols = 0;
  int channels = 1;
  std::vector<PrunedToken> tokens;

  // (coordinate, pixel offset into the padded canvas) index for debugging.
  nlohmann::json index_json() const;
};

struct PruneStats {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t pruned = 0;
  double retained_ratio = 0;
  double attention_cost_ratio = 0;
};

PatchGrid tile(const PixelCanvas& canvas, int patch_size = kDefaultPatchSize);
// Padded canvas rebuilt from the patches; crop to source size to undo tile().
PixelCanvas reassemble(const PatchGrid& grid);

double patch_variance(std::span<const std::uint8_t> patch, int channels = 1);
std::vector<double> patch_variances(const PatchGrid& grid, ExecPolicy policy = ExecPolicy::Parallel);

PatchMask blank_mask(const PatchGrid& grid, const PruneConfig& cfg, ExecPolicy policy = ExecPolicy::Parallel);

PrunedSequence prune(const PatchGrid& grid, const PatchMask& mask);
PrunedSequence prune(const PrunedSequence& seq, const std::vector<std::uint8_t>& keep);

PruneStats prune_stats(const PatchMask& mask);

}  // namespace peap
