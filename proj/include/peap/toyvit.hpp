#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "peap/kernels.hpp"
#include "peap/patchgrid.hpp"

namespace peap {

enum class Precision { Single, Double };

struct ToyViTConfig {
  int embed_dim = 128;
  int heads = 4;
  int layers = 4;
  int patch_size = kDefaultPatchSize;
  int channels = 1;
  int max_rows = 128;
  int max_cols = 128;
  int mlp_ratio = 4;
  std::uint64_t seed = 0;
  Precision precision = Precision::Double;

  int head_dim() const { return embed_dim / heads; }
  int patch_dim() const { return patch_size * patch_size * channels; }
  int mlp_dim() const { return embed_dim * mlp_ratio; }
  void validate() const;
  nlohmann::json to_json() const;
};

// Patch tokens with the grid coordinate each one occupied before pruning.
struct Tokens {
  int grid_rows = 0;
  int grid_cols = 0;
  int patch_size = 0;
  int channels = 1;
  std::vector<GridCoord> coords;
  std::vector<double> values;  // size() x patch_dim, pixel / 255

  std::size_t size() const noexcept { return coords.size(); }
  static Tokens from(const PatchGrid& grid);
  static Tokens from(const PrunedSequence& seq);
};

template <typename T>
struct LayerWeights {
  std::vector<T> ln1_gamma, ln1_beta;
  std::vector<T> wq, bq, wk, bk, wv, bv, wo, bo;  // [dim x dim], [dim]
  std::vector<T> ln2_gamma, ln2_beta;
  std::vector<T> w1, b1;  // [dim x mlp], [mlp]
  std::vector<T> w2, b2;  // [mlp x dim], [dim]
};

template <typename T>
struct ViTWeights {
  std::vector<T> patch_w, patch_b;  // [patch_dim x dim], [dim]
  std::vector<LayerWeights<T>> layers;
  std::vector<T> final_gamma, final_beta;
};

// Row-stochastic attention matrices captured during a forward pass.
// layers[l] holds heads x tokens x tokens weights (query-major) for the
// layer with index layer_ids[l].
struct AttentionTrace {
  int grid_rows = 0;
  int grid_cols = 0;
  int heads = 0;
  std::size_t tokens = 0;
  std::vector<GridCoord> coords;
  std::vector<int> layer_ids;
  std::vector<std::vector<double>> layers;

  std::size_t steps() const noexcept { return tokens; }
  double at(std::size_t layer, std::size_t head, std::size_t query, std::size_t key) const {
    return layers[layer][(head * tokens + query) * tokens + key];
  }
  // Throws InvalidSpec unless entries are >= 0 and rows sum to 1 +- tol.
  void validate(double tol = 1e-6) const;

  // {"grid": [rows, cols], "heads", "tokens", "coords": [[r, c], ...],
  //  "layers": [{"layer": id, "attention": [head][query][key]}]}
  nlohmann::json to_json() const;
  static AttentionTrace from_json(const nlohmann::json& j);
};

struct Heatmap {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;  // rows * cols, zero where no token was present

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * cols + col]; }
  nlohmann::json to_json() const;
};

enum class TraceLevel { None, LastLayer, All };

struct ForwardOptions {
  ExecPolicy policy = ExecPolicy::Parallel;
  TraceLevel trace = TraceLevel::None;
  kernels::FlopCounter* flops = nullptr;
};

struct ForwardResult {
  std::size_t tokens = 0;
  std::size_t dim = 0;
  std::vector<double> hidden;  // tokens x dim
  std::optional<AttentionTrace> trace;

  const double* row(std::size_t t) const { return hidden.data() + t * dim; }
};

class ToyViT {
 public:
  explicit ToyViT(const ToyViTConfig& cfg);

  const ToyViTConfig& config() const noexcept { return cfg_; }
  const ViTWeights<double>& weights() const noexcept { return weights_; }
  std::size_t parameter_count() const;

  // Patch projection plus the sinusoidal code of each token's original
  // coordinate; tokens x dim.
  std::vector<double> embed(const Tokens& tokens) const;

  ForwardResult forward(const Tokens& tokens, const ForwardOptions& opts = {}) const;

  // Full sequence, but every query's softmax excludes masked keys at every
  // layer. Masked tokens keep their rows.
  ForwardResult forward_masked(const Tokens& tokens, const PatchMask& mask, const ForwardOptions& opts = {}) const;

 private:
  template <typename T>
  ForwardResult run(const Tokens& tokens, const std::uint8_t* key_keep, const ForwardOptions& opts,
                    const ViTWeights<T>& w) const;
  void check_tokens(const Tokens& tokens) const;

  ToyViTConfig cfg_;
  ViTWeights<double> weights_;
  ViTWeights<float> weights_f_;
};

// 2-D sinusoidal code: first half of the vector encodes the row, second half
// the column; within each half, (sin, cos) pairs at geometric frequencies.
std::vector<double> positional_code(GridCoord coord, int dim);

// Mean over heads of |A[t, i]| from the last captured layer, averaged over
// query steps t in [s, e), scattered back to grid positions.
Heatmap heatmap(const AttentionTrace& trace, std::size_t s, std::size_t e);
std::vector<Heatmap> heatmap_per_step(const AttentionTrace& trace, std::size_t s, std::size_t e);

// Closed-form FLOPs (2 per multiply-add) of one forward pass over seq_len tokens.
kernels::FlopCounter count_cost(std::size_t seq_len, const ToyViTConfig& cfg);

}  // namespace peap
