#include "peap/toyvit.hpp"

#include <cmath>

#include "peap/error.hpp"
#include "peap/rng.hpp"

namespace peap {

void ToyViTConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (embed_dim <= 0 || heads <= 0) fail("embed_dim and heads must be positive");
  if (embed_dim % heads != 0) fail("embed_dim must be divisible by heads");
  if (embed_dim % 4 != 0) fail("embed_dim must be divisible by 4 for the 2-D positional code");
  if (layers < 1) fail("layer count must be >= 1");
  if (patch_size <= 0) fail("patch_size must be positive");
  if (channels != 1 && channels != 3) fail("channels must be 1 or 3");
  if (max_rows <= 0 || max_cols <= 0) fail("max grid must be positive");
  if (mlp_ratio <= 0) fail("mlp_ratio must be positive");
}

nlohmann::json ToyViTConfig::to_json() const {
  return {{"embed_dim", embed_dim}, {"heads", heads},       {"layers", layers},     {"patch_size", patch_size},
          {"channels", channels},   {"max_rows", max_rows}, {"max_cols", max_cols}, {"mlp_ratio", mlp_ratio},
          {"seed", seed},           {"precision", precision == Precision::Double ? "double" : "single"}};
}

Tokens Tokens::from(const PatchGrid& grid) {
  Tokens t{grid.rows(), grid.cols(), grid.patch_size(), grid.channels(), {}, {}};
  t.coords.reserve(grid.size());
  t.values.reserve(grid.data().size());
  for (std::size_t i = 0; i < grid.size(); ++i) t.coords.push_back(grid.coord(i));
  for (std::uint8_t v : grid.data()) t.values.push_back(v / 255.0);
  return t;
}

Tokens Tokens::from(const PrunedSequence& seq) {
  Tokens t{seq.rows, seq.cols, seq.patch_size, seq.channels, {}, {}};
  for (const auto& tok : seq.tokens) {
    t.coords.push_back(tok.coord);
    for (std::uint8_t v : tok.pixels) t.values.push_back(v / 255.0);
  }
  return t;
}

std::vector<double> positional_code(GridCoord coord, int dim) {
  std::vector<double> pe(static_cast<std::size_t>(dim));
  const int half = dim / 2;
  for (int part = 0; part < 2; ++part) {
    const double pos = part == 0 ? coord.row : coord.col;
    for (int k = 0; k < half / 2; ++k) {
      const double freq = std::pow(10000.0, -2.0 * k / half);
      pe[part * half + 2 * k] = std::sin(pos * freq);
      pe[part * half + 2 * k + 1] = std::cos(pos * freq);
    }
  }
  return pe;
}

namespace {

std::vector<double> draw(Rng& rng, std::size_t n, double scale, double offset = 0.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = offset + scale * rng.normal();
  return v;
}

template <typename To>
std::vector<To> cast(const std::vector<double>& v) {
  return std::vector<To>(v.begin(), v.end());
}

ViTWeights<float> to_single(const ViTWeights<double>& w) {
  ViTWeights<float> f;
  f.patch_w = cast<float>(w.patch_w);
  f.patch_b = cast<float>(w.patch_b);
  f.final_gamma = cast<float>(w.final_gamma);
  f.final_beta = cast<float>(w.final_beta);
  for (const auto& l : w.layers) {
    f.layers.push_back({cast<float>(l.ln1_gamma), cast<float>(l.ln1_beta), cast<float>(l.wq), cast<float>(l.bq),
                        cast<float>(l.wk), cast<float>(l.bk), cast<float>(l.wv), cast<float>(l.bv),
                        cast<float>(l.wo), cast<float>(l.bo), cast<float>(l.ln2_gamma), cast<float>(l.ln2_beta),
                        cast<float>(l.w1), cast<float>(l.b1), cast<float>(l.w2), cast<float>(l.b2)});
  }
  return f;
}

}  // namespace

ToyViT::ToyViT(const ToyViTConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.seed, "toyvit-weights"));
  const auto d = static_cast<std::size_t>(cfg_.embed_dim);
  const auto m = static_cast<std::size_t>(cfg_.mlp_dim());
  const auto p = static_cast<std::size_t>(cfg_.patch_dim());
  const double bias = 0.02;
  weights_.patch_w = draw(rng, p * d, 1.0 / std::sqrt(static_cast<double>(p)));
  weights_.patch_b = draw(rng, d, bias);
  for (int l = 0; l < cfg_.layers; ++l) {
    LayerWeights<double> lw;
    lw.ln1_gamma = draw(rng, d, 0.1, 1.0);
    lw.ln1_beta = draw(rng, d, 0.1);
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    lw.wq = draw(rng, d * d, sd);
    lw.bq = draw(rng, d, bias);
    lw.wk = draw(rng, d * d, sd);
    lw.bk = draw(rng, d, bias);
    lw.wv = draw(rng, d * d, sd);
    lw.bv = draw(rng, d, bias);
    lw.wo = draw(rng, d * d, sd);
    lw.bo = draw(rng, d, bias);
    lw.ln2_gamma = draw(rng, d, 0.1, 1.0);
    lw.ln2_beta = draw(rng, d, 0.1);
    lw.w1 = draw(rng, d * m, sd);
    lw.b1 = draw(rng, m, bias);
    lw.w2 = draw(rng, m * d, 1.0 / std::sqrt(static_cast<double>(m)));
    lw.b2 = draw(rng, d, bias);
    weights_.layers.push_back(std::move(lw));
  }
  weights_.final_gamma = draw(rng, d, 0.1, 1.0);
  weights_.final_beta = draw(rng, d, 0.1);
  weights_f_ = to_single(weights_);
}

std::size_t ToyViT::parameter_count() const {
  std::size_t n = weights_.patch_w.size() + weights_.patch_b.size() + weights_.final_gamma.size() +
                  weights_.final_beta.size();
  for (const auto& l : weights_.layers) {
    for (const auto* v : {&l.ln1_gamma, &l.ln1_beta, &l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo,
                          &l.ln2_gamma, &l.ln2_beta, &l.w1, &l.b1, &l.w2, &l.b2}) {
      n += v->size();
    }
  }
  return n;
}

void ToyViT::check_tokens(const Tokens& tokens) const {
  if (tokens.size() == 0) throw Error(ErrorCode::EmptyInput, "forward needs at least one token");
  if (tokens.patch_size != cfg_.patch_size || tokens.channels != cfg_.channels) {
    throw Error(ErrorCode::InvalidConfig, "token patch geometry does not match the model");
  }
  if (tokens.values.size() != tokens.size() * static_cast<std::size_t>(cfg_.patch_dim())) {
    throw Error(ErrorCode::InvalidConfig, "token values do not match patch_dim");
  }
  for (const GridCoord& c : tokens.coords) {
    if (c.row < 0 || c.col < 0 || c.row >= cfg_.max_rows || c.col >= cfg_.max_cols) {
      throw Error(ErrorCode::CoordinateOutOfRange,
                  "coordinate (" + std::to_string(c.row) + ", " + std::to_string(c.col) + ") outside model grid");
    }
  }
}

std::vector<double> ToyViT::embed(const Tokens& tokens) const {
  check_tokens(tokens);
  const auto n = tokens.size();
  const auto d = static_cast<std::size_t>(cfg_.embed_dim);
  std::vector<double> out(n * d);
  kernels::serial::linear(tokens.values.data(), n, static_cast<std::size_t>(cfg_.patch_dim()),
                          weights_.patch_w.data(), weights_.patch_b.data(), d, out.data());
  for (std::size_t t = 0; t < n; ++t) {
    const auto pe = positional_code(tokens.coords[t], cfg_.embed_dim);
    for (std::size_t i = 0; i < d; ++i) out[t * d + i] += pe[i];
  }
  return out;
}

template <typename T>
ForwardResult ToyViT::run(const Tokens& tokens, const std::uint8_t* key_keep, const ForwardOptions& opts,
                          const ViTWeights<T>& w) const {
  const bool par = opts.policy == ExecPolicy::Parallel;
  auto linear = par ? &kernels::parallel::linear<T> : &kernels::serial::linear<T>;
  auto layer_norm = par ? &kernels::parallel::layer_norm<T> : &kernels::serial::layer_norm<T>;
  auto gelu = par ? &kernels::parallel::gelu<T> : &kernels::serial::gelu<T>;
  auto attention = par ? &kernels::parallel::attention<T> : &kernels::serial::attention<T>;

  const std::size_t n = tokens.size();
  const auto d = static_cast<std::size_t>(cfg_.embed_dim);
  const auto m = static_cast<std::size_t>(cfg_.mlp_dim());
  const auto p = static_cast<std::size_t>(cfg_.patch_dim());
  const auto heads = static_cast<std::size_t>(cfg_.heads);
  kernels::FlopCounter* flops = opts.flops;

  std::vector<T> x(n * d), h(n * d), q(n * d), k(n * d), v(n * d), a(n * d), o(n * d), u(n * m);
  {
    std::vector<T> in(tokens.values.begin(), tokens.values.end());
    linear(in.data(), n, p, w.patch_w.data(), w.patch_b.data(), d, x.data());
    if (flops) flops->embed += 2 * n * p * d;
    for (std::size_t t = 0; t < n; ++t) {
      const auto pe = positional_code(tokens.coords[t], cfg_.embed_dim);
      for (std::size_t i = 0; i < d; ++i) x[t * d + i] += static_cast<T>(pe[i]);
    }
  }

  ForwardResult result;
  std::vector<T> probs;
  if (opts.trace != TraceLevel::None) {
    result.trace = AttentionTrace{tokens.grid_rows, tokens.grid_cols, cfg_.heads, n, tokens.coords, {}, {}};
  }

  for (int l = 0; l < cfg_.layers; ++l) {
    const LayerWeights<T>& lw = w.layers[l];
    const bool capture = opts.trace == TraceLevel::All || (opts.trace == TraceLevel::LastLayer && l == cfg_.layers - 1);
    if (capture) probs.assign(heads * n * n, T(0));

    layer_norm(x.data(), n, d, lw.ln1_gamma.data(), lw.ln1_beta.data(), h.data());
    linear(h.data(), n, d, lw.wq.data(), lw.bq.data(), d, q.data());
    linear(h.data(), n, d, lw.wk.data(), lw.bk.data(), d, k.data());
    linear(h.data(), n, d, lw.wv.data(), lw.bv.data(), d, v.data());
    attention(q.data(), k.data(), v.data(), n, heads, d / heads, key_keep, a.data(), capture ? probs.data() : nullptr,
              flops);
    linear(a.data(), n, d, lw.wo.data(), lw.bo.data(), d, o.data());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += o[i];

    layer_norm(x.data(), n, d, lw.ln2_gamma.data(), lw.ln2_beta.data(), h.data());
    linear(h.data(), n, d, lw.w1.data(), lw.b1.data(), m, u.data());
    gelu(u.data(), u.size());
    linear(u.data(), n, m, lw.w2.data(), lw.b2.data(), d, o.data());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += o[i];

    if (flops) {
      flops->projection += 8 * n * d * d;
      flops->mlp += 4 * n * d * m;
    }
    if (capture) {
      result.trace->layer_ids.push_back(l);
      result.trace->layers.emplace_back(probs.begin(), probs.end());
    }
  }
  layer_norm(x.data(), n, d, w.final_gamma.data(), w.final_beta.data(), h.data());
  result.tokens = n;
  result.dim = d;
  result.hidden.assign(h.begin(), h.end());
  return result;
}

ForwardResult ToyViT::forward(const Tokens& tokens, const ForwardOptions& opts) const {
  check_tokens(tokens);
  return cfg_.precision == Precision::Double ? run(tokens, nullptr, opts, weights_)
                                             : run(tokens, nullptr, opts, weights_f_);
}

ForwardResult ToyViT::forward_masked(const Tokens& tokens, const PatchMask& mask, const ForwardOptions& opts) const {
  check_tokens(tokens);
  if (mask.size() != tokens.size()) throw Error(ErrorCode::MaskMismatch, "mask length does not match token count");
  if (mask.retained == 0) throw Error(ErrorCode::MaskMismatch, "mask removes every key");
  return cfg_.precision == Precision::Double ? run(tokens, mask.kept.data(), opts, weights_)
                                             : run(tokens, mask.kept.data(), opts, weights_f_);
}

// ---------------------------------------------------------------- traces

void AttentionTrace::validate(double tol) const {
  if (layers.size() != layer_ids.size()) throw Error(ErrorCode::InvalidSpec, "trace layer ids do not match layers");
  for (const auto& layer : layers) {
    if (layer.size() != static_cast<std::size_t>(heads) * tokens * tokens) {
      throw Error(ErrorCode::InvalidSpec, "trace layer has wrong size");
    }
    for (std::size_t row = 0; row < static_cast<std::size_t>(heads) * tokens; ++row) {
      double sum = 0.0;
      for (std::size_t j = 0; j < tokens; ++j) {
        const double v = layer[row * tokens + j];
        if (!(v >= 0.0)) throw Error(ErrorCode::InvalidSpec, "negative attention weight");
        sum += v;
      }
      if (std::abs(sum - 1.0) > tol) throw Error(ErrorCode::InvalidSpec, "attention row does not sum to 1");
    }
  }
}

nlohmann::json AttentionTrace::to_json() const {
  nlohmann::json j{{"grid", {grid_rows, grid_cols}}, {"heads", heads}, {"tokens", tokens}};
  auto& c = j["coords"] = nlohmann::json::array();
  for (const auto& coord : coords) c.push_back({coord.row, coord.col});
  auto& ls = j["layers"] = nlohmann::json::array();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    nlohmann::json att = nlohmann::json::array();
    for (int h = 0; h < heads; ++h) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t t = 0; t < tokens; ++t) {
        const auto* row = layers[l].data() + (static_cast<std::size_t>(h) * tokens + t) * tokens;
        rows.push_back(std::vector<double>(row, row + tokens));
      }
      att.push_back(std::move(rows));
    }
    ls.push_back({{"layer", layer_ids[l]}, {"attention", std::move(att)}});
  }
  return j;
}

AttentionTrace AttentionTrace::from_json(const nlohmann::json& j) {
  AttentionTrace t;
  t.heads = j.at("heads").get<int>();
  t.tokens = j.at("tokens").get<std::size_t>();
  if (j.contains("grid")) {
    t.grid_rows = j.at("grid").at(0).get<int>();
    t.grid_cols = j.at("grid").at(1).get<int>();
  }
  if (j.contains("coords")) {
    for (const auto& c : j.at("coords")) t.coords.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
  }
  for (const auto& layer : j.at("layers")) {
    t.layer_ids.push_back(layer.at("layer").get<int>());
    std::vector<double> flat;
    for (const auto& head : layer.at("attention")) {
      for (const auto& row : head) {
        for (const auto& v : row) flat.push_back(v.get<double>());
      }
    }
    if (flat.size() != static_cast<std::size_t>(t.heads) * t.tokens * t.tokens) {
      throw Error(ErrorCode::InvalidSpec, "trace attention tensor has wrong shape");
    }
    t.layers.push_back(std::move(flat));
  }
  return t;
}

nlohmann::json Heatmap::to_json() const { return {{"rows", rows}, {"cols", cols}, {"values", values}}; }

namespace {

Heatmap empty_heatmap_for(const AttentionTrace& trace) {
  Heatmap hm;
  if (trace.coords.empty()) {
    hm.rows = 1;
    hm.cols = static_cast<int>(trace.tokens);
  } else {
    hm.rows = trace.grid_rows;
    hm.cols = trace.grid_cols;
  }
  hm.values.assign(static_cast<std::size_t>(hm.rows) * hm.cols, 0.0);
  return hm;
}

std::size_t cell_of(const AttentionTrace& trace, const Heatmap& hm, std::size_t key) {
  if (trace.coords.empty()) return key;
  const GridCoord c = trace.coords[key];
  return static_cast<std::size_t>(c.row) * hm.cols + c.col;
}

void check_range(const AttentionTrace& trace, std::size_t s, std::size_t e) {
  if (trace.layers.empty()) throw Error(ErrorCode::EmptyRange, "trace holds no layers");
  if (!(s < e) || e > trace.steps()) {
    throw Error(ErrorCode::EmptyRange, "decode range [" + std::to_string(s) + ", " + std::to_string(e) +
                                           ") invalid for " + std::to_string(trace.steps()) + " steps");
  }
  if (!trace.coords.empty() && trace.coords.size() != trace.tokens) {
    throw Error(ErrorCode::InvalidSpec, "trace coords do not match token count");
  }
}

}  // namespace

std::vector<Heatmap> heatmap_per_step(const AttentionTrace& trace, std::size_t s, std::size_t e) {
  check_range(trace, s, e);
  const std::size_t last = trace.layers.size() - 1;
  std::vector<Heatmap> out;
  for (std::size_t t = s; t < e; ++t) {
    Heatmap hm = empty_heatmap_for(trace);
    for (std::size_t i = 0; i < trace.tokens; ++i) {
      double acc = 0.0;
      for (int h = 0; h < trace.heads; ++h) acc += std::abs(trace.at(last, static_cast<std::size_t>(h), t, i));
      hm.values[cell_of(trace, hm, i)] = acc / trace.heads;
    }
    out.push_back(std::move(hm));
  }
  return out;
}

Heatmap heatmap(const AttentionTrace& trace, std::size_t s, std::size_t e) {
  const std::vector<Heatmap> steps = heatmap_per_step(trace, s, e);
  Heatmap hm = empty_heatmap_for(trace);
  for (const Heatmap& step : steps) {
    for (std::size_t i = 0; i < hm.values.size(); ++i) hm.values[i] += step.values[i];
  }
  for (double& v : hm.values) v /= static_cast<double>(steps.size());
  return hm;
}

kernels::FlopCounter count_cost(std::size_t n, const ToyViTConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<std::uint64_t>(cfg.embed_dim);
  const auto m = static_cast<std::uint64_t>(cfg.mlp_dim());
  const auto p = static_cast<std::uint64_t>(cfg.patch_dim());
  const auto layers = static_cast<std::uint64_t>(cfg.layers);
  kernels::FlopCounter c;
  c.embed = 2 * n * p * d;
  c.attention = layers * 4 * n * n * d;
  c.projection = layers * 8 * n * d * d;
  c.mlp = layers * 4 * n * d * m;
  return c;
}

}  // namespace peap
