#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "peap/error.hpp"
#include "peap/harness/suite.hpp"
#include "peap/noise.hpp"
#include "peap/overlay.hpp"
#include "peap/patchgrid.hpp"
#include "peap/png.hpp"
#include "peap/provenance.hpp"
#include "peap/render.hpp"
#include "peap/rng.hpp"
#include "peap/synth.hpp"
#include "peap/toyvit.hpp"

namespace fs = std::filesystem;
using namespace peap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTransport = 3;
constexpr int kExitPartial = 4;

struct RenderArgs {
  std::string text;
  std::string input;
  std::string out;
  std::string name = "render";
  RenderSpec spec;
  bool sample_layout = false;
  std::uint64_t seed = 0;
  std::string noise = "none";
  double noise_amplitude = 20.0;
  bool noise_reverse = false;
  int noise_components = 3;
};

struct PruneArgs {
  std::string images;
  std::string sweep = "half";
  std::string out;
  int count = 3;
  double tau = kDefaultVarianceThreshold;
  int patch_size = kDefaultPatchSize;
  double ratio = 0.5;
  int grid = 32;
  std::uint64_t seed = 0;
  int repeats = 3;
  int layers = 2;
  int embed_dim = 64;
  int heads = 4;
};

struct HeatmapArgs {
  std::string image;
  std::string out;
  std::uint64_t seed = 0;
  std::string range;
  bool prune = false;
  double tau = kDefaultVarianceThreshold;
  int patch_size = kDefaultPatchSize;
  int layers = 2;
  int embed_dim = 64;
  int heads = 4;
  double alpha = 0.5;
  bool save_trace = false;
};

struct EvalArgs {
  std::string config;
  std::string dataset;
  std::string out;
  std::vector<std::string> modes;
  std::vector<std::string> styles;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> concurrency;
  std::string endpoint_url;
  std::string model;
  bool mock = false;
  bool dry_run = false;
  bool save_assets = false;
};

struct ReportArgs {
  std::vector<std::string> reports;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
}

NoiseSpec noise_from(const RenderArgs& a, std::uint64_t seed) {
  NoiseSpec n;
  n.kind = parse_noise_kind(a.noise);
  n.amplitude = a.noise_amplitude;
  n.reverse = a.noise_reverse;
  n.components = a.noise_components;
  n.seed = derive_seed(seed, std::string_view("noise"));
  n.validate();
  return n;
}

PixelCanvas finish_canvas(PixelCanvas c, const RenderArgs& a, std::uint64_t seed) {
  const NoiseSpec n = noise_from(a, seed);
  return n.kind == NoiseKind::None ? c : apply_noise(c, n);
}

RenderSpec spec_for(const RenderArgs& a, std::uint64_t seed) {
  RenderSpec s = a.sample_layout ? RenderSpec::sampled(seed, a.spec) : a.spec;
  s.seed = seed;
  s.validate();
  return s;
}

int cmd_render(const RenderArgs& a) {
  if (a.text.empty() == a.input.empty()) throw Error(ErrorCode::InvalidConfig, "give exactly one of --text or --input");
  const fs::path out = a.out;
  fs::create_directories(out);
  auto emit = [&](const std::string& stem, const PixelCanvas& c) {
    const fs::path p = out / (stem + ".png");
    write_canvas(p, c);
    std::cout << p.string() << ' ' << c.width() << 'x' << c.height() << '\n';
  };
  if (!a.text.empty()) {
    emit(a.name, finish_canvas(render_text(a.text, spec_for(a, a.seed)), a, a.seed));
    return kExitOk;
  }
  const fs::path in = a.input;
  if (in.extension() == ".jsonl") {
    const harness::TaskCatalog tasks;
    const auto examples = harness::load_dataset(in, tasks, a.seed);
    for (const auto& ex : examples) {
      const auto blocks = harness::prompt_blocks(ex, tasks.resolve(ex), false);
      emit(safe_name(ex.id), finish_canvas(render_document(blocks, spec_for(a, ex.seed)), a, ex.seed));
    }
    return kExitOk;
  }
  emit(a.name == "render" ? in.stem().string() : a.name, finish_canvas(render_text(slurp(in), spec_for(a, a.seed)), a, a.seed));
  return kExitOk;
}

template <typename F>
double best_ms(int repeats, F&& f) {
  double best = 1e300;
  for (int i = 0; i < std::max(1, repeats); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

int cmd_prune_bench(const PruneArgs& a) {
  const fs::path out = a.out;
  std::vector<std::pair<std::string, PixelCanvas>> canvases;
  if (!a.images.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.images)) {
      if (e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::InvalidConfig, "no PNG files in " + a.images);
    for (const auto& f : files) canvases.emplace_back(f.filename().string(), decode_png(read_file(f)));
  } else {
    for (int i = 0; i < a.count; ++i) {
      const std::uint64_t s = derive_seed(a.seed, static_cast<std::uint64_t>(i));
      const std::string name = a.sweep + "-" + std::to_string(i);
      if (a.sweep == "blank") {
        const int widths[] = {512, 768, 1024};
        canvases.emplace_back(name, blank_page(widths[i % 3], 256 * (1 + i % 2)));
      } else if (a.sweep == "dense") {
        RenderSpec spec;
        spec.width_min = spec.width_max = 1024;
        spec.padding = kMinPadding;
        spec.seed = s;
        canvases.emplace_back(name, render_text(random_paragraph(330, s), spec));
      } else if (a.sweep == "half") {
        canvases.emplace_back(name, textured_grid(a.grid, a.grid, a.patch_size, a.ratio, s));
      } else {
        throw Error(ErrorCode::InvalidConfig, "sweep must be blank, dense or half");
      }
    }
  }
  fs::create_directories(out);

  PruneConfig pc;
  pc.variance_threshold = a.tau;
  pc.validate();
  std::ostringstream csv;
  csv << "name,width,height,patches,kept,retained_ratio,cost_ratio,attn_flops_full,attn_flops_pruned,"
         "attn_flop_ratio,full_ms,pruned_ms,speedup\n";
  double sum_r = 0, sum_cost = 0, sum_flop = 0, sum_speed = 0;
  std::size_t n_speed = 0;
  for (const auto& [name, canvas] : canvases) {
    const PatchGrid grid = tile(canvas, a.patch_size);
    const PatchMask mask = blank_mask(grid, pc);
    const PruneStats st = prune_stats(mask);
    ToyViTConfig mc;
    mc.embed_dim = a.embed_dim;
    mc.heads = a.heads;
    mc.layers = a.layers;
    mc.patch_size = a.patch_size;
    mc.channels = canvas.channels();
    mc.max_rows = std::max(mc.max_rows, grid.rows());
    mc.max_cols = std::max(mc.max_cols, grid.cols());
    mc.seed = a.seed;
    const ToyViT model(mc);
    const Tokens full = Tokens::from(grid);
    kernels::FlopCounter f_full, f_pruned;
    ForwardOptions fo;
    fo.flops = &f_full;
    model.forward(full, fo);
    const double full_ms = best_ms(a.repeats, [&] { model.forward(full); });
    double pruned_ms = 0;
    if (st.kept > 0) {
      const Tokens kept = Tokens::from(prune(grid, mask));
      fo.flops = &f_pruned;
      model.forward(kept, fo);
      pruned_ms = best_ms(a.repeats, [&] { model.forward(kept); });
    }
    const double flop_ratio = f_full.attention ? static_cast<double>(f_pruned.attention) / static_cast<double>(f_full.attention) : 0.0;
    const double speedup = pruned_ms > 0 ? full_ms / pruned_ms : 0.0;
    char line[512];
    std::snprintf(line, sizeof line, "%s,%d,%d,%zu,%zu,%.6f,%.6f,%llu,%llu,%.6f,%.3f,%.3f,%.3f\n", name.c_str(),
                  canvas.width(), canvas.height(), st.total, st.kept, st.retained_ratio, st.attention_cost_ratio,
                  static_cast<unsigned long long>(f_full.attention), static_cast<unsigned long long>(f_pruned.attention),
                  flop_ratio, full_ms, pruned_ms, speedup);
    csv << line;
    sum_r += st.retained_ratio;
    sum_cost += st.attention_cost_ratio;
    sum_flop += flop_ratio;
    if (pruned_ms > 0) {
      sum_speed += speedup;
      ++n_speed;
    }
  }
  const double n = static_cast<double>(canvases.size());
  nlohmann::json summary{{"count", canvases.size()},
                         {"tau", a.tau},
                         {"patch_size", a.patch_size},
                         {"mean_retained_ratio", sum_r / n},
                         {"mean_cost_ratio", sum_cost / n},
                         {"mean_attn_flop_ratio", sum_flop / n},
                         {"mean_speedup", n_speed ? nlohmann::json(sum_speed / static_cast<double>(n_speed)) : nlohmann::json(nullptr)}};
  write_text(out / "prune_bench.csv", csv.str());
  write_text(out / "prune_bench_summary.json", summary.dump(2) + "\n");
  std::cout << csv.str() << summary.dump(2) << '\n';
  return kExitOk;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& text, std::size_t steps) {
  if (text.empty()) return {0, steps};
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidConfig, "range must look like s:e");
  try {
    const std::size_t s = colon ? std::stoul(text.substr(0, colon)) : 0;
    const std::size_t e = colon + 1 < text.size() ? std::stoul(text.substr(colon + 1)) : steps;
    return {s, e};
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "range must look like s:e");
  }
}

int cmd_heatmap(const HeatmapArgs& a) {
  const PixelCanvas canvas = read_canvas(a.image);
  const PatchGrid grid = tile(canvas, a.patch_size);
  ToyViTConfig mc;
  mc.embed_dim = a.embed_dim;
  mc.heads = a.heads;
  mc.layers = a.layers;
  mc.patch_size = a.patch_size;
  mc.channels = canvas.channels();
  mc.max_rows = std::max(mc.max_rows, grid.rows());
  mc.max_cols = std::max(mc.max_cols, grid.cols());
  mc.seed = a.seed;
  const ToyViT model(mc);
  Tokens tokens = Tokens::from(grid);
  std::optional<PatchMask> mask;
  if (a.prune) {
    PruneConfig pc;
    pc.variance_threshold = a.tau;
    mask = blank_mask(grid, pc);
    if (mask->retained == 0) throw Error(ErrorCode::EmptyInput, "every patch is blank at this threshold");
    tokens = Tokens::from(prune(grid, *mask));
  }
  ForwardOptions fo;
  fo.trace = TraceLevel::LastLayer;
  const ForwardResult fr = model.forward(tokens, fo);
  const auto [s, e] = parse_range(a.range, fr.trace->steps());
  const Heatmap map = heatmap(*fr.trace, s, e);

  const fs::path out = a.out;
  fs::create_directories(out);
  nlohmann::json j = map.to_json();
  j["range"] = {s, e};
  j["pruned"] = a.prune;
  j["patch_size"] = a.patch_size;
  j["model"] = mc.to_json();
  if (mask) j["mask"] = mask->to_json(a.patch_size);
  write_text(out / "heatmap.json", j.dump(2) + "\n");
  write_file(out / "heatmap.png", encode_png(heatmap_overlay(canvas, map, a.patch_size, a.alpha)));
  if (a.save_trace) write_text(out / "trace.json", fr.trace->to_json().dump() + "\n");
  std::cout << (out / "heatmap.png").string() << ' ' << map.rows << 'x' << map.cols << '\n';
  return kExitOk;
}

harness::RunConfig eval_config(const EvalArgs& a) {
  harness::RunConfig cfg = harness::RunConfig::load(a.config);
  if (!a.dataset.empty()) cfg.dataset = a.dataset;
  if (!a.out.empty()) cfg.out = a.out;
  if (!a.modes.empty()) {
    cfg.modes.clear();
    for (const auto& m : a.modes) cfg.modes.push_back(harness::parse_mode(m));
  }
  if (!a.styles.empty()) {
    cfg.styles.clear();
    for (const auto& s : a.styles) cfg.styles.push_back(harness::parse_style(s));
  }
  if (a.seed) cfg.eval.seed = *a.seed;
  if (a.concurrency) cfg.eval.concurrency = *a.concurrency;
  if (!a.endpoint_url.empty()) {
    cfg.endpoint.kind = "http";
    cfg.endpoint.url = a.endpoint_url;
  }
  if (!a.model.empty()) cfg.endpoint.model = a.model;
  if (a.mock) {
    cfg.endpoint.kind = "mock";
    cfg.endpoint.mock_behavior = "echo";
  }
  if (a.save_assets) cfg.eval.save_assets = true;
  cfg.validate();
  return cfg;
}

int cmd_eval(const EvalArgs& a) {
  const harness::RunConfig cfg = eval_config(a);
  const auto examples = harness::load_dataset(cfg.dataset, cfg.tasks, cfg.eval.seed);
  if (a.dry_run) {
    std::cout << "config ok: " << examples.size() << " examples, " << cfg.modes.size() << " mode(s) x "
              << cfg.styles.size() << " style(s), endpoint " << cfg.endpoint.kind << '\n';
    if (cfg.endpoint.kind == "http" && !cfg.endpoint.api_key_env.empty() && !std::getenv(cfg.endpoint.api_key_env.c_str())) {
      std::cout << "note: " << cfg.endpoint.api_key_env << " is not set\n";
    }
    return kExitOk;
  }
  const auto client = harness::make_client(cfg.endpoint);
  const auto clock = harness::make_clock(cfg.clock);
  const auto result = harness::run_suite(cfg, examples, *client, *clock);
  std::cout << result.comparison.to_markdown();
  std::size_t transport = 0;
  for (const auto& r : result.reports) {
    for (const auto& rec : r.records) transport += rec.status == harness::kStatusTransport;
  }
  if (result.failures() == 0) return kExitOk;
  std::cerr << result.failures() << " of " << result.records() << " records failed\n";
  const std::size_t attempted = result.records();
  return transport == attempted ? kExitTransport : kExitPartial;
}

int cmd_report(const ReportArgs& a) {
  std::vector<harness::RunSummary> runs;
  for (const auto& r : a.reports) {
    const fs::path p = r;
    runs.push_back(harness::read_summary(fs::is_directory(p) ? p / "summary.json" : p));
  }
  const auto table = harness::compare_runs(runs);
  harness::write_comparison(table, a.out);
  std::cout << table.to_markdown();
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::TransportError: return kExitTransport;
    default: return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pixel-perception toolkit: render prompts, prune blank patches, inspect attention, evaluate models"};
  app.require_subcommand(1);

  RenderArgs ra;
  auto* render = app.add_subcommand("render", "Render text, a text file or a JSONL dataset to PNG");
  render->add_option("--text", ra.text, "Text to render");
  render->add_option("--input", ra.input, "Text file or JSONL dataset")->check(CLI::ExistingFile);
  render->add_option("--out", ra.out, "Output directory")->required();
  render->add_option("--name", ra.name, "Output stem for single renders");
  render->add_option("--font-size", ra.spec.font_size)->capture_default_str();
  render->add_option("--padding", ra.spec.padding)->capture_default_str();
  render->add_option("--width-min", ra.spec.width_min)->capture_default_str();
  render->add_option("--width-max", ra.spec.width_max)->capture_default_str();
  render->add_option("--base-height", ra.spec.base_height)->capture_default_str();
  render->add_option("--channels", ra.spec.channels)->capture_default_str();
  render->add_option("--line-spacing", ra.spec.line_spacing)->capture_default_str();
  render->add_flag("--sample-layout", ra.sample_layout, "Draw font size and padding from the seed");
  render->add_option("--seed", ra.seed)->capture_default_str();
  render->add_option("--noise", ra.noise, "none|radial|horizontal|vertical|multi-gaussian|high-freq-gaussian")
      ->capture_default_str();
  render->add_option("--noise-amplitude", ra.noise_amplitude)->capture_default_str();
  render->add_flag("--noise-reverse", ra.noise_reverse);
  render->add_option("--noise-components", ra.noise_components)->capture_default_str();

  PruneArgs pa;
  auto* prune_cmd = app.add_subcommand("prune-bench", "Blank-patch statistics and toy-model latency");
  prune_cmd->add_option("--images", pa.images, "Directory of PNG files")->check(CLI::ExistingDirectory);
  prune_cmd->add_option("--sweep", pa.sweep, "Synthetic inputs: blank, dense or half")->capture_default_str();
  prune_cmd->add_option("--count", pa.count)->capture_default_str();
  prune_cmd->add_option("--ratio", pa.ratio, "Textured fraction for the half sweep")->capture_default_str();
  prune_cmd->add_option("--grid", pa.grid, "Patches per side for the half sweep")->capture_default_str();
  prune_cmd->add_option("--tau", pa.tau)->capture_default_str();
  prune_cmd->add_option("--patch-size", pa.patch_size)->capture_default_str();
  prune_cmd->add_option("--seed", pa.seed)->capture_default_str();
  prune_cmd->add_option("--repeats", pa.repeats)->capture_default_str();
  prune_cmd->add_option("--layers", pa.layers)->capture_default_str();
  prune_cmd->add_option("--embed-dim", pa.embed_dim)->capture_default_str();
  prune_cmd->add_option("--heads", pa.heads)->capture_default_str();
  prune_cmd->add_option("--out", pa.out, "Output directory")->required();

  HeatmapArgs ha;
  auto* heat = app.add_subcommand("heatmap", "Toy-model attention heatmap over a canvas");
  heat->add_option("--image", ha.image, "PNG canvas")->required()->check(CLI::ExistingFile);
  heat->add_option("--seed", ha.seed, "Model seed")->capture_default_str();
  heat->add_option("--range", ha.range, "Query steps s:e (default: all)");
  heat->add_flag("--prune", ha.prune, "Drop blank patches before the forward pass");
  heat->add_option("--tau", ha.tau)->capture_default_str();
  heat->add_option("--patch-size", ha.patch_size)->capture_default_str();
  heat->add_option("--layers", ha.layers)->capture_default_str();
  heat->add_option("--embed-dim", ha.embed_dim)->capture_default_str();
  heat->add_option("--heads", ha.heads)->capture_default_str();
  heat->add_option("--alpha", ha.alpha)->capture_default_str();
  heat->add_flag("--save-trace", ha.save_trace);
  heat->add_option("--out", ha.out, "Output directory")->required();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a dataset against a model endpoint");
  eval->add_option("--config", ea.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--dataset", ea.dataset);
  eval->add_option("--out", ea.out);
  eval->add_option("--mode", ea.modes, "text|peap|semi|peap-fast (repeatable)");
  eval->add_option("--style", ea.styles, "direct|cot (repeatable)");
  eval->add_option("--seed", ea.seed);
  eval->add_option("--concurrency", ea.concurrency);
  eval->add_option("--endpoint-url", ea.endpoint_url);
  eval->add_option("--model", ea.model);
  eval->add_flag("--mock", ea.mock, "Use the local echo endpoint");
  eval->add_flag("--save-assets", ea.save_assets);
  eval->add_flag("--dry-run", ea.dry_run, "Validate the configuration and dataset only");

  ReportArgs rpa;
  auto* report = app.add_subcommand("report", "Comparison tables over finished runs");
  report->add_option("reports", rpa.reports, "Run directories or summary.json files")->required();
  report->add_option("--out", rpa.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*render) return cmd_render(ra);
    if (*prune_cmd) return cmd_prune_bench(pa);
    if (*heat) return cmd_heatmap(ha);
    if (*eval) return cmd_eval(ea);
    if (*report) return cmd_report(rpa);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
