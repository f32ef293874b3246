#include "peap/harness/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "peap/error.hpp"
#include "peap/hash.hpp"
#include "peap/metrics.hpp"
#include "peap/png.hpp"
#include "peap/rng.hpp"

namespace peap::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

PixelCanvas load_native_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  PixelCanvas canvas = decode_png(bytes);
  canvas.provenance.input_sha256 = sha256_hex(bytes);
  canvas.provenance.spec_sha256 = sha256_hex(std::string_view("native"));
  return canvas;
}

PixelCanvas with_noise(PixelCanvas canvas, const Example& ex, const AssetOptions& opts) {
  if (opts.noise.kind == NoiseKind::None) return canvas;
  NoiseSpec n = opts.noise;
  n.seed = derive_seed(ex.seed, std::string_view("noise"));
  return apply_noise(canvas, n, opts.policy);
}

// Removes markdown emphasis and one level of enclosing brackets.
std::string strip_decoration(std::string s) {
  s = trim(s);
  while (!s.empty() && (s.front() == '*' || s.front() == '`')) s.erase(0, 1);
  while (!s.empty() && (s.back() == '*' || s.back() == '`')) s.pop_back();
  s = trim(s);
  if (s.size() >= 2 && s.front() == '$' && s.back() == '$') s = trim(s.substr(1, s.size() - 2));
  if (s.size() >= 2 && ((s.front() == '(' && s.back() == ')') || (s.front() == '[' && s.back() == ']'))) {
    s = trim(s.substr(1, s.size() - 2));
  }
  return s;
}

// Position of the last whole-word occurrence of any label; longer labels win
// ties so "not_entailment" is preferred over "entailment".
std::optional<std::string> last_label(std::string_view text, const std::vector<std::string>& labels) {
  const std::string hay = lower(text);
  std::optional<std::string> best;
  std::size_t best_pos = 0, best_len = 0;
  for (const auto& label : labels) {
    const std::string needle = lower(trim(label));
    if (needle.empty()) continue;
    for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
      const bool left_ok = pos == 0 || !is_word(hay[pos - 1]);
      const std::size_t end = pos + needle.size();
      const bool right_ok = end == hay.size() || !is_word(hay[end]);
      if (!left_ok || !right_ok) continue;
      if (!best || pos > best_pos || (pos == best_pos && needle.size() > best_len)) {
        best = trim(label);
        best_pos = pos;
        best_len = needle.size();
      }
    }
  }
  return best;
}

std::optional<std::string> last_number(std::string_view text) {
  static const std::regex number(R"([-+]?\d[\d,]*(?:\.\d+)?)");
  std::optional<std::string> out;
  const std::string s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number); it != std::sregex_iterator(); ++it) {
    std::string m = it->str();
    while (!m.empty() && m.back() == ',') m.pop_back();
    out = m;
  }
  return out;
}

std::optional<std::string> last_code_block(std::string_view text) {
  std::optional<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    const auto body = text.find('\n', open);
    if (body == std::string_view::npos) break;
    const auto close = text.find("```", body);
    if (close == std::string_view::npos) break;
    out = std::string(text.substr(body + 1, close - body - 1));
    pos = close + 3;
  }
  return out;
}

}  // namespace

std::string_view style_suffix(PromptStyle style, TaskKind kind) {
  if (kind == TaskKind::Code) {
    return style == PromptStyle::CoT
               ? "Let's think step by step, then give the complete solution in a single fenced code block."
               : "Give the complete solution in a single fenced code block.";
  }
  return style == PromptStyle::CoT
             ? "Let's think step by step, then give the final answer on the last line as \"Answer: <answer>\"."
             : "Give the final answer on the last line as \"Answer: <answer>\".";
}

std::vector<DocumentBlock> prompt_blocks(const Example& ex, const TaskSpec& task, bool inline_ocr) {
  std::string input = ex.input;
  if (inline_ocr && ex.ocr_text && !ex.ocr_text->empty()) {
    input = input.empty() ? *ex.ocr_text : input + "\n\n" + *ex.ocr_text;
  }
  std::string body = task.prompt_template;
  const bool has_table_slot = body.find("{table}") != std::string::npos;
  std::string choices;
  if (!ex.choices.empty()) {
    choices = "Options: ";
    for (std::size_t i = 0; i < ex.choices.size(); ++i) choices += (i ? ", " : "") + ex.choices[i];
  }
  replace_all(body, "{choices}", choices);
  // {input} last so text inside the input is never treated as a slot.
  std::vector<std::string> segments;
  if (has_table_slot) {
    const auto pos = body.find("{table}");
    segments = {body.substr(0, pos), body.substr(pos + 7)};
  } else {
    segments = {body};
  }
  for (auto& seg : segments) replace_all(seg, "{input}", input);

  std::vector<DocumentBlock> blocks;
  auto push_text = [&](const std::string& s) {
    std::string t = trim(s);
    if (!t.empty()) blocks.emplace_back(std::move(t));
  };
  if (!has_table_slot) {
    if (ex.table) blocks.emplace_back(*ex.table);
    push_text(segments[0]);
  } else {
    push_text(segments[0]);
    if (ex.table) blocks.emplace_back(*ex.table);
    push_text(segments[1]);
  }
  return blocks;
}

std::string flatten_blocks(const std::vector<DocumentBlock>& blocks) {
  std::string out;
  for (const auto& b : blocks) {
    if (!out.empty()) out += "\n\n";
    if (const auto* s = std::get_if<std::string>(&b)) out += *s;
    else out += std::get<TableData>(b).to_text();
  }
  return out;
}

void AssetOptions::validate() const {
  render.validate();
  noise.validate();
  prune.validate();
  if (patch_size < 1) throw Error(ErrorCode::InvalidConfig, "patch size must be positive");
}

nlohmann::json AssetOptions::to_json() const {
  return {{"render", render.to_json()},
          {"sample_layout", sample_layout},
          {"noise", noise.to_json()},
          {"patch_size", patch_size},
          {"variance_threshold", prune.variance_threshold},
          {"policy", policy == ExecPolicy::Serial ? "serial" : "parallel"}};
}

AssetOptions AssetOptions::from_json(const nlohmann::json& j) {
  AssetOptions o;
  if (j.contains("render")) o.render = RenderSpec::from_json(j.at("render"));
  o.sample_layout = j.value("sample_layout", o.sample_layout);
  if (j.contains("noise")) o.noise = NoiseSpec::from_json(j.at("noise"));
  o.patch_size = j.value("patch_size", o.patch_size);
  o.prune.variance_threshold = j.value("variance_threshold", o.prune.variance_threshold);
  const std::string policy = j.value("policy", std::string("parallel"));
  if (policy != "serial" && policy != "parallel") throw Error(ErrorCode::InvalidConfig, "policy must be serial or parallel");
  o.policy = policy == "serial" ? ExecPolicy::Serial : ExecPolicy::Parallel;
  o.validate();
  return o;
}

RenderSpec example_render_spec(const Example& ex, const AssetOptions& opts) {
  RenderSpec spec = opts.sample_layout ? RenderSpec::sampled(ex.seed, opts.render) : opts.render;
  spec.seed = ex.seed;
  return spec;
}

ModalityAssets transfer_modality(const Example& ex, const TaskSpec& task, ModalityMode mode,
                                 const AssetOptions& opts) {
  ModalityAssets out;
  out.mode = mode;
  switch (mode) {
    case ModalityMode::Text: {
      if (ex.image_path && !ex.ocr_text) {
        throw Error(ErrorCode::IncompatibleMode, "example '" + ex.id + "' has an image but no extracted text");
      }
      out.text = flatten_blocks(prompt_blocks(ex, task, true));
      out.prerender_text = out.text;
      return out;
    }
    case ModalityMode::PEAP:
    case ModalityMode::PEAPFast: {
      const auto blocks = prompt_blocks(ex, task, false);
      out.prerender_text = flatten_blocks(blocks);
      if (!blocks.empty()) {
        out.images.push_back({"prompt", with_noise(render_document(blocks, example_render_spec(ex, opts)), ex, opts), {}});
      }
      if (ex.image_path) out.images.push_back({"native", load_native_image(*ex.image_path), {}});
      break;
    }
    case ModalityMode::Semi: {
      if (!ex.has_visual()) {
        throw Error(ErrorCode::IncompatibleMode, "semi mode needs a table or image in example '" + ex.id + "'");
      }
      const auto blocks = prompt_blocks(ex, task, false);
      out.prerender_text = flatten_blocks(blocks);
      std::vector<DocumentBlock> text_blocks;
      for (const auto& b : blocks) {
        if (std::holds_alternative<std::string>(b)) text_blocks.push_back(b);
      }
      out.text = flatten_blocks(text_blocks);
      if (ex.table) {
        out.images.push_back({"table", with_noise(render_table(*ex.table, example_render_spec(ex, opts)), ex, opts), {}});
      }
      if (ex.image_path) out.images.push_back({"native", load_native_image(*ex.image_path), {}});
      break;
    }
  }
  if (mode == ModalityMode::PEAPFast) {
    for (auto& img : out.images) img.mask = blank_mask(tile(img.canvas, opts.patch_size), opts.prune, opts.policy);
  }
  return out;
}

GenerationSettings default_generation(PromptStyle style) {
  GenerationSettings g;
  g.max_tokens = style == PromptStyle::CoT ? 2048 : 1024;
  return g;
}

PromptPart PromptPart::text_part(std::string s) {
  PromptPart p;
  p.kind = Kind::Text;
  p.text = std::move(s);
  return p;
}

std::string PromptPayload::text() const {
  std::string out;
  for (const auto& p : parts) {
    if (p.kind != PromptPart::Kind::Text) continue;
    if (!out.empty()) out += '\n';
    out += p.text;
  }
  return out;
}

std::size_t PromptPayload::image_count() const {
  return static_cast<std::size_t>(
      std::count_if(parts.begin(), parts.end(), [](const PromptPart& p) { return p.kind == PromptPart::Kind::Image; }));
}

std::string PromptPayload::sha256() const {
  std::string all = "t=" + std::to_string(generation.temperature) + ";m=" + std::to_string(generation.max_tokens) + ";";
  for (const auto& p : parts) {
    if (p.kind == PromptPart::Kind::Text) {
      all += "T" + std::to_string(p.text.size()) + ":" + p.text;
    } else {
      all += "I" + sha256_hex(p.png);
      if (p.mask) all += "M" + p.mask->to_json(p.patch_size).dump();
    }
  }
  return sha256_hex(all);
}

PromptPayload build_prompt(const ModalityAssets& assets, const TaskSpec& task, PromptStyle style,
                           const GenerationSettings& generation, int patch_size) {
  PromptPayload payload;
  payload.generation = generation;
  auto add_images = [&] {
    for (const auto& img : assets.images) {
      PromptPart p;
      p.kind = PromptPart::Kind::Image;
      p.png = encode_png(img.canvas);
      p.width = img.canvas.width();
      p.height = img.canvas.height();
      p.mask = img.mask;
      p.patch_size = patch_size;
      payload.parts.push_back(std::move(p));
    }
  };
  switch (assets.mode) {
    case ModalityMode::Text:
      payload.parts.push_back(PromptPart::text_part(assets.text));
      break;
    case ModalityMode::PEAP:
    case ModalityMode::PEAPFast:
      payload.parts.push_back(PromptPart::text_part(std::string(kImageInstruction)));
      add_images();
      break;
    case ModalityMode::Semi:
      add_images();
      if (!assets.text.empty()) payload.parts.push_back(PromptPart::text_part(assets.text));
      break;
  }
  payload.parts.push_back(PromptPart::text_part(std::string(style_suffix(style, task.kind))));
  return payload;
}

ExtractedAnswer extract_answer(std::string_view response, const TaskSpec& task, const std::vector<std::string>& choices) {
  const std::string lowered = lower(response);
  auto finish = [&](std::string s, int rule) {
    if (task.kind != TaskKind::Code) s = normalize_answer(s);
    return ExtractedAnswer{std::move(s), rule};
  };

  if (task.kind != TaskKind::Code) {
    const auto pos = lowered.rfind("answer:");
    if (pos != std::string::npos) {
      const auto start = pos + 7;
      const auto eol = response.find('\n', start);
      std::string line = strip_decoration(std::string(response.substr(start, eol == std::string_view::npos ? eol : eol - start)));
      if (!line.empty()) {
        if (task.kind == TaskKind::Classification && !choices.empty()) {
          if (auto label = last_label(line, choices)) {
            // Prefer a label at the start ("(C) 180" -> C) over one later on.
            std::string head = line;
            if (auto sp = head.find_first_of(" \t"); sp != std::string::npos) head = head.substr(0, sp);
            head = strip_decoration(head);
            while (!head.empty() && std::ispunct(static_cast<unsigned char>(head.back()))) head.pop_back();
            for (const auto& c : choices) {
              if (lower(trim(c)) == lower(head)) return finish(trim(c), 1);
            }
            return finish(*label, 1);
          }
        }
        if (task.kind == TaskKind::Math) {
          if (auto num = last_number(line)) return finish(*num, 1);
        }
        return finish(line, 1);
      }
    }
  }
  if (task.kind == TaskKind::Classification && !choices.empty()) {
    if (auto label = last_label(response, choices)) return finish(*label, 2);
  }
  if (task.kind == TaskKind::Math) {
    if (auto num = last_number(response)) return finish(*num, 3);
  }
  if (task.kind == TaskKind::Code) {
    if (auto code = last_code_block(response)) return finish(*code, 4);
  }
  if (task.kind == TaskKind::FreeForm) {
    std::string all = trim(response);
    if (!all.empty()) return finish(all, 5);
  }
  throw Error(ErrorCode::NoAnswerFound, "no rule matched the response");
}

}  // namespace peap::harness
