#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peap/canvas.hpp"
#include "peap/harness/dataset.hpp"
#include "peap/kernels.hpp"
#include "peap/noise.hpp"
#include "peap/patchgrid.hpp"
#include "peap/render.hpp"

namespace peap::harness {

inline constexpr std::string_view kImageInstruction = "Please follow the instruction in the image";

// Trailing instruction appended in every mode; Direct and CoT prompts differ
// only here.
std::string_view style_suffix(PromptStyle style, TaskKind kind);

// Task wording as an ordered list of text and table blocks. With inline_ocr
// the pre-extracted text of a native image is appended to the input.
std::vector<DocumentBlock> prompt_blocks(const Example& ex, const TaskSpec& task, bool inline_ocr);
// Text form of the blocks; tables use their pipe-delimited form.
std::string flatten_blocks(const std::vector<DocumentBlock>& blocks);

struct AssetOptions {
  RenderSpec render;
  // Draw font size and padding per example from its seed.
  bool sample_layout = true;
  NoiseSpec noise;
  int patch_size = kDefaultPatchSize;
  PruneConfig prune;
  ExecPolicy policy = ExecPolicy::Parallel;

  void validate() const;
  nlohmann::json to_json() const;
  static AssetOptions from_json(const nlohmann::json& j);
};

struct ImageAsset {
  std::string role;  // "prompt", "table" or "native"
  PixelCanvas canvas;
  std::optional<PatchMask> mask;
};

struct ModalityAssets {
  ModalityMode mode = ModalityMode::Text;
  std::string text;            // text-side task wording (Text and Semi)
  std::string prerender_text;  // full task wording before any rendering
  std::vector<ImageAsset> images;
};

RenderSpec example_render_spec(const Example& ex, const AssetOptions& opts);

// Text: nothing rendered. PEAP/PEAPFast: the whole prompt rendered to one
// page (plus the native image, if any). Semi: table or native image only.
// PEAPFast also attaches the blank-patch mask of each image.
ModalityAssets transfer_modality(const Example& ex, const TaskSpec& task, ModalityMode mode,
                                 const AssetOptions& opts);

struct GenerationSettings {
  double temperature = 0.0;
  int max_tokens = 1024;
};
GenerationSettings default_generation(PromptStyle style);

struct PromptPart {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string text;
  std::vector<std::uint8_t> png;
  int width = 0;
  int height = 0;
  std::optional<PatchMask> mask;
  int patch_size = 0;

  static PromptPart text_part(std::string s);
};

struct PromptPayload {
  std::vector<PromptPart> parts;
  GenerationSettings generation;

  std::string text() const;  // text parts joined by newlines
  std::size_t image_count() const;
  std::string sha256() const;
};

PromptPayload build_prompt(const ModalityAssets& assets, const TaskSpec& task, PromptStyle style,
                           const GenerationSettings& generation, int patch_size = kDefaultPatchSize);

inline constexpr std::string_view kExtractionRulesVersion = "v1";

struct ExtractedAnswer {
  std::string text;
  // 1 answer line, 2 choice label, 3 last number, 4 code block, 5 whole
  // response (free-form tasks)
  int rule = 0;
};

// Throws NoAnswerFound when no rule fires.
ExtractedAnswer extract_answer(std::string_view response, const TaskSpec& task,
                               const std::vector<std::string>& choices = {});

}  // namespace peap::harness
