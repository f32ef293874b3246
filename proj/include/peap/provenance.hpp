#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "peap/canvas.hpp"

namespace peap {

// Sidecar form: {"input_sha256": ..., "spec_sha256": ..., "seed": ...}
nlohmann::json provenance_to_json(const Provenance& p);
Provenance provenance_from_json(const nlohmann::json& j);

// Writes <stem>.png and <stem>.json next to each other.
void write_canvas(const std::filesystem::path& png_path, const PixelCanvas& canvas);
PixelCanvas read_canvas(const std::filesystem::path& png_path);

// On-disk canvas store keyed by Provenance::key().
class CanvasCache {
 public:
  explicit CanvasCache(std::filesystem::path dir);

  std::filesystem::path path_for(const Provenance& p) const;
  std::optional<PixelCanvas> find(const Provenance& p) const;
  void store(const PixelCanvas& canvas) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace peap
