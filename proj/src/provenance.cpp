#include "peap/provenance.hpp"

#include <fstream>

#include "peap/error.hpp"
#include "peap/png.hpp"

namespace peap {

nlohmann::json provenance_to_json(const Provenance& p) {
  return {{"input_sha256", p.input_sha256}, {"spec_sha256", p.spec_sha256}, {"seed", p.seed}};
}

Provenance provenance_from_json(const nlohmann::json& j) {
  return {j.at("input_sha256").get<std::string>(), j.at("spec_sha256").get<std::string>(),
          j.at("seed").get<std::uint64_t>()};
}

void write_canvas(const std::filesystem::path& png_path, const PixelCanvas& canvas) {
  write_file(png_path, encode_png(canvas));
  const std::string sidecar = provenance_to_json(canvas.provenance).dump(2) + "\n";
  write_file(std::filesystem::path(png_path).replace_extension(".json"),
             std::span(reinterpret_cast<const std::uint8_t*>(sidecar.data()), sidecar.size()));
}

PixelCanvas read_canvas(const std::filesystem::path& png_path) {
  PixelCanvas canvas = decode_png(read_file(png_path));
  const auto sidecar = std::filesystem::path(png_path).replace_extension(".json");
  if (std::filesystem::exists(sidecar)) {
    std::ifstream in(sidecar);
    try {
      canvas.provenance = provenance_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::CodecError, "bad provenance sidecar " + sidecar.string() + ": " + e.what());
    }
  }
  return canvas;
}

CanvasCache::CanvasCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

std::filesystem::path CanvasCache::path_for(const Provenance& p) const { return dir_ / (p.key() + ".png"); }

std::optional<PixelCanvas> CanvasCache::find(const Provenance& p) const {
  const auto path = path_for(p);
  if (!std::filesystem::exists(path)) return std::nullopt;
  PixelCanvas canvas = read_canvas(path);
  if (!(canvas.provenance == p)) return std::nullopt;
  return canvas;
}

void CanvasCache::store(const PixelCanvas& canvas) const { write_canvas(path_for(canvas.provenance), canvas); }

}  // namespace peap
