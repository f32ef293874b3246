#include "peap/rng.hpp"

#include "peap/hash.hpp"

namespace peap {

std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
  const std::string digest = sha256_hex(std::to_string(base) + "/" + std::string(label));
  return std::stoull(digest.substr(0, 16), nullptr, 16);
}

}  // namespace peap
