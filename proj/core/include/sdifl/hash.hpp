#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace sdifl {

// 64-bit FNV-1a. Used for content hashes of weights and configs; stable
// across platforms, unlike std::hash.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes);
  void update(std::string_view text);
  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t v);
std::string hash_text(std::string_view text);

}  // namespace sdifl
