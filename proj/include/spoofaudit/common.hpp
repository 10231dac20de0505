#ifndef SPOOFAUDIT_COMMON_HPP
#define SPOOFAUDIT_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spoofaudit {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input: missing files, malformed formats, invalid configs.
struct ValidationError : Error {
  using Error::Error;
};

// A stage prerequisite (model, corpus, annotation) is absent.
struct PrerequisiteError : Error {
  using Error::Error;
};

// FNV-1a 64-bit. Used to derive per-file seeds from (master seed, file_id) so
// regeneration and per-file parallelism stay deterministic.
inline std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view key) {
  std::uint64_t h = stable_hash(key);
  // splitmix-style finalizer over the combined value
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_COMMON_HPP
