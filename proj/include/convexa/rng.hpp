#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace convexa {

/// splitmix64 finalizer; used to derive independent seeds from labels.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a, stable across platforms (std::hash is not).
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Pseudo-random engine with portable uniform/normal draws. The standard
/// distributions are implementation-defined, so the transforms live here.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

  /// Standard normal via the Marsaglia polar method.
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Reproducible source of randomness identified by (seed, stream_id).
/// Generators are derived per counter, so chunked parallel work produces the
/// same draws regardless of how chunks are scheduled.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Child stream for a numeric task label.
  RngStream substream(std::uint64_t label) const {
    return RngStream(seed_, mix64(stream_id_ ^ mix64(label + 0x632be59bd9b4e019ULL)));
  }
  RngStream substream(std::string_view label) const { return substream(fnv1a(label)); }

  Generator generator(std::uint64_t counter = 0) const {
    return Generator(mix64(mix64(seed_) ^ mix64(stream_id_ + 0x8cb92ba72f3d8dd7ULL) ^ (counter * 0xd1342543de82ef95ULL)));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
};

}  // namespace convexa
