#pragma once

// Seeded variate stream for one trajectory.
//
// Stream derivation: trajectory i of an ensemble with base seed B uses
// stream_seed(B, i) = splitmix64(B ^ splitmix64(i + 0x9E3779B97F4A7C15)),
// and the stream itself is std::mt19937_64 seeded with that value. Uniforms
// take the top 53 bits of one engine output, offset by half a step, so every
// variate lies strictly inside (0, 1).

#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ctde {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t index) {
  return splitmix64(base_seed ^ splitmix64(index + 0x9E3779B97F4A7C15ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Replays the given variates in order, then throws std::out_of_range.
  static Rng scripted(std::vector<double> values) {
    Rng rng;
    rng.script_ = std::move(values);
    rng.scripted_ = true;
    return rng;
  }

  double uniform() {
    if (scripted_) {
      if (consumed_ >= script_.size()) throw std::out_of_range("scripted variates exhausted");
      return script_[consumed_++];
    }
    ++consumed_;
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t consumed() const { return consumed_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t consumed_ = 0;
  std::vector<double> script_;
  bool scripted_ = false;
};

}  // namespace ctde
