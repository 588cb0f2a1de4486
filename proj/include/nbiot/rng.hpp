#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <utility>

namespace nbiot {

// Named sub-streams. Each consumer draws from its own stream so adding
// draws in one place never perturbs another.
enum class Stream : std::uint32_t {
  kPlacement,
  kTraffic,
  kFading,
  kPreambleChoice,
  kSchedulingOrder,
  kExploration,
  kReplaySampling,
  kInit,
};

std::string_view stream_name(Stream s);

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Counter-based stream: draw i of (seed, name, index) is a pure function
// of those four values, independent of platform and standard library.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() : RngStream(0, Stream::kInit) {}
  RngStream(std::uint64_t seed, Stream s, std::uint64_t index = 0)
      : RngStream(seed, stream_name(s), index) {}
  RngStream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0)
      : key_(splitmix64(splitmix64(seed) ^ fnv1a(name)) ^ splitmix64(index * 0xD1B54A32D192ED03ULL + 1)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return at(counter_++); }

  // Random access without advancing the stream.
  result_type at(std::uint64_t i) const { return splitmix64(key_ ^ splitmix64(i)); }

  std::uint64_t position() const { return counter_; }
  void seek(std::uint64_t pos) { counter_ = pos; }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log() argument.
  double uniform_open0() { return 1.0 - uniform(); }

  // Unit-mean exponential.
  double exponential() { return -std::log(uniform_open0()); }

  // Uniform integer in [0, n) by rejection; unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  int below(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Fisher-Yates with the stream's own integer draws (portable ordering).
template <typename T>
void shuffle(std::span<T> v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i)));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace nbiot
