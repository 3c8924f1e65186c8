#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace srlim {

// SplitMix64: a counter-based 64-bit generator. Its output sequence is fully
// specified by the seed, so splits and initializations are reproducible
// across compilers and platforms (docs/format.md documents the algorithm).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Integer in [0, bound) by the multiply-high method.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  // Double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Fisher-Yates, walking from the back.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Independent stream for a sub-task, derived from a seed and a tag.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t tag) {
    SplitMix64 mixer(seed ^ (tag * 0xd1b54a32d192ed03ULL));
    return SplitMix64(mixer.next());
  }

 private:
  std::uint64_t state_;
};

}  // namespace srlim
