#pragma once

#include <cstdint>
#include <random>

namespace ilms {

/// Independent draw sources inside one trial.
enum class Stream : std::uint64_t {
  Regressor = 1,
  MeasurementNoise = 2,
  LinkNoise = 3,
  Parameter = 4,  // random-unit s0, drawn once per seed
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Derives the seed of substream (trial, node, stream) from a root seed.
/// Every coordinate is folded through splitmix64 so that neighbouring ids
/// land on unrelated engine states.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t trial,
                                    std::uint64_t node, Stream stream) noexcept {
  std::uint64_t h = detail::splitmix64(root);
  h = detail::splitmix64(h ^ detail::splitmix64(trial + 0x1000));
  h = detail::splitmix64(h ^ detail::splitmix64(node + 0x2000));
  h = detail::splitmix64(h ^ detail::splitmix64(static_cast<std::uint64_t>(stream) + 0x3000));
  return h;
}

/// A single-threaded Gaussian source. Copies continue the same sequence.
class RandomState {
 public:
  explicit RandomState(std::uint64_t seed) : engine_(seed) {}

  RandomState(std::uint64_t root, std::uint64_t trial, std::uint64_t node, Stream stream)
      : RandomState(derive_seed(root, trial, node, stream)) {}

  double normal() { return normal_(engine_); }

  double uniform() { return std::generate_canonical<double, 53>(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ilms
