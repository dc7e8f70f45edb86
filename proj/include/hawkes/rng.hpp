#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace hawkes {

/// Counter-based generator: the k-th output is a bijective mix of
/// (key, k), where key is derived from (seed, stream). Any (seed, stream)
/// pair reproduces the same sequence regardless of which thread draws it.
/// Satisfies UniformRandomBitGenerator, so std distributions work on it.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double normal() noexcept;
  double exponential(double rate) noexcept;
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t key_;
  std::uint64_t counter_{0};
  bool has_spare_{false};
  double spare_{0.0};
};

[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stream ids: a name (e.g. "fit", "forest"), optionally refined by indices.
[[nodiscard]] std::uint64_t stream_id(std::string_view name) noexcept;
[[nodiscard]] std::uint64_t stream_id(std::uint64_t base, std::uint64_t index) noexcept;
[[nodiscard]] std::uint64_t stream_id(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace hawkes
