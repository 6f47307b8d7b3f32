#pragma once

#include <cstdint>

namespace glrc {

/// Counter-based generator: the n-th draw is a pure function of (key, n).
/// Streams derived with split() are independent of how many values the
/// parent has produced, so samplers in different modules stay reproducible
/// from one run seed regardless of call order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  /// Unbiased integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  /// Derive an independent stream. Does not advance this generator.
  Rng split(std::uint64_t stream_id) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter, int);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Well-known stream ids so every module derives the same sub-stream.
namespace streams {
inline constexpr std::uint64_t split = 1;
inline constexpr std::uint64_t teacher_init = 2;
inline constexpr std::uint64_t teacher_sampling = 3;
inline constexpr std::uint64_t student_init = 4;
inline constexpr std::uint64_t student_sampling = 5;
inline constexpr std::uint64_t synthetic = 6;
}  // namespace streams

}  // namespace glrc
