#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace dinozaur {

/// Seeded pseudo-random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distributions are implemented here rather than taken from
/// <random> because the standard leaves their algorithms unspecified:
///   uniform(): top 53 bits of one engine draw, scaled by 2^-53, in [0, 1).
///   normal():  Box-Muller cosine branch on two uniform() draws; no cached spare.
/// Sub-streams are derived with SplitMix64 mixing of (seed, stream id), so a
/// single 64-bit seed determines every stream used by a run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent child seed for the given stream id.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

  /// Child generator seeded with derive(seed(), stream).
  Rng fork(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  double uniform();
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// Textual engine state (standard stream format) for checkpointing.
  std::string state() const;
  void set_state(const std::string& state);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace dinozaur
