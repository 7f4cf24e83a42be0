#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace graphdiff {

// Seeded RNG with cheap stream splitting. Each logical unit of work (graph
// index in a batch, chain index in a sampling run) gets its own child stream,
// so results do not depend on evaluation order or parallel scheduling.
//
// All distributions are sampled by hand from the mt19937_64 word stream; the
// word stream itself is fixed by the standard, so a given seed reproduces the
// same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream derived from (seed, stream_id). Children of distinct
  // ids never share state with the parent or each other.
  Rng child(std::uint64_t stream_id) const;

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform over {0, …, n-1}; n >= 1.
  int uniform_int(int n);

  // Draws an index from an unnormalized nonnegative weight vector.
  // Tiny negative entries (rounding dust) are clamped to zero.
  int categorical(const std::vector<double>& weights);

  long poisson(double lambda);
  double exponential(double rate);
  double normal();

  // Fisher-Yates shuffle.
  void shuffle(std::vector<int>& values);

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace graphdiff
