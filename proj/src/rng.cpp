#include "graphdiff/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace graphdiff {

namespace {

// splitmix64: used only to spread seeds, never as the main generator.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), gen_(mix64(seed)) {}

Rng Rng::child(std::uint64_t stream_id) const {
  return Rng(mix64(seed_ ^ mix64(stream_id + 0x632be59bd9b4e019ULL)));
}

std::uint64_t Rng::next_u64() { return gen_(); }

double Rng::uniform() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("uniform: lo > hi");
  return lo + (hi - lo) * uniform();
}

int Rng::uniform_int(int n) {
  if (n < 1) throw std::invalid_argument("uniform_int: n < 1");
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t v;
  do {
    v = gen_();
  } while (v >= limit);
  return static_cast<int>(v % un);
}

int Rng::categorical(const std::vector<double>& weights) {
  if (weights.empty()) throw std::invalid_argument("categorical: empty weights");
  double total = 0.0;
  for (double w : weights) total += (w > 0.0 ? w : 0.0);
  if (total <= 0.0) throw std::invalid_argument("categorical: no positive weight");
  double u = uniform() * total;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i] > 0.0 ? weights[i] : 0.0;
    if (w <= 0.0) continue;
    last_positive = static_cast<int>(i);
    u -= w;
    if (u < 0.0) return last_positive;
  }
  return last_positive;  // rounding tail lands on the last positive entry
}

long Rng::poisson(double lambda) {
  if (lambda < 0.0 || !std::isfinite(lambda))
    throw std::invalid_argument("poisson: bad lambda");
  if (lambda == 0.0) return 0;
  // Additivity split keeps the exact Knuth sampler in its comfortable range.
  if (lambda > 30.0) return poisson(lambda * 0.5) + poisson(lambda - lambda * 0.5);
  const double threshold = std::exp(-lambda);
  long k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform();
  } while (p > threshold);
  return k - 1;
}

double Rng::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate <= 0");
  return -std::log1p(-uniform()) / rate;
}

double Rng::normal() {
  // Box-Muller, one value per draw pair; simple beats fast here.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

void Rng::shuffle(std::vector<int>& values) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const int j = uniform_int(static_cast<int>(i));
    std::swap(values[i - 1], values[static_cast<std::size_t>(j)]);
  }
}

}  // namespace graphdiff
