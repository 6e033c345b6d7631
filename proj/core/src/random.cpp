#include "mlbn/random.hpp"

namespace mlbn {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

double open_uniform(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    const double u = unit(rng);
    if (u > 0.0 && u < 1.0) return u;
  }
}

}  // namespace mlbn
