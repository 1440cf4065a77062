#include "rie/rng.hpp"

#include <cmath>
#include <numbers>

#include "rie/exec.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rie {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

int g_thread_limit = 0;

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
  return splitmix(splitmix(seed) ^ (key * 0xD6E8FEB86659FD93ULL + 1));
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
  // FNV-1a over the key, then mixed with the seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(seed, h);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::index(std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int thread_count(Exec exec) {
#ifdef _OPENMP
  if (exec == Exec::kSerial) return 1;
  const int n = omp_get_max_threads();
  return g_thread_limit > 0 ? std::min(n, g_thread_limit) : n;
#else
  (void)exec;
  return 1;
#endif
}

void set_thread_limit(int n) { g_thread_limit = n < 0 ? 0 : n; }

}  // namespace rie
