#include "distill/rng.hpp"

#include <limits>
#include <stdexcept>

namespace distill {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t key) : key_(key), engine_(splitmix64(key)) {}

RngStream::RngStream(std::uint64_t root_seed, std::string_view purpose)
    : RngStream(splitmix64(splitmix64(root_seed) ^ fnv1a(purpose))) {}

RngStream RngStream::child(std::string_view purpose) const {
  return RngStream(splitmix64(key_ ^ fnv1a(purpose)));
}

RngStream RngStream::child(std::uint64_t index) const {
  return RngStream(splitmix64(key_ + splitmix64(index + 1)));
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t RngStream::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("RngStream::index: empty range");
  // Rejection sampling keeps the draw unbiased and portable.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

std::size_t RngStream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("RngStream::categorical: no mass");
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace distill
