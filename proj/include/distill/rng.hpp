#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace distill {

/// A named, hierarchically derived random stream.
///
/// Every consumer (context sampling, policy sampling, resets, ...) takes its
/// own child of the root stream, so adding a consumer never shifts the draws
/// seen by the others. Derivation is a pure function of (parent key, label).
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, std::string_view purpose);

  RngStream child(std::string_view purpose) const;
  RngStream child(std::uint64_t index) const;

  /// Identifier of this stream; recorded in trajectories.
  std::uint64_t id() const { return key_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  /// Draws an index with probability proportional to weights.
  std::size_t categorical(std::span<const double> weights);

 private:
  explicit RngStream(std::uint64_t key);

  std::uint64_t key_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view text);

}  // namespace distill
