#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace himforge {

/// Seeded random stream addressed by (master seed, lineage of fork labels).
///
/// Forking derives the child's seed from the master seed and the full label
/// path only, so a child stream never depends on how much of the parent has
/// been consumed and siblings are independent of each other's draw order.
/// A single Rng must be consumed by one worker; parallelism comes from forking.
class Rng {
 public:
  explicit Rng(std::uint64_t master_seed);
  Rng(std::uint64_t master_seed, std::vector<std::string> lineage);

  Rng fork(std::string_view label) const;

  std::uint64_t master_seed() const { return master_seed_; }
  const std::vector<std::string>& lineage() const { return lineage_; }
  /// Lineage joined with '/'; empty for the root stream.
  std::string path() const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0,1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal variate (Box-Muller, second value cached).
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t master_seed_;
  std::vector<std::string> lineage_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Picks an index with probability proportional to `weights`.
std::size_t pick_weighted(Rng& rng, const std::vector<double>& weights);

/// FNV-1a 64-bit digest, used for lineage seeding and content hashes.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace himforge
