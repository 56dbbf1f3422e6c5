#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace nergmm {

/// Counter-based generator: draw k of stream s under seed is a pure function
/// of (seed, s, k), so separate entities can draw independently and in any
/// order without changing each other's samples.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller; consumes two uniforms per draw).
  double normal() noexcept;
  Eigen::VectorXd normals(Eigen::Index n);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream id for (purpose, entity) pairs.
inline std::uint64_t stream_id(std::uint32_t purpose, std::uint64_t entity) noexcept {
  return (static_cast<std::uint64_t>(purpose) << 40) ^ entity;
}

/// n_draws rows of N(mean, cov) via a pivoted factor of cov. cov must be PSD
/// up to round-off.
Eigen::MatrixXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n_draws,
                           std::uint64_t seed);

}  // namespace nergmm
