#include "nergmm/random.hpp"

#include <cmath>
#include <numbers>

#include "nergmm/errors.hpp"
#include "nergmm/linalg.hpp"

namespace nergmm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(splitmix64(splitmix64(seed) ^ (stream * 0xD1B54A32D192ED03ull))) {}

std::uint64_t CounterRng::next_u64() noexcept {
  return splitmix64(key_ ^ splitmix64(counter_++));
}

double CounterRng::uniform() noexcept {
  // 53 random bits, shifted off zero
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() noexcept {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::VectorXd CounterRng::normals(Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = normal();
  return z;
}

Eigen::MatrixXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n_draws,
                           std::uint64_t seed) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw DimensionError("sample_mvn: covariance does not match the mean");
  }
  if (n_draws < 0) throw ValidationError("sample_mvn: n_draws must be >= 0");
  Eigen::MatrixXd c = cov;
  symmetrize(c);
  Eigen::MatrixXd B;
  try {
    B = psd_sqrt(c);
  } catch (const NumericalError&) {
    repair_psd(c);
    B = psd_sqrt(c);
  }
  Eigen::MatrixXd out(n_draws, mean.size());
  for (int d = 0; d < n_draws; ++d) {
    CounterRng rng(seed, static_cast<std::uint64_t>(d));
    out.row(d) = (mean + B * rng.normals(mean.size())).transpose();
  }
  return out;
}

}  // namespace nergmm
