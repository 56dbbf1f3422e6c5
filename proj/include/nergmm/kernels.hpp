#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nergmm/types.hpp"

namespace nergmm {

enum class KernelKind { identity, group, constant, exponential, squared_exponential };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);
bool has_length_scale(KernelKind kind);

/// Distances at or below this are treated as collocated by the group kernel.
inline constexpr double kCollocationTol = 1e-9;

/// A kernel input is either an integer label (event / station id, record
/// position) or a planar coordinate.
using KernelInput = std::variant<std::int64_t, Point2>;

enum class InputSpace { index, coordinate };

InputSpace space_of(const KernelInput& in);

/// |a - b| for labels, L2 norm for coordinates. Throws DimensionError when the
/// inputs live in different spaces.
double input_distance(const KernelInput& a, const KernelInput& b);

// Elementary covariance functions.
double k_identity(std::int64_t k, std::int64_t l, double omega);
double k_group(double dist, double omega);
double k_group(const Point2& a, const Point2& b, double omega);
double k_group(std::int64_t a, std::int64_t b, double omega);
double k_constant(double omega);
double k_exponential(double dist, double omega, double ell);
double k_exponential(const Point2& a, const Point2& b, double omega, double ell);
double k_squared_exponential(double dist, double omega, double ell);
double k_squared_exponential(const Point2& a, const Point2& b, double omega, double ell);

/// Covariance function value object. `ell` is ignored unless the kind has a
/// length scale.
struct Kernel {
  KernelKind kind = KernelKind::constant;
  double omega = 0.0;
  double ell = 1.0;

  /// Throws HyperparameterError on omega < 0 or (where used) ell <= 0.
  void validate() const;

  /// Evaluates on a precomputed distance. `same_position` is only consulted
  /// by the identity kernel.
  double at_distance(double dist, bool same_position) const;

  double operator()(const KernelInput& a, const KernelInput& b) const;

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

/// Sum of kernels sharing one input space.
struct KernelExpr {
  InputSpace space = InputSpace::coordinate;
  std::vector<Kernel> parts;

  KernelExpr() = default;
  KernelExpr(InputSpace s, std::vector<Kernel> p) : space(s), parts(std::move(p)) {}

  double at_distance(double dist, bool same_position) const;
  double operator()(const KernelInput& a, const KernelInput& b) const;

  /// Sum of omega^2 over parts: the prior variance at any single input.
  double variance() const;
};

/// Pointwise sum. Throws DimensionError when the input spaces differ.
KernelExpr sum_kernels(const KernelExpr& a, const KernelExpr& b);

/// One x_i * kappa_i(t_i, t_i') * x_i' contribution to a record covariance.
struct ScaledKernelTerm {
  KernelExpr kernel;
  std::vector<KernelInput> inputs;  // one per record of the universe
  std::vector<double> design;       // one per record of the universe
};

/// K[r, c] = sum_i x_i[rows[r]] kappa_i(t_i[rows[r]], t_i[cols[c]]) x_i[cols[c]].
/// The identity kernel compares universe positions rows[r] == cols[c].
Eigen::MatrixXd assemble_cov(std::span<const ScaledKernelTerm> terms,
                             std::span<const std::size_t> rows,
                             std::span<const std::size_t> cols);

/// Square version over the whole universe.
Eigen::MatrixXd assemble_cov(std::span<const ScaledKernelTerm> terms);

/// Kernel matrix between two input lists.
Eigen::MatrixXd kernel_matrix(const KernelExpr& kernel, std::span<const KernelInput> a,
                              std::span<const KernelInput> b);

}  // namespace nergmm
