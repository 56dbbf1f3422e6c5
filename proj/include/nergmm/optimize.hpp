#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace nergmm {

struct BoxOptimizerOptions {
  double rho_begin = 0.5;   // initial trust-region radius (variables should be O(1)-scaled)
  double rho_end = 1e-5;    // final radius
  int max_evals = 2000;
  double ftol_rel = 1e-8;   // relative objective change treated as converged
  double ftol_abs = 0.0;    // total gain over five accepted steps treated as converged; 0 disables
};

struct BoxOptimizerResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evals = 0;
  std::vector<double> trace;  // objective at each accepted iterate
};

/// Bound-constrained derivative-free minimization with a quadratic model.
///
/// Each iteration fits a full quadratic to cached evaluations around the
/// current iterate (adding a unisolvent stencil when the cache is too sparse
/// or badly poised), minimizes it over the intersection of the box and an
/// infinity-norm trust region, and updates the radius from the ratio of
/// actual to predicted decrease. Throws OptimizationError when max_evals is
/// exhausted before convergence.
BoxOptimizerResult minimize_box(const std::function<double(const Eigen::VectorXd&)>& f,
                                Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper,
                                const BoxOptimizerOptions& opts = {});

}  // namespace nergmm
