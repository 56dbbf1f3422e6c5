#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "nergmm/functional_form.hpp"
#include "nergmm/optimize.hpp"
#include "nergmm/types.hpp"

namespace nergmm {

struct ErgodicFitConfig {
  /// c6, v_ref and full_saturation are taken from here; the other
  /// coefficients are profiled out by generalized least squares.
  ErgodicCoeffs start;
  bool estimate_c6 = false;
  double c6_lower = 1.5;
  double c6_upper = 30.0;
  double sd_lower = 1e-4;
  double sd_upper = 10.0;
  double tau_init = 0.5;
  double phi_init = 0.5;
  BoxOptimizerOptions optimizer;
};

struct ErgodicFit {
  ErgodicCoeffs coeffs;
  double tau = 0.0;
  double phi = 0.0;
  double loglik = 0.0;
  Eigen::VectorXd event_terms;  // per dense event index
  Eigen::VectorXd residuals;    // within-event residual per record
  std::vector<std::string> pinned;        // coefficients held at 0: collinear columns, or c7 at its bound
  std::vector<double> trace;              // -loglik at accepted iterates
  int evals = 0;

  /// Structured text summary.
  std::string report() const;
};

struct PartialFit : ErgodicFit {
  double tau0 = 0.0;
  double phi_ss = 0.0;
  double phi_s2s = 0.0;
  Eigen::VectorXd site_terms;             // per dense station index
  Eigen::VectorXd within_site_residuals;  // per record
};

/// Gaussian log-likelihood of y under the ergodic mixed-effects model: per
/// event, C_e = phi^2 I + tau^2 1 1^T. Factored one event block at a time.
double loglik_ergodic(const Catalog& catalog, const ErgodicCoeffs& coeffs, double tau, double phi);

/// Maximum-likelihood fit. Throws OptimizationError when the optimizer runs
/// out of evaluations. A single-event catalog pins tau to its lower bound.
ErgodicFit fit_ergodic(const Catalog& catalog, const ErgodicFitConfig& config = {});

/// Fit with covariance phi_SS^2 I + phi_S2S^2 (same station) + tau0^2 (same event).
PartialFit fit_partial(const Catalog& catalog, const ErgodicFitConfig& config = {});

struct SitePartition {
  std::map<std::int64_t, double> site_terms;  // by station id
  Eigen::VectorXd within_site;                // per record
  double phi_s2s = 0.0;
  double phi_ss = 0.0;
  std::string caveat;
};

/// Splits within-event residuals into shrunk station means and remainders
/// using the given variance components.
SitePartition partition_residuals(const ErgodicFit& fit, const Catalog& catalog, double phi_s2s,
                                  double phi_ss);
/// Same, with variance components estimated by one-way ANOVA moments.
SitePartition partition_residuals(const ErgodicFit& fit, const Catalog& catalog);

}  // namespace nergmm
