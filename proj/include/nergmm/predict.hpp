#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nergmm/kernels.hpp"
#include "nergmm/nerg.hpp"
#include "nergmm/types.hpp"

namespace nergmm {

struct CoeffPrediction {
  std::string term;
  Eigen::VectorXd mu_star;
  Eigen::MatrixXd psi_star;
};

// Conditioning on a single term's support, independent of any fit.

/// Coefficients known exactly at the support: mu = k^T K^-1 dc,
/// psi = K* - k^T K^-1 k.
CoeffPrediction condition_coeffs_fixed(const KernelExpr& kernel, std::span<const KernelInput> support,
                                       const Eigen::VectorXd& values,
                                       std::span<const KernelInput> new_inputs);

/// Coefficients known up to a Gaussian posterior N(mean, cov) at the support:
/// mu = k^T K^-1 mean, psi = K* - k^T K^-1 k + (k^T K^-1) cov (k^T K^-1)^T.
CoeffPrediction condition_coeffs(const KernelExpr& kernel, std::span<const KernelInput> support,
                                 const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                 std::span<const KernelInput> new_inputs);

/// As condition_coeffs with prior means: mu = k^T K^-1 (mean - prior) + prior_new.
/// The covariance is not affected by the prior means.
CoeffPrediction condition_coeffs_nonzero_mean(const KernelExpr& kernel,
                                              std::span<const KernelInput> support,
                                              const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                              const Eigen::VectorXd& prior_support,
                                              std::span<const KernelInput> new_inputs,
                                              const Eigen::VectorXd& prior_new);

// Fit-level wrappers. Inputs must live in the term's input space.

CoeffPrediction predict_coeffs_fixed(const NergFit& fit, const std::string& term,
                                     std::span<const KernelInput> new_inputs);
CoeffPrediction predict_coeffs(const NergFit& fit, const std::string& term,
                               std::span<const KernelInput> new_inputs);
/// Uses the term's prior mean (mu_ca for the cell term, 0 otherwise); the
/// returned mean is absolute rather than an adjustment.
CoeffPrediction predict_coeffs_nonzero_mean(const NergFit& fit, const std::string& term,
                                            std::span<const KernelInput> new_inputs);

enum class GmRoute {
  direct,       // condition f* on the observations
  composition,  // push coefficient predictions through the functional form
};

struct GmPrediction {
  Eigen::VectorXd f_erg;
  Eigen::VectorXd median;
  Eigen::MatrixXd cov;  // epistemic
  Eigen::VectorXd dL2L;
  Eigen::VectorXd dP2P;
  Eigen::VectorXd dS2S;
  double tau0 = 0.0;
  double phi0 = 0.0;

  Eigen::VectorXd sd() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Median non-ergodic ground motion and its epistemic covariance. Scenario
/// ids known to the fit reuse the fitted support value of id-keyed terms;
/// unknown ids are new entities: one per distinct unknown id, and without an
/// id one per distinct location.
GmPrediction predict_gm(const NergFit& fit, std::span<const Scenario> scenarios,
                        GmRoute route = GmRoute::direct);

/// n_draws joint samples (rows) of the predicted coefficient field.
Eigen::MatrixXd sample_coeff_fields(const CoeffPrediction& prediction, int n_draws, std::uint64_t seed);
/// n_draws joint samples (rows) of the median ground motion.
Eigen::MatrixXd sample_gm(const GmPrediction& prediction, int n_draws, std::uint64_t seed);

}  // namespace nergmm
