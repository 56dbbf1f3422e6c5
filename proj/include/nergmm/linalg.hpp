#pragma once

#include <Eigen/Dense>

namespace nergmm {

/// Cholesky factor of a symmetric matrix. Tried without jitter first; on
/// failure jitter starts at 1e-10 * mean(diag) and doubles at most 10 times.
struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;

  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const { return llt.solve(b); }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return llt.solve(b); }
  double log_det() const;
};

/// Throws NumericalError once the schedule is exhausted.
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& K);

/// B with B * B^T == K for a symmetric PSD K, via pivoted LDL^T. Exact for
/// rank-deficient K; tiny negative pivots from round-off are clipped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& K);

/// Symmetrizes K and, if it has negative eigenvalues, clips them to zero.
/// Returns the largest clipped magnitude (0 when nothing was clipped).
double repair_psd(Eigen::MatrixXd& K);

inline void symmetrize(Eigen::MatrixXd& K) { K = 0.5 * (K + K.transpose()).eval(); }

}  // namespace nergmm
