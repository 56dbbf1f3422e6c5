#include "nergmm/linalg.hpp"

#include <cmath>

#include "nergmm/errors.hpp"
#include "nergmm/log.hpp"

namespace nergmm {

double JitteredCholesky::log_det() const {
  const auto& L = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& K) {
  const Eigen::Index n = K.rows();
  if (K.cols() != n) throw DimensionError("cholesky of a non-square matrix");
  double mean_diag = n > 0 ? K.diagonal().mean() : 0.0;
  if (!(mean_diag > 0.0)) mean_diag = 1.0;

  {
    JitteredCholesky out;
    out.llt.compute(K);
    if (out.llt.info() == Eigen::Success) return out;
  }
  double jitter = 1e-10 * mean_diag;
  for (int attempt = 0; attempt <= 10; ++attempt) {
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    JitteredCholesky out;
    out.llt.compute(Kj);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      if (attempt > 0) log::debug("cholesky needed jitter {:.3e} after {} doublings", jitter, attempt);
      return out;
    }
    jitter *= 2.0;
  }
  throw NumericalError("cholesky failed after exhausting the jitter schedule (n = " +
                       std::to_string(n) + ")");
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& K) {
  const Eigen::Index n = K.rows();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw NumericalError("LDLT factorization failed");
  Eigen::VectorXd d = ldlt.vectorD();
  const double scale = std::max(K.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d(i) < 0.0) {
      if (d(i) < -1e-8 * scale) throw NumericalError("matrix is not positive semi-definite");
      d(i) = 0.0;
    }
  }
  Eigen::MatrixXd L = ldlt.matrixL();
  Eigen::MatrixXd B = L * d.cwiseSqrt().asDiagonal();
  // K = P^T L D L^T P
  return ldlt.transpositionsP().transpose() * B;
}

double repair_psd(Eigen::MatrixXd& K) {
  symmetrize(K);
  if (K.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  const double min_ev = es.eigenvalues().minCoeff();
  if (min_ev >= 0.0) return 0.0;
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  K = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  symmetrize(K);
  log::debug("psd repair clipped eigenvalue of magnitude {:.3e}", -min_ev);
  return -min_ev;
}

}  // namespace nergmm
