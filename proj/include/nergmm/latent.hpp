#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <vector>

namespace nergmm {

/// Observations r ~ N(0, sigma2 I + D S D^T) where the latent vector u ~ N(0, S)
/// is split into independent blocks, S = blockdiag(S_1, ..., S_b).
///
/// All work happens in latent space: with S_b = B_b B_b^T and
/// M = I + B^T D^T D B / sigma2, log|C| = N ln sigma2 + ln|M| and C^{-1}
/// follows from the Woodbury identity. D^T D is formed once per design.
class LatentGaussian {
 public:
  LatentGaussian() = default;
  LatentGaussian(Eigen::SparseMatrix<double> D, std::vector<Eigen::Index> block_sizes);

  /// Factors for block covariances S_b and noise variance sigma2 > 0.
  void factor(const std::vector<Eigen::MatrixXd>& blocks, double sigma2);

  Eigen::Index n_obs() const { return D_.rows(); }
  Eigen::Index n_latent() const { return D_.cols(); }
  const Eigen::SparseMatrix<double>& design() const { return D_; }
  const std::vector<Eigen::Index>& block_sizes() const { return sizes_; }
  const std::vector<Eigen::Index>& block_offsets() const { return offsets_; }
  double sigma2() const { return sigma2_; }

  double log_det() const;
  /// ln N(r; 0, C).
  double loglik(const Eigen::VectorXd& r) const;
  /// C^{-1} V.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& V) const;
  /// U^T C^{-1} V, given DtU = D^T U and DtV = D^T V.
  Eigen::MatrixXd cross(const Eigen::MatrixXd& U, const Eigen::MatrixXd& DtU,
                        const Eigen::MatrixXd& V, const Eigen::MatrixXd& DtV) const;

  /// E[u | r] = S D^T C^{-1} r.
  Eigen::VectorXd latent_mean(const Eigen::VectorXd& r) const;
  /// Cov[u | r] = S - S D^T C^{-1} D S (full, across blocks).
  Eigen::MatrixXd latent_cov() const;

 private:
  Eigen::MatrixXd apply_B(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd apply_Bt(const Eigen::MatrixXd& X) const;

  Eigen::SparseMatrix<double> D_;
  Eigen::MatrixXd P_;  // D^T D
  std::vector<Eigen::Index> sizes_;
  std::vector<Eigen::Index> offsets_;
  std::vector<Eigen::MatrixXd> B_;
  Eigen::LLT<Eigen::MatrixXd> M_;
  double sigma2_ = 1.0;
  bool factored_ = false;
};

}  // namespace nergmm
