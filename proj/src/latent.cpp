#include "nergmm/latent.hpp"

#include <cmath>
#include <numbers>

#include "nergmm/errors.hpp"
#include "nergmm/linalg.hpp"

namespace nergmm {

LatentGaussian::LatentGaussian(Eigen::SparseMatrix<double> D, std::vector<Eigen::Index> block_sizes)
    : D_(std::move(D)), sizes_(std::move(block_sizes)) {
  Eigen::Index off = 0;
  for (auto s : sizes_) {
    offsets_.push_back(off);
    off += s;
  }
  if (off != D_.cols()) throw DimensionError("latent block sizes do not add up to the design width");
  P_ = Eigen::MatrixXd(D_.transpose() * D_);
}

void LatentGaussian::factor(const std::vector<Eigen::MatrixXd>& blocks, double sigma2) {
  if (blocks.size() != sizes_.size()) throw DimensionError("wrong number of latent blocks");
  if (!(sigma2 > 0.0)) throw NumericalError("latent model needs a positive noise variance");
  B_.resize(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].rows() != sizes_[b] || blocks[b].cols() != sizes_[b]) {
      throw DimensionError("latent block has the wrong size");
    }
    B_[b] = psd_sqrt(blocks[b]);
  }
  sigma2_ = sigma2;
  Eigen::MatrixXd M = apply_Bt(apply_Bt(P_).transpose());  // B^T P B, P symmetric
  M /= sigma2;
  symmetrize(M);
  M.diagonal().array() += 1.0;
  M_.compute(M);
  if (M_.info() != Eigen::Success) throw NumericalError("latent precision factorization failed");
  factored_ = true;
}

Eigen::MatrixXd LatentGaussian::apply_B(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (std::size_t b = 0; b < B_.size(); ++b) {
    out.middleRows(offsets_[b], sizes_[b]).noalias() = B_[b] * X.middleRows(offsets_[b], sizes_[b]);
  }
  return out;
}

Eigen::MatrixXd LatentGaussian::apply_Bt(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (std::size_t b = 0; b < B_.size(); ++b) {
    out.middleRows(offsets_[b], sizes_[b]).noalias() =
        B_[b].transpose() * X.middleRows(offsets_[b], sizes_[b]);
  }
  return out;
}

double LatentGaussian::log_det() const {
  if (!factored_) throw NumericalError("latent model not factored");
  const auto& L = M_.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return static_cast<double>(n_obs()) * std::log(sigma2_) + 2.0 * s;
}

double LatentGaussian::loglik(const Eigen::VectorXd& r) const {
  const Eigen::VectorXd q = D_.transpose() * r;
  const Eigen::VectorXd b = apply_Bt(q);
  const double quad = (r.squaredNorm() - b.dot(M_.solve(b)) / sigma2_) / sigma2_;
  return -0.5 * static_cast<double>(n_obs()) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det() -
         0.5 * quad;
}

Eigen::MatrixXd LatentGaussian::solve(const Eigen::MatrixXd& V) const {
  const Eigen::MatrixXd w = apply_B(M_.solve(apply_Bt(D_.transpose() * V)));
  return (V - D_ * w / sigma2_) / sigma2_;
}

Eigen::MatrixXd LatentGaussian::cross(const Eigen::MatrixXd& U, const Eigen::MatrixXd& DtU,
                                      const Eigen::MatrixXd& V, const Eigen::MatrixXd& DtV) const {
  const Eigen::MatrixXd bu = apply_Bt(DtU);
  const Eigen::MatrixXd bv = apply_Bt(DtV);
  return (U.transpose() * V - bu.transpose() * M_.solve(bv) / sigma2_) / sigma2_;
}

Eigen::VectorXd LatentGaussian::latent_mean(const Eigen::VectorXd& r) const {
  const Eigen::VectorXd b = apply_Bt(D_.transpose() * r);
  return apply_B(M_.solve(b)) / sigma2_;
}

Eigen::MatrixXd LatentGaussian::latent_cov() const {
  // B M^{-1} B^T
  const Eigen::Index m = n_latent();
  Eigen::MatrixXd Bt(m, m);
  Bt.setZero();
  for (std::size_t b = 0; b < B_.size(); ++b) {
    Bt.block(offsets_[b], offsets_[b], sizes_[b], sizes_[b]) = B_[b].transpose();
  }
  Eigen::MatrixXd X = M_.matrixL().solve(Bt);  // L^{-1} B^T
  Eigen::MatrixXd out = X.transpose() * X;
  symmetrize(out);
  return out;
}

}  // namespace nergmm
