#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nergmm/errors.hpp"
#include "nergmm/kernels.hpp"
#include "nergmm/linalg.hpp"

using namespace nergmm;

namespace {

std::vector<KernelInput> random_points(std::size_t n, std::mt19937_64& rng, double extent = 100.0) {
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<KernelInput> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(Point2{u(rng), u(rng)});
  return out;
}

}  // namespace

TEST(Kernels, Identity) {
  EXPECT_EQ(k_identity(3, 3, 2.0), 4.0);
  EXPECT_EQ(k_identity(3, 4, 2.0), 0.0);
  EXPECT_EQ(k_identity(0, 0, 0.0), 0.0);
}

TEST(Kernels, Group) {
  EXPECT_EQ(k_group(Point2{1, 2}, Point2{1, 2}, 1.0), 1.0);
  EXPECT_EQ(k_group(Point2{0, 0}, Point2{1, 0}, 1.0), 0.0);
  EXPECT_NEAR(k_group(std::int64_t{5}, std::int64_t{5}, 0.3), 0.09, 1e-15);
  // snap tolerance absorbs I/O round-off
  EXPECT_EQ(k_group(Point2{1, 2}, Point2{1 + 5e-10, 2}, 1.0), 1.0);
}

TEST(Kernels, Constant) {
  EXPECT_EQ(k_constant(1.0), 1.0);
  EXPECT_EQ(k_constant(0.0), 0.0);
  EXPECT_EQ(k_constant(0.5), 0.25);
}

TEST(Kernels, Exponential) {
  EXPECT_NEAR(k_exponential(0.0, 0.7, 3.0), 0.49, 1e-15);
  EXPECT_NEAR(k_exponential(3.0, 1.0, 3.0), 0.367879441171, 1e-12);
  EXPECT_NEAR(k_exponential(Point2{0, 0}, Point2{12, 16}, 1.0, 10.0), 0.135335283237, 1e-12);
  EXPECT_THROW(k_exponential(1.0, 1.0, 0.0), HyperparameterError);
  EXPECT_THROW(k_exponential(1.0, 1.0, -2.0), HyperparameterError);
}

TEST(Kernels, SquaredExponential) {
  EXPECT_NEAR(k_squared_exponential(0.0, 1.5, 3.0), 2.25, 1e-15);
  EXPECT_NEAR(k_squared_exponential(3.0, 1.0, 3.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(k_squared_exponential(2.0, 2.0, 1.0), 4.0 * std::exp(-4.0), 1e-15);
  EXPECT_THROW(k_squared_exponential(1.0, 1.0, 0.0), HyperparameterError);
}

TEST(Kernels, SymmetricEvaluation) {
  std::mt19937_64 rng(1);
  const auto pts = random_points(20, rng);
  for (auto kind : {KernelKind::group, KernelKind::constant, KernelKind::exponential,
                    KernelKind::squared_exponential}) {
    Kernel k{kind, 0.8, 15.0};
    for (const auto& a : pts)
      for (const auto& b : pts) EXPECT_EQ(k(a, b), k(b, a));
  }
}

TEST(Kernels, ValidateRejectsBadHyperparameters) {
  EXPECT_THROW((Kernel{KernelKind::group, -0.1, 1.0}.validate()), HyperparameterError);
  EXPECT_THROW((Kernel{KernelKind::exponential, 0.1, 0.0}.validate()), HyperparameterError);
  EXPECT_NO_THROW((Kernel{KernelKind::group, 0.1, 0.0}.validate()));
}

TEST(SumKernels, ExponentialPlusGroup) {
  KernelExpr e{InputSpace::coordinate, {Kernel{KernelKind::exponential, 1.0, 10.0}}};
  KernelExpr g{InputSpace::coordinate, {Kernel{KernelKind::group, 0.5, 0.0}}};
  const auto s = sum_kernels(e, g);
  EXPECT_NEAR(s(Point2{0, 0}, Point2{0, 0}), 1.25, 1e-15);
  EXPECT_NEAR(s(Point2{0, 0}, Point2{10, 0}), std::exp(-1.0), 1e-15);
  const auto ee = sum_kernels(KernelExpr{InputSpace::coordinate, {Kernel{KernelKind::exponential, 1.0, 5.0}}},
                              KernelExpr{InputSpace::coordinate, {Kernel{KernelKind::exponential, 1.0, 5.0}}});
  EXPECT_NEAR(ee(Point2{0, 0}, Point2{3, 4}), 2.0 * std::exp(-1.0), 1e-15);
}

TEST(SumKernels, IncompatibleInputSpaces) {
  KernelExpr ids{InputSpace::index, {Kernel{KernelKind::group, 1.0, 0.0}}};
  KernelExpr xy{InputSpace::coordinate, {Kernel{KernelKind::group, 1.0, 0.0}}};
  EXPECT_THROW(sum_kernels(ids, xy), DimensionError);
  EXPECT_THROW(xy(KernelInput{std::int64_t{1}}, KernelInput{std::int64_t{1}}), DimensionError);
}

TEST(AssembleCov, ConstantTerm) {
  ScaledKernelTerm t{{InputSpace::coordinate, {Kernel{KernelKind::constant, 1.0, 0.0}}},
                     {Point2{0, 0}, Point2{50, 3}},
                     {1.0, 1.0}};
  const Eigen::MatrixXd K = assemble_cov(std::span<const ScaledKernelTerm>(&t, 1));
  EXPECT_TRUE(K.isApprox(Eigen::MatrixXd::Ones(2, 2)));
}

TEST(AssembleCov, IdentityTermIsScaledIdentity) {
  const double phi = 0.55;
  ScaledKernelTerm t;
  t.kernel = {InputSpace::index, {Kernel{KernelKind::identity, phi, 0.0}}};
  for (int k = 0; k < 6; ++k) {
    t.inputs.emplace_back(std::int64_t{3});  // same label everywhere: identity keys on position
    t.design.push_back(1.0);
  }
  const Eigen::MatrixXd K = assemble_cov(std::span<const ScaledKernelTerm>(&t, 1));
  EXPECT_TRUE(K.isApprox(phi * phi * Eigen::MatrixXd::Identity(6, 6)));
}

TEST(AssembleCov, EventBlockPlusIdentityGivesBlockDiagonal) {
  const double tau = 0.4, phi = 0.6;
  std::vector<ScaledKernelTerm> terms(2);
  terms[0].kernel = {InputSpace::index, {Kernel{KernelKind::group, tau, 0.0}}};
  terms[1].kernel = {InputSpace::index, {Kernel{KernelKind::identity, phi, 0.0}}};
  const std::int64_t events[] = {10, 10, 10, 20, 20};
  for (int k = 0; k < 5; ++k) {
    terms[0].inputs.emplace_back(events[k]);
    terms[1].inputs.emplace_back(std::int64_t{k});
    terms[0].design.push_back(1.0);
    terms[1].design.push_back(1.0);
  }
  const Eigen::MatrixXd C = assemble_cov(terms);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      double expected = 0.0;
      if (i == j) expected = tau * tau + phi * phi;
      else if (events[i] == events[j]) expected = tau * tau;
      EXPECT_NEAR(C(i, j), expected, 1e-15) << i << "," << j;
    }
  }
}

TEST(AssembleCov, SingleUnitTermReproducesKernelMatrix) {
  std::mt19937_64 rng(5);
  const auto pts = random_points(15, rng);
  KernelExpr k{InputSpace::coordinate, {Kernel{KernelKind::exponential, 0.7, 20.0}}};
  ScaledKernelTerm t{k, pts, std::vector<double>(pts.size(), 1.0)};
  const Eigen::MatrixXd A = assemble_cov(std::span<const ScaledKernelTerm>(&t, 1));
  const Eigen::MatrixXd B = kernel_matrix(k, pts, pts);
  EXPECT_EQ((A - B).cwiseAbs().maxCoeff(), 0.0);
}

TEST(AssembleCov, DimensionMismatch) {
  ScaledKernelTerm t{{InputSpace::coordinate, {Kernel{KernelKind::constant, 1.0, 0.0}}},
                     {Point2{0, 0}, Point2{1, 1}},
                     {1.0}};
  EXPECT_THROW(assemble_cov(std::span<const ScaledKernelTerm>(&t, 1)), DimensionError);
}

TEST(AssembleCov, SymmetricPsdAndPermutationEquivariant) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 25;
    auto src = random_points(n, rng, 200.0);
    auto site = random_points(n, rng, 200.0);
    src[3] = src[7];  // collocated events
    std::vector<ScaledKernelTerm> terms(3);
    terms[0].kernel = {InputSpace::coordinate, {Kernel{KernelKind::exponential, 0.3, 40.0}}};
    terms[0].inputs = src;
    terms[1].kernel = {InputSpace::coordinate,
                       {Kernel{KernelKind::exponential, 0.4, 25.0}, Kernel{KernelKind::group, 0.2, 0.0}}};
    terms[1].inputs = site;
    terms[2].kernel = {InputSpace::coordinate, {Kernel{KernelKind::squared_exponential, 0.1, 60.0}}};
    terms[2].inputs = site;
    for (auto& t : terms)
      for (std::size_t k = 0; k < n; ++k) t.design.push_back(u(rng));

    const Eigen::MatrixXd K = assemble_cov(terms);
    EXPECT_LE((K - K.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += 1e-8 * K.diagonal().mean();
    EXPECT_EQ(Kj.llt().info(), Eigen::Success);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Eigen::MatrixXd Kp = assemble_cov(terms, perm, perm);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(Kp(i, j), K(perm[i], perm[j]));
  }
}

TEST(AssembleCov, ExponentialLengthScaleLimits) {
  std::mt19937_64 rng(21);
  auto pts = random_points(30, rng, 100.0);
  pts[4] = pts[9];
  const double omega = 0.6;
  auto matrix = [&](KernelKind kind, double ell) {
    return kernel_matrix({InputSpace::coordinate, {Kernel{kind, omega, ell}}}, pts, pts);
  };
  EXPECT_LE((matrix(KernelKind::exponential, 1e-6) - matrix(KernelKind::group, 0.0)).cwiseAbs().maxCoeff(),
            1e-6);
  EXPECT_LE((matrix(KernelKind::exponential, 1e9) - matrix(KernelKind::constant, 0.0)).cwiseAbs().maxCoeff(),
            1e-6);
}

TEST(Linalg, JitteredCholeskyHandlesDuplicates) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Constant(4, 4, 2.0);  // rank one
  const auto ch = jittered_cholesky(K);
  EXPECT_GT(ch.jitter, 0.0);
  const Eigen::MatrixXd L = ch.llt.matrixL();
  EXPECT_LE(((L * L.transpose()) - K).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Linalg, JitteredCholeskyGivesUpOnIndefinite) {
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(3, 3);
  K(2, 2) = -1.0;
  EXPECT_THROW(jittered_cholesky(K), NumericalError);
}

TEST(Linalg, PsdSqrtIsExactForRankDeficient) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  Eigen::MatrixXd A(6, 3);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = z(rng);
  const Eigen::MatrixXd K = A * A.transpose();
  const Eigen::MatrixXd B = psd_sqrt(K);
  EXPECT_LE((B * B.transpose() - K).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(psd_sqrt(Eigen::MatrixXd::Zero(3, 3)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Linalg, RepairPsdClipsNegativeEigenvalues) {
  Eigen::MatrixXd K(2, 2);
  K << 1.0, 1.0 + 1e-9, 1.0 + 1e-9, 1.0;
  const double clipped = repair_psd(K);
  EXPECT_GT(clipped, 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-15);

  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_EQ(repair_psd(I), 0.0);
  EXPECT_TRUE(I.isIdentity());
}
