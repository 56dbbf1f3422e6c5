#include <gtest/gtest.h>

#include <cmath>

#include "nergmm/errors.hpp"
#include "nergmm/optimize.hpp"
#include "nergmm/random.hpp"

using namespace nergmm;

TEST(MinimizeBox, Quadratic) {
  auto f = [](const Eigen::VectorXd& x) {
    return (x(0) - 1.0) * (x(0) - 1.0) + 3.0 * (x(1) + 0.5) * (x(1) + 0.5) + x(0) * x(1);
  };
  const auto res = minimize_box(f, Eigen::Vector2d(0, 0), Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5), {});
  // Stationary point of the quadratic: 2(x-1) + y = 0, 6(y+0.5) + x = 0.
  Eigen::Matrix2d A;
  A << 2, 1, 1, 6;
  const Eigen::Vector2d xs = A.lu().solve(Eigen::Vector2d(2, -3));
  EXPECT_NEAR(res.x(0), xs(0), 1e-4);
  EXPECT_NEAR(res.x(1), xs(1), 1e-4);
  EXPECT_FALSE(res.trace.empty());
  for (std::size_t i = 1; i < res.trace.size(); ++i) EXPECT_LE(res.trace[i], res.trace[i - 1]);
}

TEST(MinimizeBox, Rosenbrock) {
  auto f = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1.0 - x(0), 2);
  };
  BoxOptimizerOptions o;
  o.max_evals = 5000;
  const auto res = minimize_box(f, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d(-3, -3), Eigen::Vector2d(3, 3), o);
  EXPECT_NEAR(res.x(0), 1.0, 1e-3);
  EXPECT_NEAR(res.x(1), 1.0, 2e-3);
}

TEST(MinimizeBox, ActiveBound) {
  auto f = [](const Eigen::VectorXd& x) { return std::pow(x(0) + 2.0, 2) + std::pow(x(1) - 0.3, 2); };
  const auto res = minimize_box(f, Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), {});
  EXPECT_NEAR(res.x(0), 0.0, 1e-8);
  EXPECT_NEAR(res.x(1), 0.3, 1e-4);
}

TEST(MinimizeBox, EvaluationCapThrowsWithTrace) {
  auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm() + std::sin(10 * x(0)); };
  BoxOptimizerOptions o;
  o.max_evals = 5;
  try {
    minimize_box(f, Eigen::Vector3d(1, 1, 1), Eigen::Vector3d::Constant(-2), Eigen::Vector3d::Constant(2), o);
    FAIL() << "expected OptimizationError";
  } catch (const OptimizationError& e) {
    EXPECT_FALSE(e.trace().empty());
  }
}

TEST(MinimizeBox, NonFiniteIsRejectedNotFatal) {
  auto f = [](const Eigen::VectorXd& x) {
    if (x(0) > 1.5) return std::numeric_limits<double>::quiet_NaN();
    return std::pow(x(0) - 1.0, 2);
  };
  const auto res = minimize_box(f, Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, -3),
                                Eigen::VectorXd::Constant(1, 3), {});
  EXPECT_NEAR(res.x(0), 1.0, 1e-4);
}

TEST(MinimizeBox, BadBoundsRejected) {
  auto f = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  EXPECT_THROW(minimize_box(f, Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), {}),
               ValidationError);
  EXPECT_THROW(minimize_box(f, Eigen::Vector2d(0, 0), Eigen::Vector3d(0, 0, 0), Eigen::Vector2d(1, 1), {}),
               DimensionError);
}

TEST(CounterRng, PureFunctionOfCounter) {
  CounterRng a(7, stream_id(3, 11));
  CounterRng b(7, stream_id(3, 11));
  CounterRng c(7, stream_id(3, 12));
  for (int i = 0; i < 10; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
  }
}

TEST(CounterRng, NormalMoments) {
  CounterRng r(1, 0);
  const Eigen::VectorXd z = r.normals(200000);
  EXPECT_NEAR(z.mean(), 0.0, 0.01);
  EXPECT_NEAR((z.array() - z.mean()).square().mean(), 1.0, 0.01);
}

TEST(SampleMvn, ZeroCovarianceGivesMean) {
  const Eigen::Vector3d m(1, 2, 3);
  const Eigen::MatrixXd d = sample_mvn(m, Eigen::MatrixXd::Zero(3, 3), 5, 9);
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(d.row(i).transpose().isApprox(Eigen::VectorXd(m)));
}
