#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nergmm/cell_atten.hpp"
#include "nergmm/errors.hpp"
#include "oracles.hpp"

using namespace nergmm;

namespace {

CellGrid grid_10km(std::size_t nx = 4, std::size_t ny = 4) {
  CellGrid g;
  g.origin = {0.0, 0.0};
  g.dx = 10.0;
  g.dy = 10.0;
  g.nx = nx;
  g.ny = ny;
  return g;
}

Record rec(std::int64_t eq, std::int64_t st, Point2 te, Point2 ts) {
  Record r;
  r.event_id = eq;
  r.station_id = st;
  r.mag = 5.0;
  r.r_rup = std::max(distance(te, ts), 0.1);
  r.vs30 = 500.0;
  r.t_e = te;
  r.t_s = ts;
  return r;
}

}  // namespace

TEST(SegmentPath, ContainedInOneCell) {
  const auto seg = segment_path(grid_10km(), {2.0, 2.0}, {2.0, 5.0});
  ASSERT_EQ(seg.cells.size(), 1u);
  EXPECT_EQ(seg.cells[0].first, 0u);
  EXPECT_NEAR(seg.cells[0].second, 3.0, 1e-14);
}

TEST(SegmentPath, HorizontalRay) {
  const auto seg = segment_path(grid_10km(), {0.0, 5.0}, {15.0, 5.0});
  ASSERT_EQ(seg.cells.size(), 2u);
  EXPECT_EQ(seg.cells[0].first, 0u);
  EXPECT_NEAR(seg.cells[0].second, 10.0, 1e-12);
  EXPECT_EQ(seg.cells[1].first, 1u);
  EXPECT_NEAR(seg.cells[1].second, 5.0, 1e-12);
}

TEST(SegmentPath, DiagonalRayMatchesDenseSampling) {
  const CellGrid g = grid_10km();
  const Point2 a{1.0, 1.0}, b{19.0, 17.0};
  const auto seg = segment_path(g, a, b);
  const auto ref = oracle::sampled_segments(g, a, b, 1'000'000);
  ASSERT_EQ(seg.cells.size(), ref.size());
  for (const auto& [cell, len] : seg.cells) {
    ASSERT_TRUE(ref.count(cell));
    EXPECT_NEAR(len, ref.at(cell), 1e-4) << "cell " << cell;
  }
  EXPECT_NEAR(seg.total(), distance(a, b), 1e-12);
}

TEST(SegmentPath, CornerCrossingGivesNoZeroLengthPieces) {
  // passes exactly through the shared corner (10, 10)
  const auto seg = segment_path(grid_10km(), {5.0, 5.0}, {15.0, 15.0});
  ASSERT_EQ(seg.cells.size(), 2u);
  EXPECT_EQ(seg.cells[0].first, 0u);
  EXPECT_EQ(seg.cells[1].first, 5u);
  EXPECT_NEAR(seg.cells[0].second, std::sqrt(50.0), 1e-12);
  EXPECT_NEAR(seg.cells[1].second, std::sqrt(50.0), 1e-12);
}

TEST(SegmentPath, RayAlongGridLine) {
  const auto seg = segment_path(grid_10km(), {10.0, 0.0}, {10.0, 25.0});
  EXPECT_NEAR(seg.total(), 25.0, 1e-12);
  for (const auto& [cell, len] : seg.cells) EXPECT_GT(len, 0.0);
}

TEST(SegmentPath, OutOfBounds) {
  EXPECT_THROW(segment_path(grid_10km(), {-1.0, 5.0}, {5.0, 5.0}), OutOfBoundsError);
  EXPECT_THROW(segment_path(grid_10km(), {1.0, 5.0}, {5.0, 40.5}), OutOfBoundsError);
  EXPECT_NO_THROW(segment_path(grid_10km(), {40.0, 40.0}, {0.0, 0.0}));
}

TEST(SegmentPath, SumTranslationAndReversalProperties) {
  std::mt19937_64 rng(99);
  CellGrid g;
  g.origin = {-37.0, 12.5};
  g.dx = 7.3;
  g.dy = 11.1;
  g.nx = 23;
  g.ny = 17;
  std::uniform_real_distribution<double> ux(g.origin.x, g.x_max()), uy(g.origin.y, g.y_max());
  for (int trial = 0; trial < 2000; ++trial) {
    const Point2 a{ux(rng), uy(rng)}, b{ux(rng), uy(rng)};
    const auto seg = segment_path(g, a, b);
    EXPECT_NEAR(seg.total(), distance(a, b), 1e-8);
    for (const auto& [c, len] : seg.cells) EXPECT_GE(len, 0.0);

    const auto rev = segment_path(g, b, a);
    ASSERT_EQ(rev.cells.size(), seg.cells.size());
    for (std::size_t i = 0; i < seg.cells.size(); ++i) {
      EXPECT_EQ(rev.cells[i].first, seg.cells[i].first);
      EXPECT_NEAR(rev.cells[i].second, seg.cells[i].second, 1e-10);
    }

    const Point2 shift{128.0, -64.0};  // exactly representable
    CellGrid gs = g;
    gs.origin = {g.origin.x + shift.x, g.origin.y + shift.y};
    const auto moved = segment_path(gs, {a.x + shift.x, a.y + shift.y}, {b.x + shift.x, b.y + shift.y});
    ASSERT_EQ(moved.cells.size(), seg.cells.size());
    for (std::size_t i = 0; i < seg.cells.size(); ++i) {
      EXPECT_EQ(moved.cells[i].first, seg.cells[i].first);
      EXPECT_NEAR(moved.cells[i].second, seg.cells[i].second, 1e-10);
    }
  }
}

TEST(AssembleDR, RowsMatchSegmentPath) {
  const CellGrid g = grid_10km();
  const Catalog one = validate_catalog({rec(1, 1, {1, 1}, {19, 17})});
  const auto dR = assemble_dR(g, one);
  const auto seg = segment_path(g, {1, 1}, {19, 17});
  ASSERT_EQ(dR.nonZeros(), static_cast<Eigen::Index>(seg.cells.size()));
  for (const auto& [c, len] : seg.cells) EXPECT_EQ(dR.coeff(0, static_cast<Eigen::Index>(c)), len);

  const Catalog two = validate_catalog({rec(1, 1, {1, 1}, {19, 17}), rec(1, 1, {1, 1}, {19, 17})});
  const Eigen::MatrixXd d2 = assemble_dR(g, two);
  EXPECT_EQ((d2.row(0) - d2.row(1)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(AssembleDR, RowSumsEqualPathLengthAndErrorsNameRecord) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  std::vector<Record> recs;
  for (int k = 0; k < 200; ++k) recs.push_back(rec(k % 13, k % 29, {u(rng), u(rng)}, {u(rng), u(rng)}));
  // keep coordinates consistent for repeated ids
  std::map<std::int64_t, Point2> ev, st;
  for (auto& r : recs) {
    r.t_e = ev.try_emplace(r.event_id, r.t_e).first->second;
    r.t_s = st.try_emplace(r.station_id, r.t_s).first->second;
  }
  const Catalog cat = validate_catalog(recs);
  const auto dR = assemble_dR(grid_10km(), cat);
  for (std::size_t k = 0; k < cat.size(); ++k) {
    const double sum = Eigen::VectorXd(dR.row(static_cast<Eigen::Index>(k)).transpose()).sum();
    EXPECT_NEAR(sum, distance(cat.records()[k].t_e, cat.records()[k].t_s), 1e-8);
  }

  const Catalog bad = validate_catalog({rec(1, 1, {1, 1}, {2, 2}), rec(2, 7, {1, 1}, {50, 2})});
  try {
    assemble_dR(grid_10km(), bad);
    FAIL() << "expected out-of-bounds";
  } catch (const OutOfBoundsError& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos);
  }
}

TEST(AssembleDR, CsvExport) {
  const Catalog one = validate_catalog({rec(1, 1, {0, 5}, {20, 5})});
  std::ostringstream os;
  write_dR_csv(os, assemble_dR(grid_10km(), one));
  EXPECT_EQ(os.str(), "record_index,cell_index,length_km\n0,0,10\n0,1,10\n");
}

TEST(FAtten, UniformAndZero) {
  const CellGrid g = grid_10km(20, 1);
  const auto seg = segment_path(g, {0.0, 5.0}, {100.0, 5.0});
  EXPECT_EQ(f_atten(seg, Eigen::VectorXd::Zero(20)), 0.0);
  EXPECT_NEAR(f_atten(seg, Eigen::VectorXd::Constant(20, -0.01)), -1.0, 1e-12);
}

TEST(FAtten, SparseMatchesDenseAndIsLinear) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 50;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::SparseVector<double> s(n);
    Eigen::VectorXd dense = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < n; i += 1 + static_cast<std::size_t>(u(rng) * 6)) {
      const double v = 30.0 * u(rng);
      s.insert(static_cast<Eigen::Index>(i)) = v;
      dense(static_cast<Eigen::Index>(i)) = v;
    }
    Eigen::VectorXd c1 = -0.01 * Eigen::VectorXd::Random(n).cwiseAbs();
    Eigen::VectorXd c2 = 0.01 * Eigen::VectorXd::Random(n);
    EXPECT_NEAR(f_atten(s, c1), dense.dot(c1), 1e-14);
    EXPECT_LE(f_atten(s, c1), 0.0);
    const double w = u(rng);
    EXPECT_NEAR(f_atten(s, w * c1 + (1 - w) * c2), w * f_atten(s, c1) + (1 - w) * f_atten(s, c2), 1e-14);
    Eigen::SparseVector<double> s2 = 0.5 * s;
    EXPECT_NEAR(f_atten(Eigen::SparseVector<double>(w * s + (1 - w) * s2), c1),
                w * f_atten(s, c1) + (1 - w) * f_atten(s2, c1), 1e-14);
  }
  EXPECT_THROW(f_atten(Eigen::SparseVector<double>(3), Eigen::VectorXd::Zero(4)), DimensionError);
}

TEST(AttenPriorCov, KernelShapes) {
  const CellGrid g = grid_10km(3, 2);
  const auto grp = atten_prior_cov(g, {InputSpace::coordinate, {Kernel{KernelKind::group, 0.01, 0.0}}});
  EXPECT_TRUE(grp.isApprox(1e-4 * Eigen::MatrixXd::Identity(6, 6)));

  const auto cst = atten_prior_cov(g, {InputSpace::coordinate, {Kernel{KernelKind::constant, 0.02, 0.0}}});
  EXPECT_TRUE(cst.isApprox(Eigen::MatrixXd::Constant(6, 6, 4e-4)));
  EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(cst).rank(), 1);

  const CellGrid g21 = grid_10km(2, 1);
  const auto ex = atten_prior_cov(g21, {InputSpace::coordinate, {Kernel{KernelKind::exponential, 0.3, 10.0}}});
  EXPECT_NEAR(ex(0, 1), 0.09 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(ex(0, 0), 0.09, 1e-15);
}

TEST(ClampAndReport, Behaviour) {
  Eigen::VectorXd mu(4);
  mu << -0.01, -0.002, 0.0, -0.5;
  auto [same, rep0] = clamp_and_report(mu);
  EXPECT_EQ(same, mu);
  EXPECT_EQ(rep0.count(), 0u);

  mu(1) = 0.001;
  auto [out, rep] = clamp_and_report(mu);
  EXPECT_EQ(out(1), 0.0);
  ASSERT_EQ(rep.count(), 1u);
  EXPECT_EQ(rep.cells[0], 1u);
  EXPECT_EQ(rep.pre_clamp[0], 0.001);
  EXPECT_TRUE(rep.quality_warning);  // 1 of 4 > 5%
}

TEST(GridFile, ParsesKeyValueAndJson) {
  const auto g = parse_grid_text("origin_x = -10\norigin_y = 5.5 # comment\ndx=20\ndy = 25\nnx = 3\nny = 4\n");
  EXPECT_EQ(g.origin.x, -10.0);
  EXPECT_EQ(g.origin.y, 5.5);
  EXPECT_EQ(g.nx, 3u);
  EXPECT_EQ(g.ny, 4u);
  const auto j = parse_grid_text(R"({"origin_x":0,"origin_y":0,"dx":10,"dy":10,"nx":2,"ny":2})");
  EXPECT_EQ(j.n_cells(), 4u);
  EXPECT_THROW(parse_grid_text("origin_x=0\norigin_y=0\ndx=1\ndy=1\nnx=2\n"), ValidationError);
  EXPECT_THROW(parse_grid_text("origin_x=0\norigin_y=0\ndx=1\ndy=1\nnx=2\nny=2\nfoo=1\n"), ValidationError);
  EXPECT_THROW(parse_grid_text("origin_x=0\norigin_y=0\ndx=-1\ndy=1\nnx=2\nny=2\n"), ValidationError);
}
