#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nergmm/errors.hpp"
#include "nergmm/synth.hpp"
#include "oracles.hpp"

using namespace nergmm;

namespace {

SynthConfig quiet_config() {
  SynthConfig cfg;
  cfg.n_events = 20;
  cfg.n_stations = 40;
  cfg.min_stations_per_event = 5;
  cfg.max_stations_per_event = 10;
  cfg.truth.tau0 = 0.0;
  cfg.truth.phi0 = 0.0;
  return cfg;
}

}  // namespace

TEST(Synth, NoiselessEqualsBackbone) {
  SynthConfig cfg = SynthConfig::with_preset();
  cfg.n_events = 15;
  cfg.n_stations = 40;
  cfg.min_stations_per_event = 5;
  cfg.max_stations_per_event = 10;
  for (auto& term : cfg.truth.kernels) {
    for (auto& k : term) k.omega = 0.0;
  }
  cfg.truth.tau0 = 0.0;
  cfg.truth.phi0 = 0.0;
  cfg.mu_ca = cfg.coeffs.c7;
  const auto res = generate(cfg);
  EXPECT_EQ(res.truth.reflected_cells, 0u);
  for (const auto& r : res.catalog.records()) {
    EXPECT_NEAR(r.y, f_erg(cfg.coeffs, r), 1e-10);
  }
}

TEST(Synth, SameSeedSameCatalog) {
  SynthConfig cfg = SynthConfig::with_preset();
  cfg.n_events = 10;
  cfg.n_stations = 30;
  cfg.min_stations_per_event = 5;
  cfg.max_stations_per_event = 8;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  ASSERT_EQ(a.catalog.size(), b.catalog.size());
  for (std::size_t k = 0; k < a.catalog.size(); ++k) {
    const auto& ra = a.catalog.records()[k];
    const auto& rb = b.catalog.records()[k];
    EXPECT_EQ(ra.event_id, rb.event_id);
    EXPECT_EQ(ra.station_id, rb.station_id);
    EXPECT_EQ(ra.y, rb.y);
    EXPECT_EQ(ra.mag, rb.mag);
  }
  cfg.seed = 2;
  const auto c = generate(cfg);
  EXPECT_NE(a.catalog.records()[0].y, c.catalog.records()[0].y);
}

TEST(Synth, TruthReconstructsWithin) {
  const SynthConfig cfg = [] {
    SynthConfig c = SynthConfig::with_preset();
    c.n_events = 12;
    c.n_stations = 30;
    c.min_stations_per_event = 5;
    c.max_stations_per_event = 8;
    return c;
  }();
  const auto res = generate(cfg);
  const auto& t = res.truth;
  for (std::size_t k = 0; k < res.catalog.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    const double rest = res.catalog.records()[k].y - t.f_erg(i) - t.dL2L(i) - t.dP2P(i) - t.dS2S(i) -
                        t.event_terms(static_cast<Eigen::Index>(res.catalog.event_index(k)));
    EXPECT_NEAR(rest, t.within(i), 1e-10);
  }
  ASSERT_GT(t.cell_atten.size(), 0);
  EXPECT_LE(t.cell_atten.maxCoeff(), 0.0);
}

TEST(Synth, BetweenEventVariance) {
  SynthConfig cfg = quiet_config();
  cfg.n_events = 10000;
  cfg.n_stations = 20;
  cfg.min_stations_per_event = 1;
  cfg.max_stations_per_event = 1;
  cfg.truth.tau0 = 0.3;
  const auto res = generate(cfg);
  const Eigen::VectorXd& b = res.truth.event_terms;
  const double mean = b.mean();
  const double var = (b.array() - mean).square().sum() / static_cast<double>(b.size() - 1);
  EXPECT_NEAR(var / 0.09, 1.0, 0.05);
}

TEST(Synth, StationsWithinDistanceWindow) {
  SynthConfig cfg = quiet_config();
  cfg.region_width = 200.0;
  cfg.region_height = 200.0;
  cfg.r_max = 150.0;
  cfg.r_min = 10.0;
  const auto res = generate(cfg);
  for (const auto& r : res.catalog.records()) {
    EXPECT_GE(r.r_rup, cfg.r_min);
    EXPECT_LE(r.r_rup, cfg.r_max);
    EXPECT_GE(r.mag, cfg.mag_min);
    EXPECT_LE(r.mag, cfg.mag_max);
  }
}

TEST(Synth, RegionTooSmallThrows) {
  SynthConfig cfg = quiet_config();
  cfg.region_width = 5.0;
  cfg.region_height = 5.0;
  cfg.r_min = 50.0;
  EXPECT_THROW(generate(cfg), ValidationError);
}

TEST(Synth, BadRangesRejected) {
  SynthConfig cfg = quiet_config();
  cfg.mag_min = 7.0;
  cfg.mag_max = 6.0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = quiet_config();
  cfg.min_stations_per_event = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Synth, ExponentialFieldCorrelogram) {
  SynthConfig cfg;
  cfg.n_events = 1;
  cfg.n_stations = 1000;
  cfg.min_stations_per_event = 1000;
  cfg.max_stations_per_event = 1000;
  cfg.region_width = 1500.0;
  cfg.region_height = 1500.0;
  cfg.r_max = 4000.0;
  cfg.spec.terms = {{"site", TermRole::site, DesignColumn::constant, InputKey::t_s,
                     {{KernelKind::exponential, 1.0, 100.0}}, {}}};
  cfg.truth = Hyperparameters::initial(cfg.spec);
  cfg.truth.tau0 = 0.0;
  cfg.truth.phi0 = 0.0;
  double lag = 0.0, zero = 0.0;
  std::size_t pairs = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    cfg.seed = seed;
    const auto res = generate(cfg);
    const Eigen::VectorXd& v = res.truth.term_values[0];
    const auto& xy = res.catalog.station_coords();
    ASSERT_EQ(v.size(), 1000);
    for (std::size_t i = 0; i < xy.size(); ++i) {
      zero += v(static_cast<Eigen::Index>(i)) * v(static_cast<Eigen::Index>(i));
      for (std::size_t j = i + 1; j < xy.size(); ++j) {
        if (std::abs(distance(xy[i], xy[j]) - 100.0) <= 5.0) {
          lag += v(static_cast<Eigen::Index>(i)) * v(static_cast<Eigen::Index>(j));
          ++pairs;
        }
      }
    }
  }
  ASSERT_GT(pairs, 1000u);
  const double rho = (lag / static_cast<double>(pairs)) / (zero / 4000.0);
  EXPECT_NEAR(rho, std::exp(-1.0), 0.1);
}

TEST(OracleCondition, NothingObservedIsUnchanged) {
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd S = oracle::random_spd(4, rng);
  const Eigen::VectorXd m = Eigen::VectorXd::LinSpaced(4, -1.0, 1.0);
  const auto [mean, cov] = oracle_condition(m, S, {}, Eigen::VectorXd());
  EXPECT_TRUE(mean.isApprox(m));
  EXPECT_TRUE(cov.isApprox(S));
}

TEST(OracleCondition, EverythingObservedIsDegenerate) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd S = oracle::random_spd(3, rng);
  const Eigen::VectorXd v(Eigen::Vector3d(0.5, -1.0, 2.0));
  const auto [mean, cov] = oracle_condition(Eigen::VectorXd::Zero(3), S, {2, 0, 1},
                                            Eigen::Vector3d(2.0, 0.5, -1.0));
  EXPECT_TRUE(mean.isApprox(v));
  EXPECT_EQ(cov.cwiseAbs().maxCoeff(), 0.0);
}

TEST(OracleCondition, MatchesPrecisionRoute) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd S = oracle::random_spd(6, rng);
  const Eigen::VectorXd m = Eigen::VectorXd::LinSpaced(6, 0.0, 1.0);
  const std::vector<std::size_t> obs{1, 4, 5};
  const Eigen::Vector3d vals(0.3, -0.2, 1.1);
  const auto [mean, cov] = oracle_condition(m, S, obs, vals);
  const auto [m2, c2] = oracle::condition_via_precision(m, S, obs, vals);
  const std::vector<Eigen::Index> un{0, 2, 3};
  for (std::size_t a = 0; a < un.size(); ++a) {
    EXPECT_NEAR(mean(un[a]), m2(static_cast<Eigen::Index>(a)), 1e-10);
    for (std::size_t b = 0; b < un.size(); ++b) {
      EXPECT_NEAR(cov(un[a], un[b]), c2(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)), 1e-10);
    }
  }
}

TEST(OracleCondition, SingularObservedBlockThrows) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Ones(3, 3);
  EXPECT_THROW(oracle_condition(Eigen::VectorXd::Zero(3), S, {0, 1}, Eigen::Vector2d(0, 0)), NumericalError);
}
