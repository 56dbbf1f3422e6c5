#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "nergmm/cell_atten.hpp"
#include "nergmm/functional_form.hpp"
#include "nergmm/nerg.hpp"
#include "nergmm/types.hpp"

namespace nergmm {

struct SynthConfig {
  Point2 region_origin{0.0, 0.0};
  double region_width = 300.0;   // km
  double region_height = 300.0;  // km
  std::size_t n_events = 100;
  std::size_t n_stations = 150;
  std::size_t min_stations_per_event = 10;
  std::size_t max_stations_per_event = 30;
  double mag_min = 3.0;
  double mag_max = 7.2;
  double r_min = 1.0;    // km
  double r_max = 400.0;  // km
  double vs30_min = 200.0;
  double vs30_max = 1200.0;

  ErgodicCoeffs coeffs = default_coeffs();
  /// Terms present in the truth and their true hyperparameters. Zero omegas,
  /// tau0 or phi0 are allowed here.
  ModelSpec spec;
  Hyperparameters truth;
  std::optional<CellGrid> grid;  // required with a delta_r term
  std::optional<double> mu_ca;   // defaults to coeffs.c7
  std::uint64_t seed = 1;

  static ErgodicCoeffs default_coeffs();
  /// The preset model with the given truth, and a grid of ~20 km cells over
  /// the region.
  static SynthConfig with_preset();

  void validate() const;
};

struct GroundTruth {
  /// Per term, values over its support (events, stations or cells). For the
  /// cell term: c_ca - mu_ca.
  std::vector<Eigen::VectorXd> term_values;
  Eigen::VectorXd cell_atten;   // absolute c_ca per cell (empty without a path term)
  std::size_t reflected_cells = 0;  // positive draws mirrored below zero
  double mu_ca = 0.0;
  Eigen::VectorXd event_terms;  // delta B0 per dense event
  Eigen::VectorXd within;       // delta WS0 per record
  Eigen::VectorXd f_erg;        // per record
  Eigen::VectorXd dL2L;
  Eigen::VectorXd dP2P;
  Eigen::VectorXd dS2S;
};

struct SynthResult {
  Catalog catalog;
  GroundTruth truth;
};

/// Deterministic for a fixed seed. Every entity draws from its own counter
/// stream. Throws ValidationError when the stations within [r_min, r_max] of
/// an event cannot satisfy min_stations_per_event.
SynthResult generate(const SynthConfig& config);

/// Textbook Gaussian conditioning by a dense linear solve. Returns the mean
/// and covariance of the full vector given x[observed] = values; observed
/// entries come back fixed with zero variance. Throws NumericalError when the
/// observed block is singular.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> oracle_condition(const Eigen::VectorXd& joint_mean,
                                                             const Eigen::MatrixXd& joint_cov,
                                                             const std::vector<std::size_t>& observed,
                                                             const Eigen::VectorXd& values);

}  // namespace nergmm
