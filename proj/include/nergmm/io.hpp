#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nergmm/ergodic.hpp"
#include "nergmm/nerg.hpp"
#include "nergmm/predict.hpp"
#include "nergmm/synth.hpp"
#include "nergmm/types.hpp"

namespace nergmm::io {

inline constexpr const char* kFlatfileHeader = "eqid,ssn,mag,rrup,vs30,eqx,eqy,stax,stay,y";
inline constexpr const char* kBundleMagic = "nergmm-fit-bundle";
inline constexpr int kBundleSchema = 1;
/// Cells per side of the grid laid over the synth region when a model with a
/// path term is configured without a grid.
inline constexpr std::size_t kDefaultGridCells = 15;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Flatfile with the exact header above. Errors name the line and column.
Catalog parse_flatfile(std::istream& in, const std::string& source = "flatfile");
Catalog read_flatfile(const std::string& path);
void write_flatfile(std::ostream& out, const Catalog& catalog);
void write_flatfile(const std::string& path, const Catalog& catalog);

/// Scenario CSV. Required columns: mag, rrup, vs30, eqx, eqy, stax, stay.
/// Optional: scenario_id, eqid, ssn (an empty cell means no id). Column order
/// is free.
struct ScenarioTable {
  std::vector<std::string> labels;  // scenario_id column, or 0-based row numbers
  std::vector<Scenario> scenarios;
};
ScenarioTable parse_scenarios(std::istream& in, const std::string& source = "scenarios");
ScenarioTable read_scenarios(const std::string& path);
void write_scenarios(std::ostream& out, const ScenarioTable& table);

/// Flatfile columns followed by f_erg, dL2L, dP2P, dS2S, dB, dWS per record.
void write_truth(std::ostream& out, const SynthResult& result);
/// Per-cell truth: cell, x, y, c_ca.
void write_cell_truth(std::ostream& out, const CellGrid& grid, const GroundTruth& truth);

struct OutputNames {
  std::string bundle = "model.json";
  std::string report = "report.txt";
  std::string flatfile = "flatfile.csv";
  std::string truth = "truth.csv";
  std::string cell_truth = "cells_truth.csv";
  std::string predictions = "predictions.csv";
  std::string covariance = "covariance.csv";
  std::string draws = "draws.csv";
};

/// JSON run configuration. Unknown keys anywhere are rejected. Build through
/// parse_run_config; "{}" gives the preset model, its synth truth and a grid
/// over the synth region.
struct RunConfig {
  ErgodicCoeffs coeffs = SynthConfig::default_coeffs();  // synth truth; c6, v_ref, saturation seed the fit
  ErgodicFitConfig ergodic;
  ModelSpec spec = ModelSpec::preset();
  std::optional<CellGrid> grid;
  std::optional<double> mu_ca;
  NergFitConfig nerg;
  std::uint64_t seed = 1;
  SynthConfig synth;  // spec, grid, coeffs and seed are copied in from above
  OutputNames outputs;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig read_run_config(const std::string& path);
std::string run_config_json(const RunConfig& config);

/// Everything needed to rebuild a NergFit: training residuals, spec,
/// hyperparameters, grid and coefficients. The factorization is recomputed on
/// load, which reproduces the saved fit exactly.
void save_bundle(std::ostream& out, const NergFit& fit, const std::optional<ErgodicFit>& ergodic = std::nullopt);
void save_bundle(const std::string& path, const NergFit& fit,
                 const std::optional<ErgodicFit>& ergodic = std::nullopt);
NergFit load_bundle(std::istream& in);
NergFit load_bundle(const std::string& path);

/// scenario_id,median_lnY,sd_epistemic,dL2L,dP2P,dS2S,tau0,phi0
void write_predictions(std::ostream& out, const std::vector<std::string>& labels, const GmPrediction& p);
/// Plain CSV of a matrix, optional header row.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& header = {});

}  // namespace nergmm::io
