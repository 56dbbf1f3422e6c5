#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <optional>
#include <string>
#include <vector>

#include "nergmm/cell_atten.hpp"
#include "nergmm/functional_form.hpp"
#include "nergmm/kernels.hpp"
#include "nergmm/latent.hpp"
#include "nergmm/optimize.hpp"
#include "nergmm/types.hpp"

namespace nergmm {

enum class TermRole { source, path, site };
enum class DesignColumn { constant, ln_reff, ln_vs30, delta_r };
enum class InputKey { t_e, t_s, event_id, station_id, t_c };
/// What a term's coefficient vector is indexed by.
enum class Support { event, station, cell };

std::string to_string(TermRole r);
std::string to_string(DesignColumn d);
std::string to_string(InputKey k);
TermRole term_role_from_string(const std::string& s);
DesignColumn design_column_from_string(const std::string& s);
InputKey input_key_from_string(const std::string& s);

struct KernelBounds {
  double omega_lower = 1e-4;
  double omega_upper = 5.0;
  double ell_lower = 1.0;    // km
  double ell_upper = 500.0;  // km

  friend bool operator==(const KernelBounds&, const KernelBounds&) = default;
};

/// One non-ergodic coefficient: x_i * delta c_i(t_i), delta c_i ~ GP(0, sum of kernels).
struct TermSpec {
  std::string name;
  TermRole role = TermRole::site;
  DesignColumn design = DesignColumn::constant;
  InputKey input = InputKey::t_s;
  std::vector<Kernel> kernels;       // starting hyperparameters
  std::vector<KernelBounds> bounds;  // one per kernel; empty means defaults

  Support support() const;
  InputSpace space() const;
  const KernelBounds& bound(std::size_t part) const;

  friend bool operator==(const TermSpec&, const TermSpec&) = default;
};

struct ModelSpec {
  std::vector<TermSpec> terms;
  double tau0_init = 0.3;
  double phi0_init = 0.4;
  double sd_lower = 1e-4;
  double sd_upper = 10.0;

  /// Throws ValidationError: duplicate names, bad kernel/bound values, a
  /// delta_r design not keyed on t_c (or vice versa), more than one delta_r
  /// term, or (unless allow_empty) no terms.
  void validate(bool allow_empty = false) const;
  std::optional<std::size_t> path_term() const;
  std::optional<std::size_t> find(const std::string& name) const;

  /// Source constant (exponential on t_E), site constant (exponential on t_S
  /// plus group on station id) and cell attenuation (exponential plus group
  /// on cell centers).
  static ModelSpec preset();

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct Hyperparameters {
  std::vector<std::vector<Kernel>> kernels;  // per term, parallel to ModelSpec::terms
  double tau0 = 0.0;
  double phi0 = 0.0;

  static Hyperparameters initial(const ModelSpec& spec);
  KernelExpr expr(const ModelSpec& spec, std::size_t term) const;
  /// Throws HyperparameterError when the shape does not match the model spec or a
  /// value is out of range.
  void check(const ModelSpec& spec) const;
  /// Sum of omega^2 over the terms of a role.
  double role_variance(const ModelSpec& spec, TermRole role) const;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

/// Residual data prepared for the non-ergodic model.
struct NergData {
  Catalog catalog;  // y holds ln Y - f_erg
  ErgodicCoeffs coeffs;
  std::optional<CellGrid> grid;
  double mu_ca = 0.0;  // prior mean of cell attenuation
  Eigen::SparseMatrix<double, Eigen::RowMajor> dR;
  Eigen::VectorXd residual;
  /// dR mu_ca - c7 R_rup when the model spec has a path block, else 0.
  Eigen::VectorXd prior_mean;
};

/// mu_ca defaults to coeffs.c7. A grid is required when the model spec has a
/// delta_r term.
NergData prepare_nerg_data(const Catalog& residual_catalog, const ModelSpec& spec,
                           const ErgodicCoeffs& coeffs, const std::optional<CellGrid>& grid,
                           std::optional<double> mu_ca = std::nullopt);

/// Kernel inputs of a term's support points, in dense index order.
std::vector<KernelInput> support_inputs(const NergData& data, const TermSpec& term);
/// records x support matrix: design value at the record's support point.
Eigen::SparseMatrix<double> term_design(const NergData& data, const TermSpec& term);
double design_value(const ErgodicCoeffs& coeffs, DesignColumn d, double r_rup, double vs30);

/// ln N(residual; prior_mean, K_f + phi0^2 I + tau0^2 (same event)).
double marginal_loglik(const NergData& data, const ModelSpec& spec, const Hyperparameters& hyper);

struct NergFitConfig {
  BoxOptimizerOptions optimizer{0.5, 1e-3, 4000, 1e-8, 1e-3};
  /// Scale of the half-Normal penalty on every omega; <= 0 falls back to
  /// ergodic_sigma, then to 1.
  double prior_scale = 0.0;
  /// Total ergodic sd, used for the variance-conservation check.
  double ergodic_sigma = 0.0;
};

struct TermPosterior {
  std::string name;
  std::vector<KernelInput> support;
  Eigen::VectorXd mean;  // zero prior mean; the cell term's offset lives in mu_ca
  Eigen::MatrixXd cov;
};

struct VarianceCheck {
  double ergodic_sigma = 0.0;
  double omega2_eff = 0.0;  // non-ergodic prior variance at the data centroid
  double nerg_sigma = 0.0;  // sqrt(omega2_eff + tau0^2 + phi0^2)
  double rel_diff = 0.0;    // |nerg - ergodic| / ergodic
};

struct NergFit {
  ModelSpec spec;
  Hyperparameters hyper;
  NergData data;

  std::vector<TermPosterior> terms;
  std::vector<Eigen::Index> term_offsets;  // into joint_cov
  Eigen::MatrixXd joint_cov;               // posterior covariance across all terms
  std::optional<CellAttenPosterior> cells;
  ClampReport clamp;

  Eigen::VectorXd event_terms;  // delta B0 per dense event
  Eigen::VectorXd within;       // delta WS0 per record
  double loglik = 0.0;
  double objective = 0.0;  // loglik + log prior penalty
  std::vector<double> trace;
  int evals = 0;
  VarianceCheck variance;

  /// Factored residual covariance; layout: one block per term, then tau0.
  LatentGaussian engine;
  Eigen::VectorXd alpha;  // C^{-1} (residual - prior_mean)

  /// In-sample non-ergodic median minus f_erg, per record.
  Eigen::VectorXd in_sample_effect() const;
  std::string report() const;
};

/// Exact Gaussian posteriors for fixed hyperparameters.
NergFit condition_nerg(const NergData& data, const ModelSpec& spec, const Hyperparameters& hyper);

/// MAP hyperparameters followed by condition_nerg.
NergFit fit_nerg(const NergData& data, const ModelSpec& spec, const NergFitConfig& config = {});

VarianceCheck variance_check(const NergFit& fit, double ergodic_sigma);

struct Decomposition {
  double dL2L = 0.0;
  double dP2P = 0.0;
  double dS2S = 0.0;
};

/// Role sums of posterior means for training record k. Without a path term
/// dP2P is reported as 0.
Decomposition decompose(const NergFit& fit, std::size_t record);
/// Same for a record given by value; its event and station must be known to
/// the fit, otherwise ValidationError.
Decomposition decompose(const NergFit& fit, const Record& record);

}  // namespace nergmm
