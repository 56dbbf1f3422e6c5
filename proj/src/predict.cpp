#include "nergmm/predict.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <utility>

#include "nergmm/cell_atten.hpp"
#include "nergmm/errors.hpp"
#include "nergmm/linalg.hpp"
#include "nergmm/log.hpp"
#include "nergmm/random.hpp"

namespace nergmm {

namespace {

void report_repair(Eigen::MatrixXd& M, const char* what) {
  const double clipped = repair_psd(M);
  if (clipped > 0.0) log::debug("{}: clipped eigenvalue of magnitude {:.3e}", what, clipped);
}

// A = k^T K^{-1}
Eigen::MatrixXd transfer(const KernelExpr& kernel, std::span<const KernelInput> support,
                         std::span<const KernelInput> new_inputs, Eigen::MatrixXd& k) {
  const Eigen::MatrixXd K = kernel_matrix(kernel, support, support);
  k = kernel_matrix(kernel, support, new_inputs);
  if (support.empty()) return Eigen::MatrixXd(static_cast<Eigen::Index>(new_inputs.size()), 0);
  const auto ch = jittered_cholesky(K);
  return ch.solve(k).transpose();
}

CoeffPrediction condition_impl(const KernelExpr& kernel, std::span<const KernelInput> support,
                               const Eigen::VectorXd& centered, const Eigen::MatrixXd* cov,
                               std::span<const KernelInput> new_inputs) {
  if (centered.size() != static_cast<Eigen::Index>(support.size())) {
    throw DimensionError("support values do not match the support inputs");
  }
  if (cov && (cov->rows() != centered.size() || cov->cols() != centered.size())) {
    throw DimensionError("support covariance does not match the support inputs");
  }
  Eigen::MatrixXd k;
  const Eigen::MatrixXd A = transfer(kernel, support, new_inputs, k);
  CoeffPrediction out;
  out.mu_star = A * centered;
  out.psi_star = kernel_matrix(kernel, new_inputs, new_inputs) - A * k;
  if (cov) out.psi_star += A * (*cov) * A.transpose();
  report_repair(out.psi_star, "coefficient covariance");
  return out;
}

std::size_t term_index(const NergFit& fit, const std::string& term) {
  const auto i = fit.spec.find(term);
  if (!i) throw ValidationError("model has no term named '" + term + "'");
  return *i;
}

}  // namespace

CoeffPrediction condition_coeffs_fixed(const KernelExpr& kernel, std::span<const KernelInput> support,
                                       const Eigen::VectorXd& values,
                                       std::span<const KernelInput> new_inputs) {
  return condition_impl(kernel, support, values, nullptr, new_inputs);
}

CoeffPrediction condition_coeffs(const KernelExpr& kernel, std::span<const KernelInput> support,
                                 const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                 std::span<const KernelInput> new_inputs) {
  return condition_impl(kernel, support, mean, &cov, new_inputs);
}

CoeffPrediction condition_coeffs_nonzero_mean(const KernelExpr& kernel,
                                              std::span<const KernelInput> support,
                                              const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                              const Eigen::VectorXd& prior_support,
                                              std::span<const KernelInput> new_inputs,
                                              const Eigen::VectorXd& prior_new) {
  if (prior_support.size() != mean.size() ||
      prior_new.size() != static_cast<Eigen::Index>(new_inputs.size())) {
    throw DimensionError("prior means do not match the inputs");
  }
  CoeffPrediction out = condition_impl(kernel, support, mean - prior_support, &cov, new_inputs);
  out.mu_star += prior_new;
  return out;
}

CoeffPrediction predict_coeffs_fixed(const NergFit& fit, const std::string& term,
                                     std::span<const KernelInput> new_inputs) {
  const std::size_t i = term_index(fit, term);
  auto out = condition_coeffs_fixed(fit.hyper.expr(fit.spec, i), fit.terms[i].support,
                                    fit.terms[i].mean, new_inputs);
  out.term = term;
  return out;
}

CoeffPrediction predict_coeffs(const NergFit& fit, const std::string& term,
                               std::span<const KernelInput> new_inputs) {
  const std::size_t i = term_index(fit, term);
  auto out = condition_coeffs(fit.hyper.expr(fit.spec, i), fit.terms[i].support, fit.terms[i].mean,
                              fit.terms[i].cov, new_inputs);
  out.term = term;
  return out;
}

CoeffPrediction predict_coeffs_nonzero_mean(const NergFit& fit, const std::string& term,
                                            std::span<const KernelInput> new_inputs) {
  const std::size_t i = term_index(fit, term);
  const bool cell = fit.spec.terms[i].design == DesignColumn::delta_r;
  const double prior = cell ? fit.data.mu_ca : 0.0;
  const auto m = fit.terms[i].mean.size();
  const Eigen::VectorXd mean_abs = fit.terms[i].mean.array() + prior;
  auto out = condition_coeffs_nonzero_mean(
      fit.hyper.expr(fit.spec, i), fit.terms[i].support, mean_abs, fit.terms[i].cov,
      Eigen::VectorXd::Constant(m, prior), new_inputs,
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(new_inputs.size()), prior));
  out.term = term;
  return out;
}

namespace {

// Per-scenario inputs of every term.
struct ScenarioTerms {
  std::vector<std::vector<KernelInput>> inputs;  // per non-path term
  std::vector<Eigen::VectorXd> design;           // per non-path term
  Eigen::SparseMatrix<double, Eigen::RowMajor> dR;  // scenarios x cells
  Eigen::VectorXd f_erg;
  Eigen::VectorXd prior_mean;
};

ScenarioTerms scenario_terms(const NergFit& fit, std::span<const Scenario> scenarios) {
  const auto ns = static_cast<Eigen::Index>(scenarios.size());
  const Catalog& cat = fit.data.catalog;
  ScenarioTerms st;
  st.f_erg.resize(ns);
  st.prior_mean = Eigen::VectorXd::Zero(ns);
  for (Eigen::Index j = 0; j < ns; ++j) {
    const Scenario& s = scenarios[static_cast<std::size_t>(j)];
    if (!(s.r_rup > 0.0) || !(s.vs30 > 0.0)) {
      throw ValidationError("scenario " + std::to_string(j) + ": r_rup and vs30 must be > 0");
    }
    st.f_erg(j) = f_erg(fit.data.coeffs, s);
  }
  // Ids unknown to the fit become fresh negative labels. Repeated unknown ids
  // share a label; without an id, collocated scenarios share one.
  std::int64_t next_label = -1;
  std::map<std::int64_t, std::int64_t> by_id[2];
  std::map<std::pair<double, double>, std::int64_t> by_xy[2];
  auto label = [&](int kind, const std::optional<std::int64_t>& id, bool known, const Point2& xy) {
    if (id && known) return *id;
    auto& slot = id ? by_id[kind][*id] : by_xy[kind][{xy.x, xy.y}];
    if (slot == 0) slot = next_label--;
    return slot;
  };
  std::vector<std::int64_t> event_labels(static_cast<std::size_t>(ns)), station_labels(static_cast<std::size_t>(ns));
  for (Eigen::Index j = 0; j < ns; ++j) {
    const Scenario& s = scenarios[static_cast<std::size_t>(j)];
    event_labels[static_cast<std::size_t>(j)] =
        label(0, s.event_id, s.event_id && cat.find_event(*s.event_id), s.t_e);
    station_labels[static_cast<std::size_t>(j)] =
        label(1, s.station_id, s.station_id && cat.find_station(*s.station_id), s.t_s);
  }
  st.inputs.resize(fit.spec.terms.size());
  st.design.resize(fit.spec.terms.size());
  for (std::size_t i = 0; i < fit.spec.terms.size(); ++i) {
    const TermSpec& t = fit.spec.terms[i];
    if (t.design == DesignColumn::delta_r) {
      std::vector<Eigen::Triplet<double>> trip;
      for (Eigen::Index j = 0; j < ns; ++j) {
        const Scenario& s = scenarios[static_cast<std::size_t>(j)];
        PathSegments seg;
        try {
          seg = segment_path(*fit.data.grid, s.t_e, s.t_s);
        } catch (const OutOfBoundsError& e) {
          throw OutOfBoundsError("scenario " + std::to_string(j) + ": " + e.what());
        }
        double len = 0.0;
        for (const auto& [c, l] : seg.cells) {
          trip.emplace_back(j, static_cast<Eigen::Index>(c), l);
          len += l;
        }
        st.prior_mean(j) = fit.data.mu_ca * len - fit.data.coeffs.c7 * s.r_rup;
      }
      st.dR.resize(ns, static_cast<Eigen::Index>(fit.data.grid->n_cells()));
      st.dR.setFromTriplets(trip.begin(), trip.end());
      continue;
    }
    st.design[i].resize(ns);
    for (Eigen::Index j = 0; j < ns; ++j) {
      const Scenario& s = scenarios[static_cast<std::size_t>(j)];
      st.design[i](j) = design_value(fit.data.coeffs, t.design, s.r_rup, s.vs30);
      switch (t.input) {
        case InputKey::t_e: st.inputs[i].emplace_back(s.t_e); break;
        case InputKey::t_s: st.inputs[i].emplace_back(s.t_s); break;
        case InputKey::event_id: st.inputs[i].emplace_back(event_labels[static_cast<std::size_t>(j)]); break;
        case InputKey::station_id: st.inputs[i].emplace_back(station_labels[static_cast<std::size_t>(j)]); break;
        case InputKey::t_c: break;
      }
    }
  }
  return st;
}

}  // namespace

GmPrediction predict_gm(const NergFit& fit, std::span<const Scenario> scenarios, GmRoute route) {
  if (scenarios.empty()) throw ValidationError("no scenarios to predict");
  const ScenarioTerms st = scenario_terms(fit, scenarios);
  const auto ns = static_cast<Eigen::Index>(scenarios.size());
  const auto n_terms = fit.spec.terms.size();
  const Eigen::Index m_all = fit.joint_cov.rows();

  GmPrediction out;
  out.f_erg = st.f_erg;
  out.tau0 = fit.hyper.tau0;
  out.phi0 = fit.hyper.phi0;
  out.dL2L = Eigen::VectorXd::Zero(ns);
  out.dP2P = Eigen::VectorXd::Zero(ns);
  out.dS2S = Eigen::VectorXd::Zero(ns);

  // Composition pieces: T maps the joint coefficient posterior to scenarios.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(ns, m_all);
  Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(ns, ns);
  for (std::size_t i = 0; i < n_terms; ++i) {
    const TermSpec& t = fit.spec.terms[i];
    const Eigen::Index off = fit.term_offsets[i];
    const Eigen::Index m = fit.terms[i].mean.size();
    Eigen::VectorXd contrib;
    if (t.design == DesignColumn::delta_r) {
      T.middleCols(off, m) = Eigen::MatrixXd(st.dR);
      contrib = st.dR * fit.terms[i].mean + st.prior_mean;
    } else {
      const KernelExpr kx = fit.hyper.expr(fit.spec, i);
      Eigen::MatrixXd k;
      const Eigen::MatrixXd A = transfer(kx, fit.terms[i].support, st.inputs[i], k);
      const auto X = st.design[i].asDiagonal();
      T.middleCols(off, m) = X * A;
      cond += X * (kernel_matrix(kx, st.inputs[i], st.inputs[i]) - A * k) * X;
      contrib = X * (A * fit.terms[i].mean);
    }
    switch (t.role) {
      case TermRole::source: out.dL2L += contrib; break;
      case TermRole::path: out.dP2P += contrib; break;
      case TermRole::site: out.dS2S += contrib; break;
    }
  }

  if (route == GmRoute::composition) {
    out.median = st.f_erg + out.dL2L + out.dP2P + out.dS2S;
    out.cov = cond + T * fit.joint_cov * T.transpose();
  } else {
    // Cross-covariance between training residuals and scenario medians; no
    // aleatory part crosses over.
    const auto n = static_cast<Eigen::Index>(fit.data.catalog.size());
    Eigen::MatrixXd kf = Eigen::MatrixXd::Zero(n, ns);
    Eigen::MatrixXd Kss = Eigen::MatrixXd::Zero(ns, ns);
    for (std::size_t i = 0; i < n_terms; ++i) {
      const TermSpec& t = fit.spec.terms[i];
      const KernelExpr kx = fit.hyper.expr(fit.spec, i);
      const auto& sup = fit.terms[i].support;
      if (t.design == DesignColumn::delta_r) {
        const Eigen::MatrixXd Kc = kernel_matrix(kx, sup, sup);
        const Eigen::MatrixXd dRs = Eigen::MatrixXd(st.dR);
        const Eigen::MatrixXd KcRt = Kc * dRs.transpose();
        kf += fit.data.dR * KcRt;
        Kss += dRs * KcRt;
      } else {
        const auto X = st.design[i].asDiagonal();
        const Eigen::MatrixXd k = kernel_matrix(kx, sup, st.inputs[i]);
        kf += term_design(fit.data, t) * (k * X);
        Kss += X * kernel_matrix(kx, st.inputs[i], st.inputs[i]) * X;
      }
    }
    out.median = st.f_erg + st.prior_mean + kf.transpose() * fit.alpha;
    out.cov = Kss - kf.transpose() * fit.engine.solve(kf);
  }
  report_repair(out.cov, "ground-motion covariance");
  return out;
}

Eigen::MatrixXd sample_coeff_fields(const CoeffPrediction& prediction, int n_draws, std::uint64_t seed) {
  return sample_mvn(prediction.mu_star, prediction.psi_star, n_draws, seed);
}

Eigen::MatrixXd sample_gm(const GmPrediction& prediction, int n_draws, std::uint64_t seed) {
  return sample_mvn(prediction.median, prediction.cov, n_draws, seed);
}

}  // namespace nergmm
