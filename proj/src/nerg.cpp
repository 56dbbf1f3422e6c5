#include "nergmm/nerg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "nergmm/errors.hpp"
#include "nergmm/linalg.hpp"
#include "nergmm/log.hpp"

namespace nergmm {

std::string to_string(TermRole r) {
  switch (r) {
    case TermRole::source: return "source";
    case TermRole::path: return "path";
    case TermRole::site: return "site";
  }
  return "?";
}

std::string to_string(DesignColumn d) {
  switch (d) {
    case DesignColumn::constant: return "constant";
    case DesignColumn::ln_reff: return "ln_reff";
    case DesignColumn::ln_vs30: return "ln_vs30";
    case DesignColumn::delta_r: return "delta_r";
  }
  return "?";
}

std::string to_string(InputKey k) {
  switch (k) {
    case InputKey::t_e: return "t_e";
    case InputKey::t_s: return "t_s";
    case InputKey::event_id: return "event_id";
    case InputKey::station_id: return "station_id";
    case InputKey::t_c: return "t_c";
  }
  return "?";
}

TermRole term_role_from_string(const std::string& s) {
  if (s == "source") return TermRole::source;
  if (s == "path") return TermRole::path;
  if (s == "site") return TermRole::site;
  throw ValidationError("unknown term role '" + s + "'");
}

DesignColumn design_column_from_string(const std::string& s) {
  if (s == "constant") return DesignColumn::constant;
  if (s == "ln_reff") return DesignColumn::ln_reff;
  if (s == "ln_vs30") return DesignColumn::ln_vs30;
  if (s == "delta_r") return DesignColumn::delta_r;
  throw ValidationError("unknown design column '" + s + "'");
}

InputKey input_key_from_string(const std::string& s) {
  if (s == "t_e") return InputKey::t_e;
  if (s == "t_s") return InputKey::t_s;
  if (s == "event_id") return InputKey::event_id;
  if (s == "station_id") return InputKey::station_id;
  if (s == "t_c") return InputKey::t_c;
  throw ValidationError("unknown input key '" + s + "'");
}

Support TermSpec::support() const {
  switch (input) {
    case InputKey::t_e:
    case InputKey::event_id: return Support::event;
    case InputKey::t_s:
    case InputKey::station_id: return Support::station;
    case InputKey::t_c: return Support::cell;
  }
  return Support::event;
}

InputSpace TermSpec::space() const {
  return (input == InputKey::event_id || input == InputKey::station_id) ? InputSpace::index
                                                                        : InputSpace::coordinate;
}

const KernelBounds& TermSpec::bound(std::size_t part) const {
  static const KernelBounds defaults{};
  return bounds.empty() ? defaults : bounds.at(part);
}

void ModelSpec::validate(bool allow_empty) const {
  if (terms.empty() && !allow_empty) throw ValidationError("model spec needs at least one term");
  std::set<std::string> names;
  int n_path = 0;
  for (const auto& t : terms) {
    if (t.name.empty()) throw ValidationError("model term with an empty name");
    if (!names.insert(t.name).second) throw ValidationError("duplicate model term '" + t.name + "'");
    if (t.kernels.empty()) throw ValidationError("term '" + t.name + "' has no kernel");
    if (!t.bounds.empty() && t.bounds.size() != t.kernels.size()) {
      throw ValidationError("term '" + t.name + "' needs one bounds entry per kernel");
    }
    if ((t.design == DesignColumn::delta_r) != (t.input == InputKey::t_c)) {
      throw ValidationError("term '" + t.name + "': the delta_r design goes with the t_c input only");
    }
    if (t.design == DesignColumn::delta_r) ++n_path;
    for (std::size_t p = 0; p < t.kernels.size(); ++p) {
      const Kernel& k = t.kernels[p];
      try {
        k.validate();
      } catch (const HyperparameterError& e) {
        throw ValidationError("term '" + t.name + "': " + e.what());
      }
      const KernelBounds& b = t.bound(p);
      if (!(b.omega_lower > 0.0 && b.omega_lower < b.omega_upper)) {
        throw ValidationError("term '" + t.name + "': need 0 < omega_lower < omega_upper");
      }
      if (has_length_scale(k.kind) && !(b.ell_lower > 0.0 && b.ell_lower < b.ell_upper)) {
        throw ValidationError("term '" + t.name + "': need 0 < ell_lower < ell_upper");
      }
    }
  }
  if (n_path > 1) throw ValidationError("the delta_r term may appear at most once");
  if (!(sd_lower > 0.0 && sd_lower < sd_upper)) throw ValidationError("need 0 < sd_lower < sd_upper");
  if (!(tau0_init > 0.0) || !(phi0_init > 0.0)) throw ValidationError("tau0/phi0 starting values must be > 0");
}

std::optional<std::size_t> ModelSpec::path_term() const {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].design == DesignColumn::delta_r) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> ModelSpec::find(const std::string& name) const {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].name == name) return i;
  }
  return std::nullopt;
}

ModelSpec ModelSpec::preset() {
  ModelSpec s;
  s.terms.push_back({"dc1_E", TermRole::source, DesignColumn::constant, InputKey::t_e,
                     {{KernelKind::exponential, 0.3, 50.0}}, {}});
  s.terms.push_back({"dc1a_S", TermRole::site, DesignColumn::constant, InputKey::t_s,
                     {{KernelKind::exponential, 0.3, 30.0}}, {}});
  s.terms.push_back({"dc1b_S", TermRole::site, DesignColumn::constant, InputKey::station_id,
                     {{KernelKind::group, 0.2, 1.0}}, {}});
  KernelBounds cell_b{1e-6, 0.1, 1.0, 500.0};
  s.terms.push_back({"c_ca_P", TermRole::path, DesignColumn::delta_r, InputKey::t_c,
                     {{KernelKind::exponential, 0.002, 50.0}, {KernelKind::group, 0.001, 1.0}},
                     {cell_b, cell_b}});
  return s;
}

Hyperparameters Hyperparameters::initial(const ModelSpec& spec) {
  Hyperparameters h;
  for (const auto& t : spec.terms) h.kernels.push_back(t.kernels);
  h.tau0 = spec.tau0_init;
  h.phi0 = spec.phi0_init;
  return h;
}

KernelExpr Hyperparameters::expr(const ModelSpec& spec, std::size_t term) const {
  return KernelExpr(spec.terms.at(term).space(), kernels.at(term));
}

void Hyperparameters::check(const ModelSpec& spec) const {
  if (kernels.size() != spec.terms.size()) {
    throw HyperparameterError("hyperparameters do not match the model terms");
  }
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (kernels[i].size() != spec.terms[i].kernels.size()) {
      throw HyperparameterError("hyperparameters of term '" + spec.terms[i].name +
                                "' do not match its kernels");
    }
    for (std::size_t p = 0; p < kernels[i].size(); ++p) {
      if (kernels[i][p].kind != spec.terms[i].kernels[p].kind) {
        throw HyperparameterError("kernel kind mismatch in term '" + spec.terms[i].name + "'");
      }
      kernels[i][p].validate();
    }
  }
  if (!(tau0 >= 0.0) || !(phi0 > 0.0) || !std::isfinite(tau0) || !std::isfinite(phi0)) {
    throw HyperparameterError("need tau0 >= 0 and phi0 > 0");
  }
}

double Hyperparameters::role_variance(const ModelSpec& spec, TermRole role) const {
  double v = 0.0;
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    if (spec.terms[i].role != role) continue;
    for (const auto& k : kernels.at(i)) v += k.omega * k.omega;
  }
  return v;
}

double design_value(const ErgodicCoeffs& coeffs, DesignColumn d, double r_rup, double vs30) {
  switch (d) {
    case DesignColumn::constant: return 1.0;
    case DesignColumn::ln_reff: return ln_reff(coeffs, r_rup);
    case DesignColumn::ln_vs30: return ln_vs30_ratio(coeffs, vs30);
    case DesignColumn::delta_r: break;
  }
  throw ValidationError("delta_r has no scalar design value");
}

NergData prepare_nerg_data(const Catalog& residual_catalog, const ModelSpec& spec,
                           const ErgodicCoeffs& coeffs, const std::optional<CellGrid>& grid,
                           std::optional<double> mu_ca) {
  spec.validate(true);
  NergData d;
  d.catalog = residual_catalog;
  d.coeffs = coeffs;
  d.grid = grid;
  d.mu_ca = mu_ca.value_or(coeffs.c7);
  const auto n = static_cast<Eigen::Index>(residual_catalog.size());
  d.residual.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) d.residual(k) = residual_catalog.records()[static_cast<std::size_t>(k)].y;
  d.prior_mean = Eigen::VectorXd::Zero(n);
  if (spec.path_term()) {
    if (!grid) throw ValidationError("the model has a cell-attenuation term but no cell grid was given");
    d.dR = assemble_dR(*grid, residual_catalog);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(grid->n_cells()));
    d.prior_mean = d.dR * ones * d.mu_ca;
    for (Eigen::Index k = 0; k < n; ++k) {
      d.prior_mean(k) -= coeffs.c7 * residual_catalog.records()[static_cast<std::size_t>(k)].r_rup;
    }
  }
  return d;
}

std::vector<KernelInput> support_inputs(const NergData& data, const TermSpec& term) {
  std::vector<KernelInput> out;
  const Catalog& c = data.catalog;
  switch (term.input) {
    case InputKey::t_e:
      for (const auto& p : c.event_coords()) out.emplace_back(p);
      break;
    case InputKey::t_s:
      for (const auto& p : c.station_coords()) out.emplace_back(p);
      break;
    case InputKey::event_id:
      for (std::size_t e = 0; e < c.n_events(); ++e) out.emplace_back(c.event_id(e));
      break;
    case InputKey::station_id:
      for (std::size_t s = 0; s < c.n_stations(); ++s) out.emplace_back(c.station_id(s));
      break;
    case InputKey::t_c:
      if (!data.grid) throw ValidationError("term '" + term.name + "' needs a cell grid");
      for (const auto& p : data.grid->centers()) out.emplace_back(p);
      break;
  }
  return out;
}

namespace {

Eigen::SparseMatrix<double> support_design(const NergData& data, Support support, DesignColumn design) {
  const Catalog& c = data.catalog;
  const auto n = static_cast<Eigen::Index>(c.size());
  if (design == DesignColumn::delta_r) return Eigen::SparseMatrix<double>(data.dR);
  const std::size_t m = support == Support::event ? c.n_events()
                        : support == Support::station ? c.n_stations()
                                                      : (data.grid ? data.grid->n_cells() : 0);
  if (support == Support::cell) throw ValidationError("cell support requires the delta_r design");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const Record& r = c.records()[static_cast<std::size_t>(k)];
    const std::size_t col = support == Support::event ? c.event_index(static_cast<std::size_t>(k))
                                                      : c.station_index(static_cast<std::size_t>(k));
    trip.emplace_back(k, static_cast<Eigen::Index>(col), design_value(data.coeffs, design, r.r_rup, r.vs30));
  }
  Eigen::SparseMatrix<double> D(n, static_cast<Eigen::Index>(m));
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

// A latent block: one or more terms sharing support and design, plus
// optionally the between-event term.
struct Group {
  Support support;
  DesignColumn design;
  std::vector<std::size_t> terms;
  bool tau0 = false;
};

struct Engine {
  std::vector<Group> groups;
  std::vector<std::vector<KernelInput>> inputs;  // per term
  LatentGaussian lg;
};

Engine build_engine(const NergData& data, const ModelSpec& spec, bool merge) {
  Engine e;
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    const TermSpec& t = spec.terms[i];
    e.inputs.push_back(support_inputs(data, t));
    Group* target = nullptr;
    if (merge) {
      for (auto& g : e.groups) {
        if (g.support == t.support() && g.design == t.design) target = &g;
      }
    }
    if (target) {
      target->terms.push_back(i);
    } else {
      e.groups.push_back({t.support(), t.design, {i}, false});
    }
  }
  Group* ev = nullptr;
  if (merge) {
    for (auto& g : e.groups) {
      if (g.support == Support::event && g.design == DesignColumn::constant) ev = &g;
    }
  }
  if (ev) {
    ev->tau0 = true;
  } else {
    e.groups.push_back({Support::event, DesignColumn::constant, {}, true});
  }

  std::vector<Eigen::SparseMatrix<double>> parts;
  std::vector<Eigen::Index> sizes;
  Eigen::Index width = 0;
  for (const auto& g : e.groups) {
    parts.push_back(support_design(data, g.support, g.design));
    sizes.push_back(parts.back().cols());
    width += sizes.back();
  }
  const auto n = static_cast<Eigen::Index>(data.catalog.size());
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    for (Eigen::Index k = 0; k < p.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(p, k); it; ++it) {
        trip.emplace_back(it.row(), off + it.col(), it.value());
      }
    }
    off += p.cols();
  }
  Eigen::SparseMatrix<double> D(n, width);
  D.setFromTriplets(trip.begin(), trip.end());
  e.lg = LatentGaussian(std::move(D), std::move(sizes));
  return e;
}

std::vector<Eigen::MatrixXd> group_blocks(const Engine& e, const ModelSpec& spec,
                                          const Hyperparameters& hyper) {
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t g = 0; g < e.groups.size(); ++g) {
    const Eigen::Index m = e.lg.block_sizes()[g];
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, m);
    for (auto i : e.groups[g].terms) K += kernel_matrix(hyper.expr(spec, i), e.inputs[i], e.inputs[i]);
    if (e.groups[g].tau0) K.diagonal().array() += hyper.tau0 * hyper.tau0;
    out.push_back(std::move(K));
  }
  return out;
}

double penalty(const ModelSpec& spec, const Hyperparameters& h, double scale) {
  double p = 0.0;
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    for (const auto& k : h.kernels[i]) p += k.omega * k.omega / (2.0 * scale * scale);
  }
  return p;
}

}  // namespace

Eigen::SparseMatrix<double> term_design(const NergData& data, const TermSpec& term) {
  return support_design(data, term.support(), term.design);
}

double marginal_loglik(const NergData& data, const ModelSpec& spec, const Hyperparameters& hyper) {
  spec.validate(true);
  hyper.check(spec);
  Engine e = build_engine(data, spec, true);
  e.lg.factor(group_blocks(e, spec, hyper), hyper.phi0 * hyper.phi0);
  return e.lg.loglik(data.residual - data.prior_mean);
}

NergFit condition_nerg(const NergData& data, const ModelSpec& spec, const Hyperparameters& hyper) {
  spec.validate(true);
  hyper.check(spec);
  Engine e = build_engine(data, spec, false);
  e.lg.factor(group_blocks(e, spec, hyper), hyper.phi0 * hyper.phi0);

  NergFit fit;
  fit.spec = spec;
  fit.hyper = hyper;
  fit.data = data;
  const Eigen::VectorXd r = data.residual - data.prior_mean;
  fit.loglik = e.lg.loglik(r);
  fit.objective = fit.loglik;
  fit.alpha = e.lg.solve(r);
  const Eigen::VectorXd u = e.lg.latent_mean(r);
  const Eigen::MatrixXd S = e.lg.latent_cov();

  const auto& off = e.lg.block_offsets();
  const auto& sz = e.lg.block_sizes();
  const std::size_t nt = spec.terms.size();
  const Eigen::Index mt = nt > 0 ? off[nt - 1] + sz[nt - 1] : 0;
  fit.joint_cov = S.topLeftCorner(mt, mt);
  for (std::size_t i = 0; i < nt; ++i) {
    TermPosterior tp;
    tp.name = spec.terms[i].name;
    tp.support = e.inputs[i];
    tp.mean = u.segment(off[i], sz[i]);
    tp.cov = S.block(off[i], off[i], sz[i], sz[i]);
    fit.term_offsets.push_back(off[i]);
    fit.terms.push_back(std::move(tp));
  }
  fit.event_terms = u.segment(off[nt], sz[nt]);
  fit.within = hyper.phi0 * hyper.phi0 * fit.alpha;

  if (auto p = spec.path_term()) {
    const TermPosterior& tp = fit.terms[*p];
    Eigen::VectorXd mu_abs = tp.mean.array() + data.mu_ca;
    auto [clamped, rep] = clamp_and_report(mu_abs);
    CellAttenPosterior cp;
    cp.mu_ca = clamped;
    cp.psi_ca = tp.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    cp.mu_prior = data.mu_ca;
    fit.cells = cp;
    fit.clamp = rep;
  }
  fit.engine = std::move(e.lg);
  return fit;
}

NergFit fit_nerg(const NergData& data, const ModelSpec& spec, const NergFitConfig& config) {
  spec.validate(true);
  const double scale = config.prior_scale > 0.0 ? config.prior_scale
                       : config.ergodic_sigma > 0.0 ? config.ergodic_sigma
                                                    : 1.0;
  // Search coordinates: log omega (and log ell) per kernel part, then log tau0, log phi0.
  std::vector<double> x0, lo, hi;
  for (const auto& t : spec.terms) {
    for (std::size_t p = 0; p < t.kernels.size(); ++p) {
      const KernelBounds& b = t.bound(p);
      x0.push_back(std::log(std::clamp(t.kernels[p].omega, b.omega_lower, b.omega_upper)));
      lo.push_back(std::log(b.omega_lower));
      hi.push_back(std::log(b.omega_upper));
      if (has_length_scale(t.kernels[p].kind)) {
        x0.push_back(std::log(std::clamp(t.kernels[p].ell, b.ell_lower, b.ell_upper)));
        lo.push_back(std::log(b.ell_lower));
        hi.push_back(std::log(b.ell_upper));
      }
    }
  }
  for (double v : {spec.tau0_init, spec.phi0_init}) {
    x0.push_back(std::log(std::clamp(v, spec.sd_lower, spec.sd_upper)));
    lo.push_back(std::log(spec.sd_lower));
    hi.push_back(std::log(spec.sd_upper));
  }
  auto unpack = [&](const Eigen::VectorXd& x) {
    Hyperparameters h = Hyperparameters::initial(spec);
    Eigen::Index j = 0;
    for (std::size_t i = 0; i < spec.terms.size(); ++i) {
      for (auto& k : h.kernels[i]) {
        k.omega = std::exp(x(j++));
        if (has_length_scale(k.kind)) k.ell = std::exp(x(j++));
      }
    }
    h.tau0 = std::exp(x(j++));
    h.phi0 = std::exp(x(j++));
    return h;
  };

  Engine e = build_engine(data, spec, true);
  const Eigen::VectorXd r = data.residual - data.prior_mean;
  auto objective = [&](const Eigen::VectorXd& x) {
    const Hyperparameters h = unpack(x);
    try {
      e.lg.factor(group_blocks(e, spec, h), h.phi0 * h.phi0);
      return -(e.lg.loglik(r) - penalty(spec, h, scale));
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  const auto opt = minimize_box(objective, vec(x0), vec(lo), vec(hi), config.optimizer);

  NergFit fit = condition_nerg(data, spec, unpack(opt.x));
  fit.objective = fit.loglik - penalty(spec, fit.hyper, scale);
  fit.trace = opt.trace;
  fit.evals = opt.evals;
  if (config.ergodic_sigma > 0.0) fit.variance = variance_check(fit, config.ergodic_sigma);
  log::info("non-ergodic fit: loglik = {:.3f} after {} evaluations", fit.loglik, fit.evals);
  return fit;
}

VarianceCheck variance_check(const NergFit& fit, double ergodic_sigma) {
  VarianceCheck v;
  v.ergodic_sigma = ergodic_sigma;
  const Catalog& c = fit.data.catalog;
  double mean_r = 0.0, mean_lnv = 0.0;
  for (const auto& r : c.records()) {
    mean_r += r.r_rup;
    mean_lnv += std::log(r.vs30);
  }
  const double n = static_cast<double>(std::max<std::size_t>(c.size(), 1));
  mean_r /= n;
  mean_lnv /= n;
  double w2 = 0.0;
  for (std::size_t i = 0; i < fit.spec.terms.size(); ++i) {
    const TermSpec& t = fit.spec.terms[i];
    double var = 0.0;
    for (const auto& k : fit.hyper.kernels[i]) var += k.omega * k.omega;
    if (t.design == DesignColumn::delta_r) {
      // Mean over records of dR_k K dR_k^T: the path variance implied by the cells.
      const KernelExpr kx = fit.hyper.expr(fit.spec, i);
      const auto& dR = fit.data.dR;
      double s = 0.0;
      for (Eigen::Index k = 0; k < dR.outerSize(); ++k) {
        std::vector<std::pair<Eigen::Index, double>> row;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(dR, k); it; ++it) {
          row.emplace_back(it.col(), it.value());
        }
        for (const auto& [a, la] : row) {
          for (const auto& [b, lb] : row) {
            s += la * lb * kx(fit.terms[i].support[static_cast<std::size_t>(a)],
                              fit.terms[i].support[static_cast<std::size_t>(b)]);
          }
        }
      }
      w2 += s / n;
    } else {
      const double x = design_value(fit.data.coeffs, t.design, mean_r, std::exp(mean_lnv));
      w2 += x * x * var;
    }
  }
  v.omega2_eff = w2;
  v.nerg_sigma = std::sqrt(w2 + fit.hyper.tau0 * fit.hyper.tau0 + fit.hyper.phi0 * fit.hyper.phi0);
  v.rel_diff = ergodic_sigma > 0.0 ? std::abs(v.nerg_sigma - ergodic_sigma) / ergodic_sigma : 0.0;
  return v;
}

Eigen::VectorXd NergFit::in_sample_effect() const {
  Eigen::VectorXd out = data.prior_mean;
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    out += term_design(data, spec.terms[i]) * terms[i].mean;
  }
  return out;
}

namespace {

Decomposition decompose_row(const NergFit& fit, const Record& r, std::optional<std::size_t> ev,
                            std::optional<std::size_t> st) {
  Decomposition d;
  bool any_path = false;
  for (std::size_t i = 0; i < fit.spec.terms.size(); ++i) {
    const TermSpec& t = fit.spec.terms[i];
    double v = 0.0;
    if (t.design == DesignColumn::delta_r) {
      const PathSegments seg = segment_path(*fit.data.grid, r.t_e, r.t_s);
      const Eigen::VectorXd mu_abs = fit.terms[i].mean.array() + fit.data.mu_ca;
      v = f_atten(seg, mu_abs) - fit.data.coeffs.c7 * r.r_rup;
    } else {
      const auto idx = t.support() == Support::event ? ev : st;
      if (!idx) {
        throw ValidationError("record refers to an " +
                              std::string(t.support() == Support::event ? "event" : "station") +
                              " unknown to the fit; use prediction instead");
      }
      v = design_value(fit.data.coeffs, t.design, r.r_rup, r.vs30) *
          fit.terms[i].mean(static_cast<Eigen::Index>(*idx));
    }
    switch (t.role) {
      case TermRole::source: d.dL2L += v; break;
      case TermRole::path:
        d.dP2P += v;
        any_path = true;
        break;
      case TermRole::site: d.dS2S += v; break;
    }
  }
  if (!any_path) d.dP2P = 0.0;
  return d;
}

}  // namespace

Decomposition decompose(const NergFit& fit, std::size_t record) {
  const Catalog& c = fit.data.catalog;
  if (record >= c.size()) throw DimensionError("record index out of range");
  return decompose_row(fit, c.records()[record], c.event_index(record), c.station_index(record));
}

Decomposition decompose(const NergFit& fit, const Record& record) {
  const Catalog& c = fit.data.catalog;
  return decompose_row(fit, record, c.find_event(record.event_id), c.find_station(record.station_id));
}

std::string NergFit::report() const {
  std::ostringstream os;
  os.precision(8);
  os << "[hyperparameters]\n";
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    const TermSpec& t = spec.terms[i];
    os << t.name << " (" << to_string(t.role) << ", " << to_string(t.design) << ", "
       << to_string(t.input) << "):";
    for (const auto& k : hyper.kernels[i]) {
      os << " " << to_string(k.kind) << "(omega = " << k.omega;
      if (has_length_scale(k.kind)) os << ", ell = " << k.ell;
      os << ")";
    }
    os << "\n";
  }
  os << "tau0 = " << hyper.tau0 << "\nphi0 = " << hyper.phi0 << "\n";
  os << "phi_S2S = " << std::sqrt(hyper.role_variance(spec, TermRole::site))
     << "\nphi_L2L = " << std::sqrt(hyper.role_variance(spec, TermRole::source)) << "\n";
  os << "[likelihood]\nloglik = " << loglik << "\nobjective = " << objective
     << "\nevaluations = " << evals << "\n";
  os << "[variance_conservation]\n"
     << "ergodic_sigma = " << variance.ergodic_sigma << "\nnonergodic_omega2_at_centroid = "
     << variance.omega2_eff << "\nnonergodic_sigma = " << variance.nerg_sigma
     << "\nrelative_difference = " << variance.rel_diff << "\n";
  if (cells) {
    os << "[cell_attenuation]\nmu_prior = " << cells->mu_prior << "\nclamped_cells = " << clamp.count()
       << " of " << cells->mu_ca.size() << "\nquality_warning = "
       << (clamp.quality_warning ? "true" : "false") << "\n";
  }
  return os.str();
}

}  // namespace nergmm
