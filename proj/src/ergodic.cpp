#include "nergmm/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nergmm/errors.hpp"
#include "nergmm/latent.hpp"
#include "nergmm/log.hpp"

namespace nergmm {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Columns of the linear part of the functional form for fixed c6.
struct Design {
  Eigen::MatrixXd X;
  std::vector<std::string> names;
};

Design ergodic_design(const Catalog& cat, double c6, double v_ref, bool saturation) {
  Design d;
  d.names = {"c1", "c2", "c3", "c4"};
  if (!saturation) d.names.push_back("c5");
  d.names.push_back("c7");
  d.names.push_back("c10");
  const auto n = static_cast<Eigen::Index>(cat.size());
  d.X.resize(n, static_cast<Eigen::Index>(d.names.size()));
  const double lnc6 = std::log(c6);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Record& r = cat.records()[static_cast<std::size_t>(k)];
    const double lr = std::log(r.r_rup + c6);
    Eigen::Index j = 0;
    d.X(k, j++) = 1.0;
    d.X(k, j++) = saturation ? r.mag * (1.0 - lr / lnc6) : r.mag;
    d.X(k, j++) = (8.5 - r.mag) * (8.5 - r.mag);
    d.X(k, j++) = lr;
    if (!saturation) d.X(k, j++) = r.mag * lr;
    d.X(k, j++) = r.r_rup;
    d.X(k, j++) = std::log(r.vs30 / v_ref);
  }
  return d;
}

// Columns that are numerically independent of the ones before them, in
// pivot order of a column-normalized QR.
std::vector<Eigen::Index> independent_columns(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Xn = X;
  for (Eigen::Index j = 0; j < Xn.cols(); ++j) {
    const double nrm = Xn.col(j).norm();
    if (nrm > 0.0) Xn.col(j) /= nrm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xn);
  qr.setThreshold(1e-9);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < qr.rank(); ++i) keep.push_back(qr.colsPermutation().indices()(i));
  std::sort(keep.begin(), keep.end());
  return keep;
}

Eigen::MatrixXd select_cols(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
  return out;
}

ErgodicCoeffs coeffs_from(const std::vector<std::string>& names, const std::vector<Eigen::Index>& cols,
                          const Eigen::VectorXd& beta, ErgodicCoeffs base) {
  base.c1 = base.c2 = base.c3 = base.c4 = base.c5 = base.c7 = base.c10 = 0.0;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    const std::string& nm = names[static_cast<std::size_t>(cols[j])];
    const double v = beta(static_cast<Eigen::Index>(j));
    if (nm == "c1") base.c1 = v;
    else if (nm == "c2") base.c2 = v;
    else if (nm == "c3") base.c3 = v;
    else if (nm == "c4") base.c4 = v;
    else if (nm == "c5") base.c5 = v;
    else if (nm == "c7") base.c7 = v;
    else if (nm == "c10") base.c10 = v;
  }
  if (base.full_saturation) base.c5 = -base.c2 / std::log(base.c6);
  return base;
}

std::vector<std::vector<std::size_t>> records_by_event(const Catalog& cat) {
  std::vector<std::vector<std::size_t>> out(cat.n_events());
  for (std::size_t k = 0; k < cat.size(); ++k) out[cat.event_index(k)].push_back(k);
  return out;
}

Eigen::MatrixXd event_block(std::size_t n, double tau, double phi) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n), tau * tau);
  C.diagonal().array() += phi * phi;
  return C;
}

Eigen::LLT<Eigen::MatrixXd> factor_block(std::size_t n, double tau, double phi, std::size_t event) {
  Eigen::LLT<Eigen::MatrixXd> llt(event_block(n, tau, phi));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance block of event index " + std::to_string(event) +
                         " is singular (phi = 0 with repeated records?)");
  }
  return llt;
}

void check_sds(double tau, double phi) {
  if (!(tau >= 0.0) || !(phi >= 0.0) || !std::isfinite(tau) || !std::isfinite(phi)) {
    throw ValidationError("tau and phi must be finite and >= 0");
  }
  if (tau == 0.0 && phi == 0.0) throw ValidationError("tau and phi cannot both be 0");
}

// GLS under the ergodic block covariance. Returns -loglik at the profiled beta.
struct GlsResult {
  Eigen::VectorXd beta;
  double neg_loglik = 0.0;
};

GlsResult gls_blocks(const std::vector<std::vector<std::size_t>>& groups, const Eigen::MatrixXd& X,
                     const Eigen::VectorXd& y, double tau, double phi) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd Xw(n, X.cols());
  Eigen::VectorXd yw(n);
  double logdet = 0.0;
  Eigen::Index row = 0;
  for (std::size_t e = 0; e < groups.size(); ++e) {
    const auto& idx = groups[e];
    const auto ne = static_cast<Eigen::Index>(idx.size());
    const auto llt = factor_block(idx.size(), tau, phi, e);
    Eigen::MatrixXd Xe(ne, X.cols());
    Eigen::VectorXd ye(ne);
    for (Eigen::Index i = 0; i < ne; ++i) {
      Xe.row(i) = X.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
      ye(i) = y(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
    }
    Xw.middleRows(row, ne) = llt.matrixL().solve(Xe);
    yw.segment(row, ne) = llt.matrixL().solve(ye);
    for (Eigen::Index i = 0; i < ne; ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
    row += ne;
  }
  GlsResult g;
  if (X.cols() > 0) {
    g.beta = Eigen::HouseholderQR<Eigen::MatrixXd>(Xw).solve(yw);
    yw -= Xw * g.beta;
  } else {
    g.beta = Eigen::VectorXd(0);
  }
  g.neg_loglik = 0.5 * (static_cast<double>(n) * kLog2Pi + logdet + yw.squaredNorm());
  return g;
}

// Drops c7 from the active set when the unconstrained estimate is positive.
// solve(cols) runs GLS on the listed design columns.
template <typename Solve>
GlsResult gls_with_c7_bound(const Design& d, std::vector<Eigen::Index>& cols, Solve&& solve,
                            bool& c7_pinned) {
  GlsResult g = solve(cols);
  c7_pinned = false;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (d.names[static_cast<std::size_t>(cols[j])] == "c7" && g.beta(static_cast<Eigen::Index>(j)) > 0.0) {
      cols.erase(cols.begin() + static_cast<long>(j));
      c7_pinned = true;
      return solve(cols);
    }
  }
  return g;
}

std::vector<std::string> pinned_names(const Design& d, const std::vector<Eigen::Index>& cols) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d.names.size()); ++j) {
    if (std::find(cols.begin(), cols.end(), j) == cols.end()) out.push_back(d.names[static_cast<std::size_t>(j)]);
  }
  return out;
}

Eigen::VectorXd response(const Catalog& cat) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(cat.size()));
  for (std::size_t k = 0; k < cat.size(); ++k) y(static_cast<Eigen::Index>(k)) = cat.records()[k].y;
  return y;
}

void check_config(const ErgodicFitConfig& cfg) {
  if (!(cfg.sd_lower > 0.0) || !(cfg.sd_lower < cfg.sd_upper)) {
    throw ValidationError("ergodic fit needs 0 < sd_lower < sd_upper");
  }
  if (cfg.estimate_c6 && !(cfg.c6_lower > 1.0 && cfg.c6_lower < cfg.c6_upper)) {
    throw ValidationError("ergodic fit needs 1 < c6_lower < c6_upper");
  }
  if (!(cfg.start.c6 > 1.0)) throw ConstraintError("c6 must exceed 1");
  if (!(cfg.start.v_ref > 0.0)) throw ConstraintError("v_ref must be positive");
}

std::string format_trace(const std::vector<double>& trace) {
  std::ostringstream os;
  os.precision(10);
  for (std::size_t i = 0; i < trace.size(); ++i) os << (i ? ", " : "") << trace[i];
  return os.str();
}

}  // namespace

double loglik_ergodic(const Catalog& catalog, const ErgodicCoeffs& coeffs, double tau, double phi) {
  check_sds(tau, phi);
  const auto groups = records_by_event(catalog);
  double ll = -0.5 * static_cast<double>(catalog.size()) * kLog2Pi;
  for (std::size_t e = 0; e < groups.size(); ++e) {
    const auto& idx = groups[e];
    Eigen::VectorXd r(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Record& rec = catalog.records()[idx[i]];
      r(static_cast<Eigen::Index>(i)) = rec.y - f_erg(coeffs, rec);
    }
    const auto llt = factor_block(idx.size(), tau, phi, e);
    const Eigen::VectorXd z = llt.matrixL().solve(r);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
    ll -= 0.5 * (logdet + z.squaredNorm());
  }
  return ll;
}

ErgodicFit fit_ergodic(const Catalog& catalog, const ErgodicFitConfig& config) {
  check_config(config);
  const bool single_event = catalog.n_events() < 2;
  if (single_event) {
    log::warn("ergodic fit on a single event: tau is not identifiable and is pinned to {}",
              config.sd_lower);
  }
  const auto groups = records_by_event(catalog);
  const Eigen::VectorXd y = response(catalog);
  const ErgodicCoeffs& base = config.start;

  // Active columns are decided once, at the starting c6.
  const Design d0 = ergodic_design(catalog, base.c6, base.v_ref, base.full_saturation);
  const std::vector<Eigen::Index> cols0 = independent_columns(d0.X);
  if (cols0.size() < d0.names.size()) {
    log::warn("ergodic design is rank deficient; holding {} coefficient(s) at 0",
              d0.names.size() - cols0.size());
  }

  auto unpack = [&](const Eigen::VectorXd& th, double& tau, double& phi, double& c6) {
    std::size_t i = 0;
    tau = single_event ? config.sd_lower : std::exp(th(static_cast<Eigen::Index>(i++)));
    phi = std::exp(th(static_cast<Eigen::Index>(i++)));
    c6 = config.estimate_c6 ? th(static_cast<Eigen::Index>(i)) : base.c6;
  };
  auto evaluate = [&](const Eigen::VectorXd& th, std::vector<Eigen::Index>& cols, bool& c7_pinned,
                      Design& d) {
    double tau, phi, c6;
    unpack(th, tau, phi, c6);
    d = config.estimate_c6 ? ergodic_design(catalog, c6, base.v_ref, base.full_saturation) : d0;
    cols = cols0;
    return gls_with_c7_bound(
        d, cols,
        [&](const std::vector<Eigen::Index>& c) {
          return gls_blocks(groups, select_cols(d.X, c), y, tau, phi);
        },
        c7_pinned);
  };

  std::vector<double> x0, lo, hi;
  const double lsd = std::log(config.sd_lower), usd = std::log(config.sd_upper);
  if (!single_event) {
    x0.push_back(std::log(std::clamp(config.tau_init, config.sd_lower, config.sd_upper)));
    lo.push_back(lsd);
    hi.push_back(usd);
  }
  x0.push_back(std::log(std::clamp(config.phi_init, config.sd_lower, config.sd_upper)));
  lo.push_back(lsd);
  hi.push_back(usd);
  if (config.estimate_c6) {
    x0.push_back(std::clamp(base.c6, config.c6_lower, config.c6_upper));
    lo.push_back(config.c6_lower);
    hi.push_back(config.c6_upper);
  }
  auto to_vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };

  const auto opt = minimize_box(
      [&](const Eigen::VectorXd& th) {
        std::vector<Eigen::Index> cols;
        bool pinned;
        Design d;
        return evaluate(th, cols, pinned, d).neg_loglik;
      },
      to_vec(x0), to_vec(lo), to_vec(hi), config.optimizer);

  ErgodicFit fit;
  std::vector<Eigen::Index> cols;
  bool c7_pinned = false;
  Design d;
  const GlsResult g = evaluate(opt.x, cols, c7_pinned, d);
  double c6;
  unpack(opt.x, fit.tau, fit.phi, c6);
  ErgodicCoeffs start = base;
  start.c6 = c6;
  fit.coeffs = coeffs_from(d.names, cols, g.beta, start);
  fit.loglik = -g.neg_loglik;
  fit.pinned = pinned_names(d, cols);
  fit.trace = opt.trace;
  fit.evals = opt.evals;
  if (c7_pinned) log::info("c7 estimate was positive; held at 0");

  // Conditional event terms and within-event residuals.
  fit.event_terms = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(catalog.n_events()));
  fit.residuals.resize(static_cast<Eigen::Index>(catalog.size()));
  for (std::size_t e = 0; e < groups.size(); ++e) {
    const auto& idx = groups[e];
    Eigen::VectorXd r(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Record& rec = catalog.records()[idx[i]];
      r(static_cast<Eigen::Index>(i)) = rec.y - f_erg(fit.coeffs, rec);
    }
    const auto llt = factor_block(idx.size(), fit.tau, fit.phi, e);
    const Eigen::VectorXd a = llt.solve(r);
    const double db = fit.tau * fit.tau * a.sum();
    fit.event_terms(static_cast<Eigen::Index>(e)) = db;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      fit.residuals(static_cast<Eigen::Index>(idx[i])) = r(static_cast<Eigen::Index>(i)) - db;
    }
  }
  log::info("ergodic fit: tau = {:.4f}, phi = {:.4f}, loglik = {:.3f} ({} evaluations)", fit.tau,
            fit.phi, fit.loglik, fit.evals);
  return fit;
}

PartialFit fit_partial(const Catalog& catalog, const ErgodicFitConfig& config) {
  check_config(config);
  if (config.estimate_c6) {
    throw ValidationError("fit_partial keeps c6 fixed; estimate it with fit_ergodic first");
  }
  const auto n = static_cast<Eigen::Index>(catalog.size());
  const auto ne = static_cast<Eigen::Index>(catalog.n_events());
  const auto ns = static_cast<Eigen::Index>(catalog.n_stations());
  {
    std::vector<int> per_station(static_cast<std::size_t>(ns), 0);
    for (auto s : catalog.station_indices()) ++per_station[s];
    const auto repeated = std::count_if(per_station.begin(), per_station.end(), [](int c) { return c > 1; });
    if (repeated < 2) log::warn("fewer than 2 stations have repeated recordings; phi_S2S is weakly identified");
  }

  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index k = 0; k < n; ++k) {
    trip.emplace_back(k, static_cast<Eigen::Index>(catalog.event_index(static_cast<std::size_t>(k))), 1.0);
    trip.emplace_back(k, ne + static_cast<Eigen::Index>(catalog.station_index(static_cast<std::size_t>(k))), 1.0);
  }
  Eigen::SparseMatrix<double> Z(n, ne + ns);
  Z.setFromTriplets(trip.begin(), trip.end());
  LatentGaussian lg(Z, {ne, ns});

  const ErgodicCoeffs& base = config.start;
  const Design d = ergodic_design(catalog, base.c6, base.v_ref, base.full_saturation);
  const std::vector<Eigen::Index> cols0 = independent_columns(d.X);
  const Eigen::VectorXd y = response(catalog);
  const Eigen::MatrixXd Zty = Z.transpose() * y;
  const Eigen::MatrixXd ZtX = Z.transpose() * d.X;

  auto factor = [&](double tau0, double phi_ss, double phi_s2s) {
    lg.factor({Eigen::MatrixXd::Identity(ne, ne) * (tau0 * tau0),
               Eigen::MatrixXd::Identity(ns, ns) * (phi_s2s * phi_s2s)},
              phi_ss * phi_ss);
  };
  auto gls = [&](const std::vector<Eigen::Index>& cols) {
    const Eigen::MatrixXd Xa = select_cols(d.X, cols);
    const Eigen::MatrixXd ZtXa = select_cols(ZtX, cols);
    GlsResult g;
    const Eigen::MatrixXd A = lg.cross(Xa, ZtXa, Xa, ZtXa);
    const Eigen::VectorXd b = lg.cross(Xa, ZtXa, y, Zty);
    g.beta = A.ldlt().solve(b);
    const double quad = lg.cross(y, Zty, y, Zty)(0, 0) - g.beta.dot(b);
    g.neg_loglik = 0.5 * (static_cast<double>(n) * kLog2Pi + lg.log_det() + quad);
    return g;
  };
  auto evaluate = [&](const Eigen::VectorXd& th, std::vector<Eigen::Index>& cols, bool& pinned) {
    factor(std::exp(th(0)), std::exp(th(1)), std::exp(th(2)));
    cols = cols0;
    return gls_with_c7_bound(d, cols, gls, pinned);
  };

  const double lsd = std::log(config.sd_lower), usd = std::log(config.sd_upper);
  Eigen::Vector3d x0(std::log(std::clamp(config.tau_init, config.sd_lower, config.sd_upper)),
                     std::log(std::clamp(config.phi_init, config.sd_lower, config.sd_upper)),
                     std::log(std::clamp(0.5 * config.phi_init, config.sd_lower, config.sd_upper)));
  const auto opt = minimize_box(
      [&](const Eigen::VectorXd& th) {
        std::vector<Eigen::Index> cols;
        bool pinned;
        return evaluate(th, cols, pinned).neg_loglik;
      },
      x0, Eigen::Vector3d::Constant(lsd), Eigen::Vector3d::Constant(usd), config.optimizer);

  PartialFit fit;
  std::vector<Eigen::Index> cols;
  bool pinned = false;
  const GlsResult g = evaluate(opt.x, cols, pinned);
  fit.tau0 = std::exp(opt.x(0));
  fit.phi_ss = std::exp(opt.x(1));
  fit.phi_s2s = std::exp(opt.x(2));
  fit.tau = fit.tau0;
  fit.phi = std::hypot(fit.phi_ss, fit.phi_s2s);
  fit.coeffs = coeffs_from(d.names, cols, g.beta, base);
  fit.loglik = -g.neg_loglik;
  fit.pinned = pinned_names(d, cols);
  fit.trace = opt.trace;
  fit.evals = opt.evals;

  Eigen::VectorXd r(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    r(k) = y(k) - f_erg(fit.coeffs, catalog.records()[static_cast<std::size_t>(k)]);
  }
  const Eigen::VectorXd u = lg.latent_mean(r);
  fit.event_terms = u.head(ne);
  fit.site_terms = u.tail(ns);
  fit.residuals.resize(n);
  fit.within_site_residuals.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto e = static_cast<Eigen::Index>(catalog.event_index(static_cast<std::size_t>(k)));
    const auto s = static_cast<Eigen::Index>(catalog.station_index(static_cast<std::size_t>(k)));
    fit.residuals(k) = r(k) - fit.event_terms(e);
    fit.within_site_residuals(k) = fit.residuals(k) - fit.site_terms(s);
  }
  log::info("partial fit: tau0 = {:.4f}, phi_SS = {:.4f}, phi_S2S = {:.4f}", fit.tau0, fit.phi_ss,
            fit.phi_s2s);
  return fit;
}

SitePartition partition_residuals(const ErgodicFit& fit, const Catalog& catalog, double phi_s2s,
                                  double phi_ss) {
  if (fit.residuals.size() != static_cast<Eigen::Index>(catalog.size())) {
    throw DimensionError("fit and catalog differ in record count");
  }
  if (!(phi_s2s >= 0.0) || !(phi_ss >= 0.0)) throw ValidationError("variance components must be >= 0");
  const std::size_t ns = catalog.n_stations();
  std::vector<double> sum(ns, 0.0);
  std::vector<std::size_t> count(ns, 0);
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    sum[catalog.station_index(k)] += fit.residuals(static_cast<Eigen::Index>(k));
    ++count[catalog.station_index(k)];
  }
  SitePartition out;
  out.phi_s2s = phi_s2s;
  out.phi_ss = phi_ss;
  std::vector<double> term(ns, 0.0);
  for (std::size_t s = 0; s < ns; ++s) {
    if (count[s] == 0) continue;
    const double n = static_cast<double>(count[s]);
    const double a = phi_s2s * phi_s2s;
    const double denom = a + phi_ss * phi_ss / n;
    const double shrink = denom > 0.0 ? a / denom : 0.0;
    term[s] = shrink * sum[s] / n;
    out.site_terms[catalog.station_id(s)] = term[s];
  }
  out.within_site.resize(static_cast<Eigen::Index>(catalog.size()));
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    out.within_site(static_cast<Eigen::Index>(k)) =
        fit.residuals(static_cast<Eigen::Index>(k)) - term[catalog.station_index(k)];
  }
  out.caveat =
      "site effects that were absorbed into the ergodic event terms are not recovered by this partition";
  return out;
}

SitePartition partition_residuals(const ErgodicFit& fit, const Catalog& catalog) {
  if (fit.residuals.size() != static_cast<Eigen::Index>(catalog.size())) {
    throw DimensionError("fit and catalog differ in record count");
  }
  const std::size_t ns = catalog.n_stations();
  std::vector<double> sum(ns, 0.0);
  std::vector<std::size_t> count(ns, 0);
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    sum[catalog.station_index(k)] += fit.residuals(static_cast<Eigen::Index>(k));
    ++count[catalog.station_index(k)];
  }
  // One-way ANOVA moments.
  double ss_within = 0.0;
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    const std::size_t s = catalog.station_index(k);
    const double dev = fit.residuals(static_cast<Eigen::Index>(k)) - sum[s] / static_cast<double>(count[s]);
    ss_within += dev * dev;
  }
  const double dof_within = static_cast<double>(catalog.size()) - static_cast<double>(ns);
  const double phi_ss2 = dof_within > 0.0 ? ss_within / dof_within : 0.0;
  double grand = 0.0, mean_inv_n = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    grand += sum[s] / static_cast<double>(count[s]);
    mean_inv_n += 1.0 / static_cast<double>(count[s]);
  }
  grand /= static_cast<double>(ns);
  mean_inv_n /= static_cast<double>(ns);
  double var_means = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    const double dv = sum[s] / static_cast<double>(count[s]) - grand;
    var_means += dv * dv;
  }
  var_means = ns > 1 ? var_means / static_cast<double>(ns - 1) : 0.0;
  const double phi_s2s2 = std::max(0.0, var_means - phi_ss2 * mean_inv_n);
  return partition_residuals(fit, catalog, std::sqrt(phi_s2s2), std::sqrt(phi_ss2));
}

std::string ErgodicFit::report() const {
  std::ostringstream os;
  os.precision(10);
  os << "[coefficients]\n"
     << "c1 = " << coeffs.c1 << "\nc2 = " << coeffs.c2 << "\nc3 = " << coeffs.c3
     << "\nc4 = " << coeffs.c4 << "\nc5 = " << coeffs.c5 << "\nc6 = " << coeffs.c6
     << "\nc7 = " << coeffs.c7 << "\nc10 = " << coeffs.c10 << "\nv_ref = " << coeffs.v_ref
     << "\nfull_saturation = " << (coeffs.full_saturation ? "true" : "false") << "\n";
  os << "[aleatory]\ntau = " << tau << "\nphi = " << phi << "\nsigma = " << std::hypot(tau, phi)
     << "\n";
  os << "[likelihood]\nloglik = " << loglik << "\nevaluations = " << evals << "\n";
  if (!pinned.empty()) {
    os << "pinned = ";
    for (std::size_t i = 0; i < pinned.size(); ++i) os << (i ? ", " : "") << pinned[i];
    os << "\n";
  }
  os << "trace = " << format_trace(trace) << "\n";
  return os.str();
}

}  // namespace nergmm
