#include "nergmm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nergmm/errors.hpp"
#include "nergmm/linalg.hpp"
#include "nergmm/log.hpp"
#include "nergmm/random.hpp"

namespace nergmm {

namespace {

enum Purpose : std::uint32_t {
  kStation = 1,
  kEvent = 2,
  kEventTerm = 3,
  kWithin = 4,
  kSelect = 5,
  kField = 16,  // + term index
};

}  // namespace

ErgodicCoeffs SynthConfig::default_coeffs() {
  ErgodicCoeffs c;
  c.c1 = -1.0;
  c.c2 = 1.2;
  c.c3 = -0.05;
  c.c4 = -2.0;
  c.c5 = 0.2;
  c.c6 = 6.0;
  c.c7 = -0.006;
  c.c10 = -0.6;
  return c;
}

SynthConfig SynthConfig::with_preset() {
  SynthConfig cfg;
  cfg.spec = ModelSpec::preset();
  cfg.truth = Hyperparameters::initial(cfg.spec);
  cfg.truth.kernels[0][0] = {KernelKind::exponential, 0.3, 50.0};
  cfg.truth.kernels[1][0] = {KernelKind::exponential, 0.4, 30.0};
  cfg.truth.kernels[2][0] = {KernelKind::group, 0.2, 1.0};
  cfg.truth.kernels[3][0] = {KernelKind::exponential, 0.0015, 50.0};
  cfg.truth.kernels[3][1] = {KernelKind::group, 0.0007, 1.0};
  cfg.truth.tau0 = 0.3;
  cfg.truth.phi0 = 0.4;
  CellGrid g;
  g.origin = cfg.region_origin;
  g.nx = 15;
  g.ny = 15;
  g.dx = cfg.region_width / static_cast<double>(g.nx);
  g.dy = cfg.region_height / static_cast<double>(g.ny);
  cfg.grid = g;
  return cfg;
}

void SynthConfig::validate() const {
  if (!(region_width > 0.0) || !(region_height > 0.0)) throw ValidationError("synth region must have positive size");
  if (n_events < 1 || n_stations < 1) throw ValidationError("synth needs at least one event and one station");
  if (min_stations_per_event < 1 || min_stations_per_event > max_stations_per_event) {
    throw ValidationError("synth needs 1 <= min_stations_per_event <= max_stations_per_event");
  }
  if (!(mag_min > 0.0) || !(mag_min <= mag_max)) throw ValidationError("synth magnitude range must be positive and ordered");
  if (!(r_min > 0.0) || !(r_min < r_max)) throw ValidationError("synth distance range must be positive and ordered");
  if (!(vs30_min > 0.0) || !(vs30_min <= vs30_max)) throw ValidationError("synth vs30 range must be positive and ordered");
  spec.validate(true);
  if (truth.kernels.size() != spec.terms.size()) throw ValidationError("synth truth does not match the model terms");
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    if (truth.kernels[i].size() != spec.terms[i].kernels.size()) {
      throw ValidationError("synth truth for term '" + spec.terms[i].name + "' has the wrong number of kernels");
    }
    for (const auto& k : truth.kernels[i]) {
      try {
        k.validate();
      } catch (const HyperparameterError& e) {
        throw ValidationError(std::string("synth truth: ") + e.what());
      }
    }
  }
  if (!(truth.tau0 >= 0.0) || !(truth.phi0 >= 0.0)) throw ValidationError("synth truth needs tau0, phi0 >= 0");
  try {
    check_coeffs(coeffs);
  } catch (const ConstraintError& e) {
    throw ValidationError(std::string("synth coefficients: ") + e.what());
  }
  if (spec.path_term()) {
    if (!grid) throw ValidationError("synth model has a cell-attenuation term but no grid");
    grid->validate();
    const Point2 far{region_origin.x + region_width, region_origin.y + region_height};
    if (!grid->contains(region_origin) || !grid->contains(far)) {
      throw ValidationError("synth grid does not cover the region");
    }
  }
}

SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.seed;

  // Station network.
  struct Site {
    Point2 xy;
    double vs30;
  };
  std::vector<Site> sites(cfg.n_stations);
  const double lv0 = std::log(cfg.vs30_min), lv1 = std::log(cfg.vs30_max);
  for (std::size_t s = 0; s < sites.size(); ++s) {
    CounterRng rng(seed, stream_id(kStation, s));
    sites[s].xy = {rng.uniform(cfg.region_origin.x, cfg.region_origin.x + cfg.region_width),
                   rng.uniform(cfg.region_origin.y, cfg.region_origin.y + cfg.region_height)};
    sites[s].vs30 = std::exp(rng.uniform(lv0, lv1));
  }

  std::vector<Record> raw;
  for (std::size_t e = 0; e < cfg.n_events; ++e) {
    CounterRng rng(seed, stream_id(kEvent, e));
    const Point2 src{rng.uniform(cfg.region_origin.x, cfg.region_origin.x + cfg.region_width),
                     rng.uniform(cfg.region_origin.y, cfg.region_origin.y + cfg.region_height)};
    const double mag = rng.uniform(cfg.mag_min, cfg.mag_max);
    const auto span = cfg.max_stations_per_event - cfg.min_stations_per_event + 1;
    const std::size_t want =
        cfg.min_stations_per_event + static_cast<std::size_t>(rng.next_u64() % span);

    std::vector<std::size_t> cand;
    for (std::size_t s = 0; s < sites.size(); ++s) {
      const double r = distance(src, sites[s].xy);
      if (r >= cfg.r_min && r <= cfg.r_max) cand.push_back(s);
    }
    if (cand.size() < cfg.min_stations_per_event) {
      throw ValidationError("synth: event " + std::to_string(e) + " has only " +
                            std::to_string(cand.size()) + " stations within range; region too small for the requested counts");
    }
    CounterRng pick(seed, stream_id(kSelect, e));
    const std::size_t take = std::min(want, cand.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(pick.next_u64() % (cand.size() - i));
      std::swap(cand[i], cand[j]);
    }
    std::sort(cand.begin(), cand.begin() + static_cast<long>(take));
    for (std::size_t i = 0; i < take; ++i) {
      const Site& st = sites[cand[i]];
      Record r;
      r.event_id = static_cast<std::int64_t>(e + 1);
      r.station_id = static_cast<std::int64_t>(cand[i] + 1);
      r.mag = mag;
      r.r_rup = distance(src, st.xy);
      r.vs30 = st.vs30;
      r.t_e = src;
      r.t_s = st.xy;
      raw.push_back(r);
    }
  }
  Catalog cat = validate_catalog(raw);
  const auto n = static_cast<Eigen::Index>(cat.size());

  SynthResult out;
  GroundTruth& t = out.truth;
  t.mu_ca = cfg.mu_ca.value_or(cfg.coeffs.c7);
  const NergData data = prepare_nerg_data(cat, cfg.spec, cfg.coeffs, cfg.grid, t.mu_ca);

  t.f_erg.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) t.f_erg(k) = f_erg(cfg.coeffs, cat.records()[static_cast<std::size_t>(k)]);
  t.dL2L = Eigen::VectorXd::Zero(n);
  t.dP2P = Eigen::VectorXd::Zero(n);
  t.dS2S = Eigen::VectorXd::Zero(n);

  for (std::size_t i = 0; i < cfg.spec.terms.size(); ++i) {
    const TermSpec& term = cfg.spec.terms[i];
    const auto inputs = support_inputs(data, term);
    const auto m = static_cast<Eigen::Index>(inputs.size());
    const KernelExpr kx(term.space(), cfg.truth.kernels[i]);
    const Eigen::MatrixXd B = psd_sqrt(kernel_matrix(kx, inputs, inputs));
    Eigen::VectorXd z(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      CounterRng rng(seed, stream_id(kField + static_cast<std::uint32_t>(i), static_cast<std::uint64_t>(j)));
      z(j) = rng.normal();
    }
    Eigen::VectorXd v = B * z;
    Eigen::VectorXd contrib;
    if (term.design == DesignColumn::delta_r) {
      t.cell_atten = v.array() + t.mu_ca;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (t.cell_atten(j) > 0.0) {
          t.cell_atten(j) = -t.cell_atten(j);
          ++t.reflected_cells;
        }
      }
      v = t.cell_atten.array() - t.mu_ca;
      contrib = data.dR * t.cell_atten;
      for (Eigen::Index k = 0; k < n; ++k) {
        contrib(k) -= cfg.coeffs.c7 * cat.records()[static_cast<std::size_t>(k)].r_rup;
      }
    } else {
      contrib = term_design(data, term) * v;
    }
    switch (term.role) {
      case TermRole::source: t.dL2L += contrib; break;
      case TermRole::path: t.dP2P += contrib; break;
      case TermRole::site: t.dS2S += contrib; break;
    }
    t.term_values.push_back(std::move(v));
  }
  if (t.reflected_cells > 0) {
    log::info("synth: {} positive cell-attenuation draws mirrored below zero", t.reflected_cells);
  }

  t.event_terms.resize(static_cast<Eigen::Index>(cat.n_events()));
  for (std::size_t e = 0; e < cat.n_events(); ++e) {
    CounterRng rng(seed, stream_id(kEventTerm, static_cast<std::uint64_t>(cat.event_id(e))));
    t.event_terms(static_cast<Eigen::Index>(e)) = cfg.truth.tau0 * rng.normal();
  }
  t.within.resize(n);
  std::vector<double> y(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    CounterRng rng(seed, stream_id(kWithin, static_cast<std::uint64_t>(k)));
    t.within(k) = cfg.truth.phi0 * rng.normal();
    y[static_cast<std::size_t>(k)] = t.f_erg(k) + t.dL2L(k) + t.dP2P(k) + t.dS2S(k) +
                                     t.event_terms(static_cast<Eigen::Index>(cat.event_index(static_cast<std::size_t>(k)))) +
                                     t.within(k);
  }
  out.catalog = cat.with_response(y);
  return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> oracle_condition(const Eigen::VectorXd& joint_mean,
                                                             const Eigen::MatrixXd& joint_cov,
                                                             const std::vector<std::size_t>& observed,
                                                             const Eigen::VectorXd& values) {
  const Eigen::Index n = joint_mean.size();
  if (joint_cov.rows() != n || joint_cov.cols() != n) throw DimensionError("joint covariance does not match the mean");
  if (values.size() != static_cast<Eigen::Index>(observed.size())) {
    throw DimensionError("observed values do not match the observed indices");
  }
  std::vector<char> is_obs(static_cast<std::size_t>(n), 0);
  for (auto o : observed) {
    if (static_cast<Eigen::Index>(o) >= n) throw DimensionError("observed index out of range");
    if (is_obs[o]) throw ValidationError("observed index listed twice");
    is_obs[o] = 1;
  }
  std::vector<Eigen::Index> un;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!is_obs[static_cast<std::size_t>(i)]) un.push_back(i);
  }
  const auto no = static_cast<Eigen::Index>(observed.size());
  const auto nu = static_cast<Eigen::Index>(un.size());

  Eigen::VectorXd mean = joint_mean;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < no; ++a) mean(static_cast<Eigen::Index>(observed[static_cast<std::size_t>(a)])) = values(a);
  if (no == 0) return {joint_mean, joint_cov};

  Eigen::MatrixXd Soo(no, no), Suo(nu, no), Suu(nu, nu);
  Eigen::VectorXd dev(no);
  for (Eigen::Index a = 0; a < no; ++a) {
    const auto oa = static_cast<Eigen::Index>(observed[static_cast<std::size_t>(a)]);
    dev(a) = values(a) - joint_mean(oa);
    for (Eigen::Index b = 0; b < no; ++b) Soo(a, b) = joint_cov(oa, static_cast<Eigen::Index>(observed[static_cast<std::size_t>(b)]));
    for (Eigen::Index u = 0; u < nu; ++u) Suo(u, a) = joint_cov(un[static_cast<std::size_t>(u)], oa);
  }
  for (Eigen::Index u = 0; u < nu; ++u) {
    for (Eigen::Index v = 0; v < nu; ++v) Suu(u, v) = joint_cov(un[static_cast<std::size_t>(u)], un[static_cast<std::size_t>(v)]);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Soo);
  if (!lu.isInvertible()) throw NumericalError("observed covariance block is singular");
  const Eigen::VectorXd mu_u = lu.solve(dev);
  const Eigen::MatrixXd W = lu.solve(Suo.transpose());  // Soo^-1 Sou
  const Eigen::VectorXd cond_mean = Suo * mu_u;
  const Eigen::MatrixXd cond_cov = Suu - Suo * W;
  for (Eigen::Index u = 0; u < nu; ++u) {
    const Eigen::Index iu = un[static_cast<std::size_t>(u)];
    mean(iu) = joint_mean(iu) + cond_mean(u);
    for (Eigen::Index v = 0; v < nu; ++v) cov(iu, un[static_cast<std::size_t>(v)]) = cond_cov(u, v);
  }
  return {mean, cov};
}

}  // namespace nergmm
