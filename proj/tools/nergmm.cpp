#include <Eigen/Core>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "nergmm/errors.hpp"
#include "nergmm/functional_form.hpp"
#include "nergmm/io.hpp"
#include "nergmm/log.hpp"

namespace fs = std::filesystem;
using namespace nergmm;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kSolverError = 3;

io::RunConfig load_config(const std::string& path) {
  return path.empty() ? io::parse_run_config("{}") : io::read_run_config(path);
}

std::ofstream create(const fs::path& dir, const std::string& name) {
  const fs::path p = dir / name;
  std::ofstream out(p);
  if (!out) throw ValidationError("cannot write " + p.string());
  return out;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create " + dir.string() + ": " + ec.message());
}

std::string fmt6(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void write_report(std::ostream& out, const ErgodicFit& erg, const NergFit& fit) {
  const ErgodicCoeffs& c = erg.coeffs;
  out << "ergodic fit\n";
  out << "  c1 " << fmt6(c.c1) << "  c2 " << fmt6(c.c2) << "  c3 " << fmt6(c.c3) << "  c4 " << fmt6(c.c4) << "  c5 "
      << fmt6(c.c5) << "  c6 " << fmt6(c.c6) << "  c7 " << fmt6(c.c7) << "  c10 " << fmt6(c.c10) << '\n';
  out << "  tau " << fmt6(erg.tau) << "  phi " << fmt6(erg.phi) << "  loglik " << fmt6(erg.loglik) << "  evals "
      << erg.evals << '\n';
  for (const auto& p : erg.pinned) out << "  pinned at 0: " << p << '\n';

  out << "\nnon-ergodic fit\n";
  for (std::size_t i = 0; i < fit.spec.terms.size(); ++i) {
    out << "  " << fit.spec.terms[i].name << ':';
    for (const auto& k : fit.hyper.kernels[i]) {
      out << ' ' << to_string(k.kind) << "(omega " << fmt6(k.omega);
      if (has_length_scale(k.kind)) out << ", ell " << fmt6(k.ell);
      out << ')';
    }
    out << '\n';
  }
  out << "  tau0 " << fmt6(fit.hyper.tau0) << "  phi0 " << fmt6(fit.hyper.phi0) << "  loglik " << fmt6(fit.loglik)
      << "  objective " << fmt6(fit.objective) << "  evals " << fit.evals << '\n';

  const VarianceCheck& v = fit.variance;
  out << "\nvariance conservation\n";
  out << "  ergodic sigma      " << fmt6(v.ergodic_sigma) << '\n';
  out << "  non-ergodic omega2 " << fmt6(v.omega2_eff) << '\n';
  out << "  non-ergodic sigma  " << fmt6(v.nerg_sigma) << '\n';
  out << "  relative diff      " << fmt6(v.rel_diff) << (v.rel_diff > 0.10 ? "  WARNING: above 10%" : "") << '\n';

  if (fit.cells) {
    out << "\ncell attenuation\n";
    out << "  clamped cells " << fit.clamp.count() << "  fraction " << fmt6(fit.clamp.fraction)
        << (fit.clamp.quality_warning ? "  WARNING: above 5%" : "") << '\n';
  }
}

int run_fit(const std::string& flatfile, const std::string& config, const fs::path& out) {
  const io::RunConfig rc = load_config(config);
  const Catalog catalog = io::read_flatfile(flatfile);
  prepare_dir(out);
  log::info("fit: {} records, {} events, {} stations", catalog.size(), catalog.n_events(), catalog.n_stations());

  ErgodicFitConfig ec = rc.ergodic;
  ec.start = rc.coeffs;
  const ErgodicFit erg = fit_ergodic(catalog, ec);

  std::vector<double> resid(catalog.size());
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    resid[k] = catalog.records()[k].y - f_erg(erg.coeffs, catalog.records()[k]);
  }
  const NergData data = prepare_nerg_data(catalog.with_response(resid), rc.spec, erg.coeffs, rc.grid, rc.mu_ca);
  NergFitConfig nc = rc.nerg;
  nc.ergodic_sigma = std::hypot(erg.tau, erg.phi);
  const NergFit fit = fit_nerg(data, rc.spec, nc);

  auto bundle = create(out, rc.outputs.bundle);
  io::save_bundle(bundle, fit, erg);
  auto report = create(out, rc.outputs.report);
  write_report(report, erg, fit);
  if (fit.variance.rel_diff > 0.10) log::warn("variance conservation off by {:.1f}%", 100.0 * fit.variance.rel_diff);
  return kOk;
}

int run_predict(const std::string& model, const std::string& scenarios, const fs::path& out, int draws,
                std::uint64_t seed, const std::string& route) {
  const NergFit fit = io::load_bundle(model);
  const io::ScenarioTable table = io::read_scenarios(scenarios);
  prepare_dir(out);
  const GmPrediction p =
      predict_gm(fit, table.scenarios, route == "composition" ? GmRoute::composition : GmRoute::direct);
  const io::OutputNames names;

  auto pred = create(out, names.predictions);
  io::write_predictions(pred, table.labels, p);
  auto cov = create(out, names.covariance);
  io::write_matrix(cov, p.cov, table.labels);
  if (draws > 0) {
    auto d = create(out, names.draws);
    io::write_matrix(d, sample_gm(p, draws, seed), table.labels);
  }
  return kOk;
}

int run_synth(const std::string& config, const fs::path& out) {
  const io::RunConfig rc = load_config(config);
  const SynthResult r = generate(rc.synth);
  prepare_dir(out);
  io::write_flatfile((out / rc.outputs.flatfile).string(), r.catalog);
  auto truth = create(out, rc.outputs.truth);
  io::write_truth(truth, r);
  if (rc.synth.grid && r.truth.cell_atten.size() > 0) {
    auto cells = create(out, rc.outputs.cell_truth);
    io::write_cell_truth(cells, *rc.synth.grid, r.truth);
  }
  log::info("synth: {} records, {} reflected cells", r.catalog.size(), r.truth.reflected_cells);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  log::init_from_env();
  CLI::App app{"Non-ergodic ground-motion model: fit, predict, synthesize"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for dense algebra")->check(CLI::PositiveNumber);

  std::string flatfile, config, model, scenarios, out, route = "direct";
  int draws = 0;
  std::uint64_t seed = 1;

  auto* fit = app.add_subcommand("fit", "Fit ergodic then non-ergodic model to a flatfile");
  fit->add_option("--flatfile", flatfile, "Input flatfile CSV")->required();
  fit->add_option("--config", config, "JSON run configuration");
  fit->add_option("--out", out, "Output directory")->required();

  auto* predict = app.add_subcommand("predict", "Predict median ground motion for scenarios");
  predict->add_option("--model", model, "Fit bundle written by fit")->required();
  predict->add_option("--scenarios", scenarios, "Scenario CSV")->required();
  predict->add_option("--out", out, "Output directory")->required();
  predict->add_option("--draws", draws, "Number of joint median draws")->check(CLI::NonNegativeNumber);
  predict->add_option("--seed", seed, "Seed for draws");
  predict->add_option("--route", route, "direct or composition")->check(CLI::IsMember({"direct", "composition"}));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic flatfile with known truth");
  synth->add_option("--config", config, "JSON run configuration");
  synth->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }
  Eigen::setNbThreads(threads);

  try {
    if (*fit) return run_fit(flatfile, config, out);
    if (*predict) return run_predict(model, scenarios, out, draws, seed, route);
    return run_synth(config, out);
  } catch (const OptimizationError& e) {
    std::cerr << "error: " << e.what() << " (" << e.trace().size() << " accepted iterates)\n";
    return kSolverError;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverError;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const OutOfBoundsError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ConstraintError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const HyperparameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
