#include "nergmm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nergmm/errors.hpp"
#include "nergmm/log.hpp"

namespace nergmm::io {

using json = nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::string at_line(const std::string& source, std::size_t line, const std::string& column) {
  return source + ": line " + std::to_string(line) + ", column '" + column + "'";
}

double parse_double(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw ValidationError(where + ": '" + raw + "' is not a number");
  }
  if (!std::isfinite(v)) throw ValidationError(where + ": value is not finite");
  return v;
}

std::int64_t parse_int(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw ValidationError(where + ": '" + raw + "' is not an integer id");
  }
  return v;
}

// Catalog validation speaks of "record k"; point at the file line instead.
Catalog validate_rows(const std::vector<Record>& raw, const std::string& source) {
  try {
    return validate_catalog(raw);
  } catch (const ValidationError& e) {
    static const std::regex rec("record ([0-9]+)");
    std::smatch m;
    std::string msg = e.what();
    if (std::regex_search(msg, m, rec)) {
      msg = m.prefix().str() + "line " + std::to_string(std::stoull(m[1].str()) + 2) + m.suffix().str();
    }
    throw ValidationError(source + ": " + msg);
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  return out;
}

const std::vector<std::string>& flatfile_columns() {
  static const std::vector<std::string> cols = split_csv(kFlatfileHeader);
  return cols;
}

void write_record_fields(std::ostream& out, const Record& r) {
  out << r.event_id << ',' << r.station_id << ',' << format_double(r.mag) << ',' << format_double(r.r_rup) << ','
      << format_double(r.vs30) << ',' << format_double(r.t_e.x) << ',' << format_double(r.t_e.y) << ','
      << format_double(r.t_s.x) << ',' << format_double(r.t_s.y) << ',' << format_double(r.y);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

Catalog parse_flatfile(std::istream& in, const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) throw ValidationError(source + ": empty file, expected header " + kFlatfileHeader);
  header = strip_cr(header);
  if (header != kFlatfileHeader) {
    const auto got = split_csv(header);
    for (const auto& c : flatfile_columns()) {
      if (std::find(got.begin(), got.end(), c) == got.end()) {
        throw ValidationError(source + ": missing column '" + c + "'");
      }
    }
    throw ValidationError(source + ": header must be exactly " + std::string(kFlatfileHeader));
  }
  const auto& cols = flatfile_columns();
  std::vector<Record> raw;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != cols.size()) {
      throw ValidationError(source + ": line " + std::to_string(lineno) + ": expected " +
                            std::to_string(cols.size()) + " fields, found " + std::to_string(f.size()));
    }
    Record r;
    r.event_id = parse_int(f[0], at_line(source, lineno, cols[0]));
    r.station_id = parse_int(f[1], at_line(source, lineno, cols[1]));
    double* dst[] = {&r.mag, &r.r_rup, &r.vs30, &r.t_e.x, &r.t_e.y, &r.t_s.x, &r.t_s.y, &r.y};
    for (std::size_t c = 2; c < cols.size(); ++c) *dst[c - 2] = parse_double(f[c], at_line(source, lineno, cols[c]));
    raw.push_back(r);
  }
  if (raw.empty()) throw ValidationError(source + ": no data rows");
  return validate_rows(raw, source);
}

Catalog read_flatfile(const std::string& path) {
  auto in = open_in(path);
  return parse_flatfile(in, path);
}

void write_flatfile(std::ostream& out, const Catalog& catalog) {
  out << kFlatfileHeader << '\n';
  for (const auto& r : catalog.records()) {
    write_record_fields(out, r);
    out << '\n';
  }
}

void write_flatfile(const std::string& path, const Catalog& catalog) {
  auto out = open_out(path);
  write_flatfile(out, catalog);
}

ScenarioTable parse_scenarios(std::istream& in, const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) throw ValidationError(source + ": empty file");
  const auto cols = split_csv(strip_cr(header));
  std::map<std::string, std::size_t> pos;
  static const std::set<std::string> known = {"scenario_id", "mag", "rrup", "vs30", "eqx", "eqy",
                                              "stax", "stay", "eqid", "ssn"};
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const std::string name = trim(cols[c]);
    if (!known.count(name)) throw ValidationError(source + ": unknown column '" + name + "'");
    if (!pos.emplace(name, c).second) throw ValidationError(source + ": duplicate column '" + name + "'");
  }
  for (const char* req : {"mag", "rrup", "vs30", "eqx", "eqy", "stax", "stay"}) {
    if (!pos.count(req)) throw ValidationError(source + ": missing column '" + std::string(req) + "'");
  }
  ScenarioTable t;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != cols.size()) {
      throw ValidationError(source + ": line " + std::to_string(lineno) + ": expected " +
                            std::to_string(cols.size()) + " fields, found " + std::to_string(f.size()));
    }
    auto num = [&](const char* c) { return parse_double(f[pos.at(c)], at_line(source, lineno, c)); };
    auto id = [&](const char* c) -> std::optional<std::int64_t> {
      auto it = pos.find(c);
      if (it == pos.end() || trim(f[it->second]).empty()) return std::nullopt;
      return parse_int(f[it->second], at_line(source, lineno, c));
    };
    Scenario s;
    s.mag = num("mag");
    s.r_rup = num("rrup");
    s.vs30 = num("vs30");
    s.t_e = {num("eqx"), num("eqy")};
    s.t_s = {num("stax"), num("stay")};
    s.event_id = id("eqid");
    s.station_id = id("ssn");
    if (!(s.r_rup > 0.0) || !(s.vs30 > 0.0)) {
      throw ValidationError(source + ": line " + std::to_string(lineno) + ": rrup and vs30 must be > 0");
    }
    const auto sid = pos.find("scenario_id");
    t.labels.push_back(sid != pos.end() ? trim(f[sid->second]) : std::to_string(t.scenarios.size()));
    t.scenarios.push_back(s);
  }
  if (t.scenarios.empty()) throw ValidationError(source + ": no scenario rows");
  return t;
}

ScenarioTable read_scenarios(const std::string& path) {
  auto in = open_in(path);
  return parse_scenarios(in, path);
}

void write_scenarios(std::ostream& out, const ScenarioTable& table) {
  out << "scenario_id,mag,rrup,vs30,eqx,eqy,stax,stay,eqid,ssn\n";
  for (std::size_t j = 0; j < table.scenarios.size(); ++j) {
    const Scenario& s = table.scenarios[j];
    out << (j < table.labels.size() ? table.labels[j] : std::to_string(j)) << ',' << format_double(s.mag) << ','
        << format_double(s.r_rup) << ',' << format_double(s.vs30) << ',' << format_double(s.t_e.x) << ','
        << format_double(s.t_e.y) << ',' << format_double(s.t_s.x) << ',' << format_double(s.t_s.y) << ',';
    if (s.event_id) out << *s.event_id;
    out << ',';
    if (s.station_id) out << *s.station_id;
    out << '\n';
  }
}

void write_truth(std::ostream& out, const SynthResult& result) {
  const auto& t = result.truth;
  out << kFlatfileHeader << ",f_erg,dL2L,dP2P,dS2S,dB,dWS\n";
  const Catalog& c = result.catalog;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    write_record_fields(out, c.records()[k]);
    out << ',' << format_double(t.f_erg(i)) << ',' << format_double(t.dL2L(i)) << ',' << format_double(t.dP2P(i))
        << ',' << format_double(t.dS2S(i)) << ','
        << format_double(t.event_terms(static_cast<Eigen::Index>(c.event_index(k)))) << ','
        << format_double(t.within(i)) << '\n';
  }
}

void write_cell_truth(std::ostream& out, const CellGrid& grid, const GroundTruth& truth) {
  out << "cell,x,y,c_ca\n";
  for (std::size_t c = 0; c < grid.n_cells() && static_cast<Eigen::Index>(c) < truth.cell_atten.size(); ++c) {
    const Point2 p = grid.center(c);
    out << c << ',' << format_double(p.x) << ',' << format_double(p.y) << ','
        << format_double(truth.cell_atten(static_cast<Eigen::Index>(c))) << '\n';
  }
}

// ---- JSON helpers -------------------------------------------------------

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
      throw ValidationError("config: unknown key '" + it.key() + "' in '" + where + "'");
    }
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void read_pair(const json& j, const char* key, double& lo, double& hi) {
  if (!j.contains(key)) return;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 2) throw ValidationError(std::string("config: '") + key + "' must be [lo, hi]");
  lo = a[0].get<double>();
  hi = a[1].get<double>();
}

json coeffs_json(const ErgodicCoeffs& c) {
  return {{"c1", c.c1}, {"c2", c.c2}, {"c3", c.c3}, {"c4", c.c4}, {"c5", c.c5}, {"c6", c.c6},
          {"c7", c.c7}, {"c10", c.c10}, {"v_ref", c.v_ref}, {"full_saturation", c.full_saturation}};
}

ErgodicCoeffs coeffs_from(const json& j, ErgodicCoeffs c) {
  only_keys(j, "coefficients", {"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c10", "v_ref", "full_saturation"});
  read_opt(j, "c1", c.c1);
  read_opt(j, "c2", c.c2);
  read_opt(j, "c3", c.c3);
  read_opt(j, "c4", c.c4);
  read_opt(j, "c5", c.c5);
  read_opt(j, "c6", c.c6);
  read_opt(j, "c7", c.c7);
  read_opt(j, "c10", c.c10);
  read_opt(j, "v_ref", c.v_ref);
  read_opt(j, "full_saturation", c.full_saturation);
  if (c.full_saturation) c = apply_full_saturation(c);
  return c;
}

json optimizer_json(const BoxOptimizerOptions& o) {
  return {{"rho_begin", o.rho_begin}, {"rho_end", o.rho_end}, {"max_evals", o.max_evals},
          {"ftol_rel", o.ftol_rel},   {"ftol_abs", o.ftol_abs}};
}

void optimizer_from(const json& j, BoxOptimizerOptions& o) {
  only_keys(j, "optimizer", {"rho_begin", "rho_end", "max_evals", "ftol_rel", "ftol_abs"});
  read_opt(j, "rho_begin", o.rho_begin);
  read_opt(j, "rho_end", o.rho_end);
  read_opt(j, "max_evals", o.max_evals);
  read_opt(j, "ftol_rel", o.ftol_rel);
  read_opt(j, "ftol_abs", o.ftol_abs);
  if (!(o.rho_begin > 0.0) || !(o.rho_end > 0.0) || o.rho_end > o.rho_begin || o.max_evals < 1) {
    throw ValidationError("config: optimizer needs 0 < rho_end <= rho_begin and max_evals >= 1");
  }
}

json grid_json(const CellGrid& g) {
  return {{"origin_x", g.origin.x}, {"origin_y", g.origin.y}, {"dx", g.dx}, {"dy", g.dy}, {"nx", g.nx}, {"ny", g.ny}};
}

CellGrid grid_from(const json& j) {
  only_keys(j, "grid", {"origin_x", "origin_y", "dx", "dy", "nx", "ny"});
  return parse_grid_text(j.dump());
}

json kernel_json(const Kernel& k) {
  json o = {{"kind", to_string(k.kind)}, {"omega", k.omega}};
  if (has_length_scale(k.kind)) o["ell"] = k.ell;
  return o;
}

Kernel kernel_from(const json& j, const std::string& where) {
  only_keys(j, where, {"kind", "omega", "ell", "omega_bounds", "ell_bounds"});
  Kernel k;
  k.kind = kernel_kind_from_string(j.at("kind").get<std::string>());
  k.omega = j.at("omega").get<double>();
  if (has_length_scale(k.kind)) {
    if (!j.contains("ell")) throw ValidationError("config: " + where + " needs 'ell'");
    k.ell = j.at("ell").get<double>();
  } else if (j.contains("ell") || j.contains("ell_bounds")) {
    throw ValidationError("config: " + where + ": kernel '" + to_string(k.kind) + "' has no length scale");
  }
  return k;
}

json spec_json(const ModelSpec& s) {
  json terms = json::array();
  for (const auto& t : s.terms) {
    json ks = json::array();
    for (std::size_t p = 0; p < t.kernels.size(); ++p) {
      json k = kernel_json(t.kernels[p]);
      if (!t.bounds.empty()) {
        const KernelBounds& b = t.bound(p);
        k["omega_bounds"] = {b.omega_lower, b.omega_upper};
        if (has_length_scale(t.kernels[p].kind)) k["ell_bounds"] = {b.ell_lower, b.ell_upper};
      }
      ks.push_back(k);
    }
    terms.push_back({{"name", t.name},
                     {"role", to_string(t.role)},
                     {"design", to_string(t.design)},
                     {"input", to_string(t.input)},
                     {"kernels", ks}});
  }
  return {{"terms", terms}, {"tau0_init", s.tau0_init}, {"phi0_init", s.phi0_init},
          {"sd_bounds", {s.sd_lower, s.sd_upper}}};
}

ModelSpec spec_from(const json& j) {
  only_keys(j, "model", {"preset", "terms", "tau0_init", "phi0_init", "sd_bounds"});
  ModelSpec s;
  const bool preset = j.value("preset", false);
  if (preset && j.contains("terms")) throw ValidationError("config: 'model' has both 'preset' and 'terms'");
  if (preset) s = ModelSpec::preset();
  if (j.contains("terms")) {
    for (const auto& tj : j.at("terms")) {
      const std::string where = "model.terms[" + std::to_string(s.terms.size()) + "]";
      only_keys(tj, where, {"name", "role", "design", "input", "kernels"});
      TermSpec t;
      t.name = tj.at("name").get<std::string>();
      t.role = term_role_from_string(tj.at("role").get<std::string>());
      t.design = design_column_from_string(tj.value("design", std::string("constant")));
      t.input = input_key_from_string(tj.at("input").get<std::string>());
      bool any_bounds = false;
      for (const auto& kj : tj.at("kernels")) {
        const std::string kw = where + ".kernels[" + std::to_string(t.kernels.size()) + "]";
        t.kernels.push_back(kernel_from(kj, kw));
        KernelBounds b;
        read_pair(kj, "omega_bounds", b.omega_lower, b.omega_upper);
        read_pair(kj, "ell_bounds", b.ell_lower, b.ell_upper);
        any_bounds = any_bounds || kj.contains("omega_bounds") || kj.contains("ell_bounds");
        t.bounds.push_back(b);
      }
      if (!any_bounds) t.bounds.clear();
      s.terms.push_back(std::move(t));
    }
  }
  read_opt(j, "tau0_init", s.tau0_init);
  read_opt(j, "phi0_init", s.phi0_init);
  read_pair(j, "sd_bounds", s.sd_lower, s.sd_upper);
  s.validate(true);
  return s;
}

json hyper_json(const ModelSpec& spec, const Hyperparameters& h) {
  json terms = json::object();
  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    json ks = json::array();
    for (const auto& k : h.kernels[i]) ks.push_back(kernel_json(k));
    terms[spec.terms[i].name] = ks;
  }
  return {{"tau0", h.tau0}, {"phi0", h.phi0}, {"terms", terms}};
}

// Values not given keep the model spec's starting values.
Hyperparameters hyper_terms_from(const json& j, const ModelSpec& spec, const std::string& where) {
  Hyperparameters h = Hyperparameters::initial(spec);
  if (!j.is_object()) throw ValidationError("config: '" + where + "' must be an object");
  for (const char* k : {"tau0", "phi0"}) {
    if (j.contains(k) && !j.at(k).is_number()) throw ValidationError("config: '" + where + "." + k + "' must be a number");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "tau0" && it.key() != "phi0" && it.key() != "terms") {
      throw ValidationError("config: unknown key '" + it.key() + "' in '" + where + "'");
    }
  }
  read_opt(j, "tau0", h.tau0);
  read_opt(j, "phi0", h.phi0);
  if (!j.contains("terms")) return h;
  const json& tj = j.at("terms");
  if (!tj.is_object()) throw ValidationError("config: '" + where + ".terms' must be an object");
  for (auto it = tj.begin(); it != tj.end(); ++it) {
    const auto i = spec.find(it.key());
    if (!i) throw ValidationError("config: '" + where + ".terms' names unknown term '" + it.key() + "'");
    const json& ks = it.value();
    if (!ks.is_array() || ks.size() != spec.terms[*i].kernels.size()) {
      throw ValidationError("config: '" + where + ".terms." + it.key() + "' needs one entry per kernel");
    }
    for (std::size_t p = 0; p < ks.size(); ++p) {
      const std::string kw = where + ".terms." + it.key() + "[" + std::to_string(p) + "]";
      only_keys(ks[p], kw, {"kind", "omega", "ell"});
      Kernel& k = h.kernels[*i][p];
      if (ks[p].contains("kind") && kernel_kind_from_string(ks[p].at("kind").get<std::string>()) != k.kind) {
        throw ValidationError("config: " + kw + ": kernel kind does not match the model");
      }
      read_opt(ks[p], "omega", k.omega);
      read_opt(ks[p], "ell", k.ell);
    }
  }
  return h;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig rc;
  try {
    const json j = json::parse(text);
    only_keys(j, "<root>", {"coefficients", "ergodic_fit", "model", "grid", "mu_ca", "nerg_fit", "seed", "synth",
                            "outputs"});
    if (j.contains("coefficients")) rc.coeffs = coeffs_from(j.at("coefficients"), rc.coeffs);
    try {
      check_coeffs(rc.coeffs);
    } catch (const ConstraintError& e) {
      throw ValidationError(std::string("config: coefficients: ") + e.what());
    }
    rc.ergodic.start = rc.coeffs;
    if (j.contains("ergodic_fit")) {
      const json& e = j.at("ergodic_fit");
      only_keys(e, "ergodic_fit", {"estimate_c6", "c6_bounds", "sd_bounds", "tau_init", "phi_init", "optimizer"});
      read_opt(e, "estimate_c6", rc.ergodic.estimate_c6);
      read_pair(e, "c6_bounds", rc.ergodic.c6_lower, rc.ergodic.c6_upper);
      read_pair(e, "sd_bounds", rc.ergodic.sd_lower, rc.ergodic.sd_upper);
      read_opt(e, "tau_init", rc.ergodic.tau_init);
      read_opt(e, "phi_init", rc.ergodic.phi_init);
      if (e.contains("optimizer")) optimizer_from(e.at("optimizer"), rc.ergodic.optimizer);
    }
    if (j.contains("model")) rc.spec = spec_from(j.at("model"));
    if (j.contains("grid") && !j.at("grid").is_null()) rc.grid = grid_from(j.at("grid"));
    if (j.contains("mu_ca")) rc.mu_ca = j.at("mu_ca").get<double>();
    if (rc.mu_ca && !(*rc.mu_ca <= 0.0)) throw ValidationError("config: mu_ca must be <= 0");
    if (j.contains("nerg_fit")) {
      const json& n = j.at("nerg_fit");
      only_keys(n, "nerg_fit", {"optimizer", "prior_scale"});
      if (n.contains("optimizer")) optimizer_from(n.at("optimizer"), rc.nerg.optimizer);
      read_opt(n, "prior_scale", rc.nerg.prior_scale);
    }
    if (j.contains("seed")) rc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("outputs")) {
      const json& o = j.at("outputs");
      only_keys(o, "outputs",
                {"bundle", "report", "flatfile", "truth", "cell_truth", "predictions", "covariance", "draws"});
      read_opt(o, "bundle", rc.outputs.bundle);
      read_opt(o, "report", rc.outputs.report);
      read_opt(o, "flatfile", rc.outputs.flatfile);
      read_opt(o, "truth", rc.outputs.truth);
      read_opt(o, "cell_truth", rc.outputs.cell_truth);
      read_opt(o, "predictions", rc.outputs.predictions);
      read_opt(o, "covariance", rc.outputs.covariance);
      read_opt(o, "draws", rc.outputs.draws);
    }

    SynthConfig& s = rc.synth;
    s = SynthConfig::with_preset();
    if (j.contains("model")) s.truth = Hyperparameters::initial(rc.spec);
    if (j.contains("synth")) {
      const json& sj = j.at("synth");
      only_keys(sj, "synth", {"region", "n_events", "n_stations", "stations_per_event", "magnitude_range",
                              "distance_range", "vs30_range", "truth"});
      if (sj.contains("region")) {
        const json& r = sj.at("region");
        only_keys(r, "synth.region", {"origin_x", "origin_y", "width", "height"});
        read_opt(r, "origin_x", s.region_origin.x);
        read_opt(r, "origin_y", s.region_origin.y);
        read_opt(r, "width", s.region_width);
        read_opt(r, "height", s.region_height);
      }
      read_opt(sj, "n_events", s.n_events);
      read_opt(sj, "n_stations", s.n_stations);
      if (sj.contains("stations_per_event")) {
        const json& a = sj.at("stations_per_event");
        if (!a.is_array() || a.size() != 2) throw ValidationError("config: 'stations_per_event' must be [min, max]");
        s.min_stations_per_event = a[0].get<std::size_t>();
        s.max_stations_per_event = a[1].get<std::size_t>();
      }
      read_pair(sj, "magnitude_range", s.mag_min, s.mag_max);
      read_pair(sj, "distance_range", s.r_min, s.r_max);
      read_pair(sj, "vs30_range", s.vs30_min, s.vs30_max);
      if (sj.contains("truth")) s.truth = hyper_terms_from(sj.at("truth"), rc.spec, "synth.truth");
    }
    s.spec = rc.spec;
    s.coeffs = rc.coeffs;
    if (!rc.grid && rc.spec.path_term()) {
      CellGrid g;
      g.origin = s.region_origin;
      g.nx = kDefaultGridCells;
      g.ny = kDefaultGridCells;
      g.dx = s.region_width / static_cast<double>(g.nx);
      g.dy = s.region_height / static_cast<double>(g.ny);
      rc.grid = g;
    }
    s.grid = rc.grid;
    s.mu_ca = rc.mu_ca;
    s.seed = rc.seed;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  } catch (const HyperparameterError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return rc;
}

RunConfig read_run_config(const std::string& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string run_config_json(const RunConfig& rc) {
  json j;
  j["coefficients"] = coeffs_json(rc.coeffs);
  j["ergodic_fit"] = {{"estimate_c6", rc.ergodic.estimate_c6},
                      {"c6_bounds", {rc.ergodic.c6_lower, rc.ergodic.c6_upper}},
                      {"sd_bounds", {rc.ergodic.sd_lower, rc.ergodic.sd_upper}},
                      {"tau_init", rc.ergodic.tau_init},
                      {"phi_init", rc.ergodic.phi_init},
                      {"optimizer", optimizer_json(rc.ergodic.optimizer)}};
  j["model"] = spec_json(rc.spec);
  if (rc.grid) j["grid"] = grid_json(*rc.grid);
  if (rc.mu_ca) j["mu_ca"] = *rc.mu_ca;
  j["nerg_fit"] = {{"optimizer", optimizer_json(rc.nerg.optimizer)}, {"prior_scale", rc.nerg.prior_scale}};
  j["seed"] = rc.seed;
  const SynthConfig& s = rc.synth;
  j["synth"] = {{"region",
                 {{"origin_x", s.region_origin.x},
                  {"origin_y", s.region_origin.y},
                  {"width", s.region_width},
                  {"height", s.region_height}}},
                {"n_events", s.n_events},
                {"n_stations", s.n_stations},
                {"stations_per_event", {s.min_stations_per_event, s.max_stations_per_event}},
                {"magnitude_range", {s.mag_min, s.mag_max}},
                {"distance_range", {s.r_min, s.r_max}},
                {"vs30_range", {s.vs30_min, s.vs30_max}},
                {"truth", hyper_json(rc.spec, s.truth)}};
  j["outputs"] = {{"bundle", rc.outputs.bundle},         {"report", rc.outputs.report},
                  {"flatfile", rc.outputs.flatfile},     {"truth", rc.outputs.truth},
                  {"cell_truth", rc.outputs.cell_truth}, {"predictions", rc.outputs.predictions},
                  {"covariance", rc.outputs.covariance}, {"draws", rc.outputs.draws}};
  return j.dump(2);
}

// ---- bundle -------------------------------------------------------------

void save_bundle(std::ostream& out, const NergFit& fit, const std::optional<ErgodicFit>& ergodic) {
  const Catalog& c = fit.data.catalog;
  json rec;
  std::vector<std::int64_t> eq, ss;
  std::vector<double> mag, rrup, vs30, eqx, eqy, stax, stay, res;
  for (const auto& r : c.records()) {
    eq.push_back(r.event_id);
    ss.push_back(r.station_id);
    mag.push_back(r.mag);
    rrup.push_back(r.r_rup);
    vs30.push_back(r.vs30);
    eqx.push_back(r.t_e.x);
    eqy.push_back(r.t_e.y);
    stax.push_back(r.t_s.x);
    stay.push_back(r.t_s.y);
    res.push_back(r.y);
  }
  rec = {{"eqid", eq},   {"ssn", ss},   {"mag", mag},   {"rrup", rrup}, {"vs30", vs30},
         {"eqx", eqx},   {"eqy", eqy},  {"stax", stax}, {"stay", stay}, {"residual", res}};
  json j;
  j["magic"] = kBundleMagic;
  j["schema_version"] = kBundleSchema;
  j["coefficients"] = coeffs_json(fit.data.coeffs);
  j["mu_ca"] = fit.data.mu_ca;
  j["grid"] = fit.data.grid ? grid_json(*fit.data.grid) : json(nullptr);
  j["model"] = spec_json(fit.spec);
  j["hyperparameters"] = hyper_json(fit.spec, fit.hyper);
  j["records"] = rec;
  j["fit"] = {{"loglik", fit.loglik},
              {"objective", fit.objective},
              {"evals", fit.evals},
              {"trace", fit.trace},
              {"variance",
               {{"ergodic_sigma", fit.variance.ergodic_sigma},
                {"omega2_eff", fit.variance.omega2_eff},
                {"nerg_sigma", fit.variance.nerg_sigma},
                {"rel_diff", fit.variance.rel_diff}}}};
  if (ergodic) {
    j["ergodic"] = {{"coefficients", coeffs_json(ergodic->coeffs)},
                    {"tau", ergodic->tau},
                    {"phi", ergodic->phi},
                    {"loglik", ergodic->loglik}};
  }
  out << j.dump() << '\n';
}

void save_bundle(const std::string& path, const NergFit& fit, const std::optional<ErgodicFit>& ergodic) {
  auto out = open_out(path);
  save_bundle(out, fit, ergodic);
}

NergFit load_bundle(std::istream& in) {
  try {
    const json j = json::parse(in);
    if (!j.is_object() || j.value("magic", std::string()) != kBundleMagic) {
      throw ValidationError("not a fit bundle (bad magic string)");
    }
    const int version = j.at("schema_version").get<int>();
    if (version != kBundleSchema) {
      throw ValidationError("fit bundle schema " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kBundleSchema) + ")");
    }
    const ErgodicCoeffs coeffs = coeffs_from(j.at("coefficients"), ErgodicCoeffs{});
    const ModelSpec spec = spec_from(j.at("model"));
    const Hyperparameters hyper = hyper_terms_from(j.at("hyperparameters"), spec, "hyperparameters");
    std::optional<CellGrid> grid;
    if (!j.at("grid").is_null()) grid = grid_from(j.at("grid"));

    const json& r = j.at("records");
    const auto eq = r.at("eqid").get<std::vector<std::int64_t>>();
    const auto ss = r.at("ssn").get<std::vector<std::int64_t>>();
    const auto col = [&](const char* k) { return r.at(k).get<std::vector<double>>(); };
    const auto mag = col("mag"), rrup = col("rrup"), vs30 = col("vs30"), eqx = col("eqx"), eqy = col("eqy"),
               stax = col("stax"), stay = col("stay"), res = col("residual");
    const std::size_t n = eq.size();
    for (const auto* v : {&mag, &rrup, &vs30, &eqx, &eqy, &stax, &stay, &res}) {
      if (v->size() != n || ss.size() != n) throw ValidationError("fit bundle record columns differ in length");
    }
    std::vector<Record> raw(n);
    for (std::size_t k = 0; k < n; ++k) {
      raw[k] = {eq[k], ss[k], mag[k], rrup[k], vs30[k], {eqx[k], eqy[k]}, {stax[k], stay[k]}, res[k]};
    }
    const NergData data = prepare_nerg_data(validate_catalog(raw), spec, coeffs, grid, j.at("mu_ca").get<double>());
    NergFit fit = condition_nerg(data, spec, hyper);

    const json& f = j.at("fit");
    const double saved = f.at("loglik").get<double>();
    if (std::abs(saved - fit.loglik) > 1e-8 * (1.0 + std::abs(saved))) {
      log::warn("fit bundle: recomputed loglik {} differs from the saved {}", fit.loglik, saved);
    }
    fit.objective = f.at("objective").get<double>();
    fit.evals = f.at("evals").get<int>();
    fit.trace = f.at("trace").get<std::vector<double>>();
    const json& v = f.at("variance");
    fit.variance = {v.at("ergodic_sigma").get<double>(), v.at("omega2_eff").get<double>(),
                    v.at("nerg_sigma").get<double>(), v.at("rel_diff").get<double>()};
    return fit;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("fit bundle: ") + e.what());
  } catch (const HyperparameterError& e) {
    throw ValidationError(std::string("fit bundle: ") + e.what());
  }
}

NergFit load_bundle(const std::string& path) {
  auto in = open_in(path);
  try {
    return load_bundle(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_predictions(std::ostream& out, const std::vector<std::string>& labels, const GmPrediction& p) {
  out << "scenario_id,median_lnY,sd_epistemic,dL2L,dP2P,dS2S,tau0,phi0\n";
  const Eigen::VectorXd sd = p.sd();
  for (Eigen::Index j = 0; j < p.median.size(); ++j) {
    const auto u = static_cast<std::size_t>(j);
    out << (u < labels.size() ? labels[u] : std::to_string(j)) << ',' << format_double(p.median(j)) << ','
        << format_double(sd(j)) << ',' << format_double(p.dL2L(j)) << ',' << format_double(p.dP2P(j)) << ','
        << format_double(p.dS2S(j)) << ',' << format_double(p.tau0) << ',' << format_double(p.phi0) << '\n';
  }
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m, const std::vector<std::string>& header) {
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  if (!header.empty()) out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
}

}  // namespace nergmm::io
