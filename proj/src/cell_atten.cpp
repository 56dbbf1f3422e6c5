#include "nergmm/cell_atten.hpp"

#include <algorithm>
#include <charconv>
#include <string_view>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "json.hpp"
#include "nergmm/errors.hpp"
#include "nergmm/log.hpp"

namespace nergmm {

namespace {

std::string point_str(const Point2& p) {
  std::ostringstream os;
  os << "(" << p.x << ", " << p.y << ")";
  return os.str();
}

std::size_t clamp_index(double u, std::size_t n) {
  const double f = std::floor(u);
  if (f < 0.0) return 0;
  if (f >= static_cast<double>(n)) return n - 1;
  return static_cast<std::size_t>(f);
}

}  // namespace

void CellGrid::validate() const {
  if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy)) {
    throw ValidationError("cell grid needs dx, dy > 0");
  }
  if (nx < 1 || ny < 1) throw ValidationError("cell grid needs nx, ny >= 1");
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) {
    throw ValidationError("cell grid origin must be finite");
  }
}

bool CellGrid::contains(const Point2& p) const noexcept {
  return p.x >= origin.x && p.x <= x_max() && p.y >= origin.y && p.y <= y_max();
}

Point2 CellGrid::center(std::size_t cell) const {
  const std::size_t ix = cell % nx;
  const std::size_t iy = cell / nx;
  return {origin.x + (static_cast<double>(ix) + 0.5) * dx,
          origin.y + (static_cast<double>(iy) + 0.5) * dy};
}

std::vector<Point2> CellGrid::centers() const {
  std::vector<Point2> out(n_cells());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = center(c);
  return out;
}

CellGrid parse_grid_text(const std::string& text) {
  std::map<std::string, double> kv;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const auto j = nlohmann::json::parse(text);
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it->is_number()) throw ValidationError("grid key '" + it.key() + "' must be numeric");
      kv[it.key()] = it->get<double>();
    }
  } else {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
          throw ValidationError("grid file: malformed line '" + line + "'");
        }
        continue;
      }
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      try {
        std::size_t used = 0;
        kv[key] = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
      } catch (const std::exception&) {
        throw ValidationError("grid key '" + key + "' has non-numeric value '" + val + "'");
      }
    }
  }

  static const char* const kKeys[] = {"origin_x", "origin_y", "dx", "dy", "nx", "ny"};
  for (const auto& [k, v] : kv) {
    if (std::find(std::begin(kKeys), std::end(kKeys), k) == std::end(kKeys)) {
      throw ValidationError("grid file: unknown key '" + k + "'");
    }
  }
  for (const char* k : kKeys) {
    if (!kv.count(k)) throw ValidationError(std::string("grid file: missing key '") + k + "'");
  }
  auto count = [&](const char* k) {
    const double v = kv.at(k);
    if (v < 1.0 || v != std::floor(v)) {
      throw ValidationError(std::string("grid key '") + k + "' must be a positive integer");
    }
    return static_cast<std::size_t>(v);
  };
  CellGrid g;
  g.origin = {kv.at("origin_x"), kv.at("origin_y")};
  g.dx = kv.at("dx");
  g.dy = kv.at("dy");
  g.nx = count("nx");
  g.ny = count("ny");
  g.validate();
  return g;
}

CellGrid read_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open grid file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid_text(ss.str());
}

double PathSegments::total() const {
  double s = 0.0;
  for (const auto& [c, len] : cells) s += len;
  return s;
}

PathSegments segment_path(const CellGrid& grid, const Point2& source, const Point2& site) {
  grid.validate();
  if (!grid.contains(source)) {
    throw OutOfBoundsError("path source " + point_str(source) + " lies outside the cell grid");
  }
  if (!grid.contains(site)) {
    throw OutOfBoundsError("path site " + point_str(site) + " lies outside the cell grid");
  }

  PathSegments out;
  out.source = source;
  out.site = site;
  const double length = distance(source, site);
  if (length == 0.0) return out;

  const double vx = site.x - source.x;
  const double vy = site.y - source.y;
  const int step_x = vx > 0.0 ? 1 : (vx < 0.0 ? -1 : 0);
  const int step_y = vy > 0.0 ? 1 : (vy < 0.0 ? -1 : 0);

  auto ix = static_cast<long>(clamp_index((source.x - grid.origin.x) / grid.dx, grid.nx));
  auto iy = static_cast<long>(clamp_index((source.y - grid.origin.y) / grid.dy, grid.ny));
  const auto nx = static_cast<long>(grid.nx);
  const auto ny = static_cast<long>(grid.ny);
  constexpr double inf = std::numeric_limits<double>::infinity();

  // Crossing parameters are recomputed from the boundary coordinate at every
  // step rather than accumulated, so errors do not build up along the ray.
  double t = 0.0;
  while (t < 1.0) {
    double tx = inf;
    if (step_x != 0) {
      const double bx = grid.origin.x + static_cast<double>(ix + (step_x > 0 ? 1 : 0)) * grid.dx;
      tx = (bx - source.x) / vx;
    }
    double ty = inf;
    if (step_y != 0) {
      const double by = grid.origin.y + static_cast<double>(iy + (step_y > 0 ? 1 : 0)) * grid.dy;
      ty = (by - source.y) / vy;
    }
    const double t_next = std::min({tx, ty, 1.0});
    if (t_next > t) {
      out.cells.emplace_back(static_cast<std::size_t>(iy * nx + ix), (t_next - t) * length);
      t = t_next;
    }
    if (t_next >= 1.0) break;
    if (tx <= t_next) ix += step_x;
    if (ty <= t_next) iy += step_y;
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) break;  // round-off at the far edge
  }

  std::sort(out.cells.begin(), out.cells.end());
  // A cell can only be entered once by a straight ray, but merge defensively
  // against round-off re-entries at corners.
  std::vector<std::pair<std::size_t, double>> merged;
  for (const auto& e : out.cells) {
    if (!merged.empty() && merged.back().first == e.first) {
      merged.back().second += e.second;
    } else {
      merged.push_back(e);
    }
  }
  out.cells = std::move(merged);
  return out;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> assemble_dR(const CellGrid& grid,
                                                         const Catalog& catalog,
                                                         PathOrigin /*origin*/) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    const Record& r = catalog.records()[k];
    PathSegments seg;
    try {
      seg = segment_path(grid, r.t_e, r.t_s);
    } catch (const OutOfBoundsError& e) {
      throw OutOfBoundsError("record " + std::to_string(k) + " (event " +
                             std::to_string(r.event_id) + ", station " +
                             std::to_string(r.station_id) + "): " + e.what());
    }
    for (const auto& [cell, len] : seg.cells) {
      trip.emplace_back(static_cast<int>(k), static_cast<int>(cell), len);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> dR(static_cast<Eigen::Index>(catalog.size()),
                                                  static_cast<Eigen::Index>(grid.n_cells()));
  dR.setFromTriplets(trip.begin(), trip.end());
  return dR;
}

void write_dR_csv(std::ostream& os, const Eigen::SparseMatrix<double, Eigen::RowMajor>& dR) {
  os << "record_index,cell_index,length_km\n";
  char buf[64];
  for (Eigen::Index k = 0; k < dR.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(dR, k); it; ++it) {
      const auto res = std::to_chars(buf, buf + sizeof buf, it.value());
      os << it.row() << ',' << it.col() << ',' << std::string_view(buf, res.ptr) << '\n';
    }
  }
}

double f_atten(const PathSegments& segments, const Eigen::VectorXd& c_ca) {
  double s = 0.0;
  for (const auto& [cell, len] : segments.cells) {
    if (static_cast<Eigen::Index>(cell) >= c_ca.size()) {
      throw DimensionError("path references a cell beyond the attenuation vector");
    }
    s += c_ca(static_cast<Eigen::Index>(cell)) * len;
  }
  return s;
}

double f_atten(const Eigen::SparseVector<double>& dR_row, const Eigen::VectorXd& c_ca) {
  if (dR_row.size() != c_ca.size()) {
    throw DimensionError("path-segment vector and attenuation vector differ in length");
  }
  double s = 0.0;
  for (Eigen::SparseVector<double>::InnerIterator it(dR_row); it; ++it) {
    s += it.value() * c_ca(it.index());
  }
  return s;
}

Eigen::MatrixXd atten_prior_cov(const CellGrid& grid, const KernelExpr& kernel) {
  grid.validate();
  std::vector<KernelInput> t_c;
  t_c.reserve(grid.n_cells());
  for (const auto& p : grid.centers()) t_c.emplace_back(p);
  return kernel_matrix(kernel, t_c, t_c);
}

std::pair<Eigen::VectorXd, ClampReport> clamp_and_report(const Eigen::VectorXd& mu_ca) {
  Eigen::VectorXd out = mu_ca;
  ClampReport rep;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out(i) > 0.0) {
      rep.cells.push_back(static_cast<std::size_t>(i));
      rep.pre_clamp.push_back(out(i));
      out(i) = 0.0;
    }
  }
  rep.fraction = out.size() > 0 ? static_cast<double>(rep.count()) / static_cast<double>(out.size())
                                : 0.0;
  rep.quality_warning = rep.fraction > 0.05;
  if (rep.quality_warning) {
    log::warn("{} of {} cells ({:.1f}%) had positive attenuation and were clamped to zero",
              rep.count(), out.size(), 100.0 * rep.fraction);
  }
  return {out, rep};
}

}  // namespace nergmm
