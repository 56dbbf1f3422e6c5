#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nergmm/kernels.hpp"
#include "nergmm/types.hpp"

namespace nergmm {

/// Regular rectangular grid of attenuation cells. Cell (ix, iy) has linear
/// index iy * nx + ix; its coordinate t_C is the cell center.
struct CellGrid {
  Point2 origin;
  double dx = 1.0;
  double dy = 1.0;
  std::size_t nx = 1;
  std::size_t ny = 1;

  void validate() const;

  std::size_t n_cells() const noexcept { return nx * ny; }
  double x_max() const noexcept { return origin.x + dx * static_cast<double>(nx); }
  double y_max() const noexcept { return origin.y + dy * static_cast<double>(ny); }
  bool contains(const Point2& p) const noexcept;
  Point2 center(std::size_t cell) const;
  std::vector<Point2> centers() const;

  friend bool operator==(const CellGrid&, const CellGrid&) = default;
};

/// Reads `key = value` or JSON grid definitions with keys
/// origin_x, origin_y, dx, dy, nx, ny.
CellGrid read_grid_file(const std::string& path);
CellGrid parse_grid_text(const std::string& text);

/// Cell-path lengths of one straight ray, sorted by cell index.
struct PathSegments {
  std::vector<std::pair<std::size_t, double>> cells;  // (cell index, km)
  Point2 source;
  Point2 site;

  double total() const;
};

/// Lengths of the straight source -> site ray inside each traversed cell.
/// Corner crossings contribute zero-length pieces to neither neighbour.
/// Throws OutOfBoundsError when an endpoint lies outside the grid.
PathSegments segment_path(const CellGrid& grid, const Point2& source, const Point2& site);

/// records x cells matrix of path segments. Row k is segment_path of record k.
/// Records carry a single source point, so both origin conventions start the
/// ray at t_E.
Eigen::SparseMatrix<double, Eigen::RowMajor> assemble_dR(const CellGrid& grid,
                                                         const Catalog& catalog,
                                                         PathOrigin origin = PathOrigin::closest_point);

/// Writes `record_index,cell_index,length_km` rows.
void write_dR_csv(std::ostream& os, const Eigen::SparseMatrix<double, Eigen::RowMajor>& dR);

/// Total anelastic attenuation c_ca . dR.
double f_atten(const PathSegments& segments, const Eigen::VectorXd& c_ca);
double f_atten(const Eigen::SparseVector<double>& dR_row, const Eigen::VectorXd& c_ca);

/// n_cells x n_cells prior covariance evaluated at cell centers.
Eigen::MatrixXd atten_prior_cov(const CellGrid& grid, const KernelExpr& kernel);

/// Posterior summary of the per-cell attenuation coefficients.
struct CellAttenPosterior {
  Eigen::VectorXd mu_ca;   // clamped to <= 0
  Eigen::VectorXd psi_ca;  // posterior sd
  double mu_prior = 0.0;
};

struct ClampReport {
  std::vector<std::size_t> cells;
  std::vector<double> pre_clamp;
  double fraction = 0.0;  // clamped / total
  bool quality_warning = false;

  std::size_t count() const noexcept { return cells.size(); }
};

/// Sets positive entries to zero and reports which ones were touched. A
/// clamped fraction above 5% logs a model-quality warning.
std::pair<Eigen::VectorXd, ClampReport> clamp_and_report(const Eigen::VectorXd& mu_ca);

}  // namespace nergmm
