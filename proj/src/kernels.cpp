#include "nergmm/kernels.hpp"

#include <cmath>

#include "nergmm/errors.hpp"

namespace nergmm {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::identity: return "identity";
    case KernelKind::group: return "group";
    case KernelKind::constant: return "constant";
    case KernelKind::exponential: return "exponential";
    case KernelKind::squared_exponential: return "squared_exponential";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "identity") return KernelKind::identity;
  if (name == "group") return KernelKind::group;
  if (name == "constant") return KernelKind::constant;
  if (name == "exponential") return KernelKind::exponential;
  if (name == "squared_exponential") return KernelKind::squared_exponential;
  throw ValidationError("unknown kernel kind '" + name + "'");
}

bool has_length_scale(KernelKind kind) {
  return kind == KernelKind::exponential || kind == KernelKind::squared_exponential;
}

InputSpace space_of(const KernelInput& in) {
  return std::holds_alternative<Point2>(in) ? InputSpace::coordinate : InputSpace::index;
}

double input_distance(const KernelInput& a, const KernelInput& b) {
  if (a.index() != b.index()) {
    throw DimensionError("kernel inputs mix labels and coordinates");
  }
  if (const auto* pa = std::get_if<Point2>(&a)) {
    return distance(*pa, std::get<Point2>(b));
  }
  const auto ia = std::get<std::int64_t>(a);
  const auto ib = std::get<std::int64_t>(b);
  return static_cast<double>(ia > ib ? ia - ib : ib - ia);
}

double k_identity(std::int64_t k, std::int64_t l, double omega) {
  return k == l ? omega * omega : 0.0;
}

double k_group(double dist, double omega) {
  return dist <= kCollocationTol ? omega * omega : 0.0;
}

double k_group(const Point2& a, const Point2& b, double omega) {
  return k_group(distance(a, b), omega);
}

double k_group(std::int64_t a, std::int64_t b, double omega) { return a == b ? omega * omega : 0.0; }

double k_constant(double omega) { return omega * omega; }

double k_exponential(double dist, double omega, double ell) {
  if (!(ell > 0.0)) throw HyperparameterError("exponential kernel needs ell > 0");
  return omega * omega * std::exp(-dist / ell);
}

double k_exponential(const Point2& a, const Point2& b, double omega, double ell) {
  return k_exponential(distance(a, b), omega, ell);
}

double k_squared_exponential(double dist, double omega, double ell) {
  if (!(ell > 0.0)) throw HyperparameterError("squared-exponential kernel needs ell > 0");
  const double u = dist / ell;
  return omega * omega * std::exp(-u * u);
}

double k_squared_exponential(const Point2& a, const Point2& b, double omega, double ell) {
  return k_squared_exponential(distance(a, b), omega, ell);
}

void Kernel::validate() const {
  if (!(omega >= 0.0) || !std::isfinite(omega)) {
    throw HyperparameterError(to_string(kind) + " kernel needs omega >= 0");
  }
  if (has_length_scale(kind) && (!(ell > 0.0) || !std::isfinite(ell))) {
    throw HyperparameterError(to_string(kind) + " kernel needs ell > 0");
  }
}

double Kernel::at_distance(double dist, bool same_position) const {
  switch (kind) {
    case KernelKind::identity: return same_position ? omega * omega : 0.0;
    case KernelKind::group: return k_group(dist, omega);
    case KernelKind::constant: return k_constant(omega);
    case KernelKind::exponential: return k_exponential(dist, omega, ell);
    case KernelKind::squared_exponential: return k_squared_exponential(dist, omega, ell);
  }
  return 0.0;
}

double Kernel::operator()(const KernelInput& a, const KernelInput& b) const {
  const double d = input_distance(a, b);
  return at_distance(d, d == 0.0);
}

double KernelExpr::at_distance(double dist, bool same_position) const {
  double v = 0.0;
  for (const auto& k : parts) v += k.at_distance(dist, same_position);
  return v;
}

double KernelExpr::operator()(const KernelInput& a, const KernelInput& b) const {
  if (space_of(a) != space || space_of(b) != space) {
    throw DimensionError("kernel input does not match the kernel's input space");
  }
  const double d = input_distance(a, b);
  return at_distance(d, d == 0.0);
}

double KernelExpr::variance() const {
  double v = 0.0;
  for (const auto& k : parts) v += k.omega * k.omega;
  return v;
}

KernelExpr sum_kernels(const KernelExpr& a, const KernelExpr& b) {
  if (a.space != b.space) {
    throw DimensionError("cannot sum kernels over different input spaces");
  }
  KernelExpr out = a;
  out.parts.insert(out.parts.end(), b.parts.begin(), b.parts.end());
  return out;
}

Eigen::MatrixXd assemble_cov(std::span<const ScaledKernelTerm> terms,
                             std::span<const std::size_t> rows,
                             std::span<const std::size_t> cols) {
  std::size_t universe = 0;
  if (!terms.empty()) universe = terms.front().inputs.size();
  for (const auto& t : terms) {
    if (t.inputs.size() != universe || t.design.size() != universe) {
      throw DimensionError("kernel terms do not share one record universe");
    }
    for (const auto& p : t.kernel.parts) p.validate();
  }
  for (auto r : rows) {
    if (r >= universe && !terms.empty()) throw DimensionError("row index outside universe");
  }
  for (auto c : cols) {
    if (c >= universe && !terms.empty()) throw DimensionError("column index outside universe");
  }

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                            static_cast<Eigen::Index>(cols.size()));
  // Fixed per-entry summation order: terms in list order.
  for (const auto& t : terms) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t a = rows[r];
      const double xa = t.design[a];
      if (xa == 0.0) continue;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const std::size_t b = cols[c];
        const double xb = t.design[b];
        if (xb == 0.0) continue;
        const double d = input_distance(t.inputs[a], t.inputs[b]);
        K(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) +=
            xa * t.kernel.at_distance(d, a == b) * xb;
      }
    }
  }
  return K;
}

Eigen::MatrixXd assemble_cov(std::span<const ScaledKernelTerm> terms) {
  const std::size_t n = terms.empty() ? 0 : terms.front().inputs.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return assemble_cov(terms, idx, idx);
}

Eigen::MatrixXd kernel_matrix(const KernelExpr& kernel, std::span<const KernelInput> a,
                              std::span<const KernelInput> b) {
  for (const auto& p : kernel.parts) p.validate();
  Eigen::MatrixXd K(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kernel(a[i], b[j]);
    }
  }
  return K;
}

}  // namespace nergmm
