#include "nergmm/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nergmm/errors.hpp"
#include "nergmm/log.hpp"

namespace nergmm {

namespace {

constexpr std::size_t kCreepWindow = 5;

struct Sample {
  Eigen::VectorXd x;
  double f;
};

// Quadratic model m(s) = g.s + 0.5 s'Hs around the centre.
struct Quadratic {
  Eigen::VectorXd g;
  Eigen::MatrixXd H;
  double at(const Eigen::VectorXd& s) const { return g.dot(s) + 0.5 * s.dot(H * s); }
};

class Budget {
 public:
  Budget(const std::function<double(const Eigen::VectorXd&)>& f, int max_evals,
         std::vector<double>& trace)
      : f_(f), max_(max_evals), trace_(trace) {}

  double operator()(const Eigen::VectorXd& x) {
    if (evals_ >= max_) {
      throw OptimizationError("optimizer hit the evaluation cap (" + std::to_string(max_) + ")",
                              trace_);
    }
    ++evals_;
    double v = f_(x);
    if (!std::isfinite(v)) v = std::numeric_limits<double>::max() / 4;
    return v;
  }
  int evals() const { return evals_; }

 private:
  const std::function<double(const Eigen::VectorXd&)>& f_;
  int max_;
  int evals_ = 0;
  std::vector<double>& trace_;
};

// Offsets along one coordinate that stay inside [lo, hi] relative to c.
std::pair<double, double> axis_steps(double c, double lo, double hi, double delta) {
  const double up = hi - c;
  const double down = c - lo;
  if (up >= delta && down >= delta) return {delta, -delta};
  if (up >= 2 * delta) return {delta, 2 * delta};
  if (down >= 2 * delta) return {-delta, -2 * delta};
  // box narrower than the stencil along this axis
  if (up >= down) return {up / 2, up};
  return {-down / 2, -down};
}

bool try_fit(const std::vector<const Sample*>& pts, const Eigen::VectorXd& c, double fc,
             double delta, Quadratic& out) {
  const Eigen::Index n = c.size();
  const Eigen::Index p = n + n * (n + 1) / 2;
  if (static_cast<Eigen::Index>(pts.size()) < p) return false;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(pts.size()), p);
  Eigen::VectorXd b(A.rows());
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    const Eigen::VectorXd d = (pts[static_cast<std::size_t>(r)]->x - c) / delta;
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < n; ++i) A(r, col++) = d(i);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) A(r, col++) = (i == j ? 0.5 : 1.0) * d(i) * d(j);
    }
    b(r) = pts[static_cast<std::size_t>(r)]->f - fc;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-6 * sv(0)) return false;
  const Eigen::VectorXd coef = svd.solve(b);
  out.g.resize(n);
  out.H.resize(n, n);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < n; ++i) out.g(i) = coef(col++) / delta;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double h = coef(col++) / (delta * delta);
      out.H(i, j) = h;
      out.H(j, i) = h;
    }
  }
  return true;
}

// Coordinate-wise minimization of the model over a box around zero.
Eigen::VectorXd box_step(const Quadratic& m, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const Eigen::Index n = m.g.size();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  for (int sweep = 0; sweep < 200; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = 0.5 * m.H(i, i);
      const double b = m.g(i) + m.H.row(i).dot(s) - m.H(i, i) * s(i);
      auto val = [&](double v) { return a * v * v + b * v; };
      double best = std::clamp(0.0, lo(i), hi(i));
      double fb = val(best);
      for (double cand : {lo(i), hi(i)}) {
        if (val(cand) < fb) {
          fb = val(cand);
          best = cand;
        }
      }
      if (a > 0.0) {
        const double v = std::clamp(-b / (2 * a), lo(i), hi(i));
        if (val(v) < fb) best = v;
      }
      moved = std::max(moved, std::abs(best - s(i)));
      s(i) = best;
    }
    if (moved < 1e-12) break;
  }
  return s;
}

}  // namespace

BoxOptimizerResult minimize_box(const std::function<double(const Eigen::VectorXd&)>& f,
                                Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, const BoxOptimizerOptions& opts) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) {
    throw DimensionError("optimizer bounds do not match the starting point");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lower(i) < upper(i))) throw ValidationError("optimizer bounds must satisfy lower < upper");
    x0(i) = std::clamp(x0(i), lower(i), upper(i));
  }

  BoxOptimizerResult res;
  Budget eval(f, opts.max_evals, res.trace);
  std::vector<Sample> cache;
  auto evaluate = [&](const Eigen::VectorXd& x) {
    for (const auto& s : cache) {
      if ((s.x - x).cwiseAbs().maxCoeff() == 0.0) return s.f;
    }
    const double v = eval(x);
    cache.push_back({x, v});
    return v;
  };

  Eigen::VectorXd c = x0;
  double fc = evaluate(c);
  res.trace.push_back(fc);
  double delta = opts.rho_begin;
  int small_moves = 0;

  while (delta >= opts.rho_end) {
    auto gather = [&]() {
      std::vector<const Sample*> pts;
      for (const auto& s : cache) {
        const double d = (s.x - c).cwiseAbs().maxCoeff();
        if (d > 0.0 && d <= 2.0 * delta * (1 + 1e-12)) pts.push_back(&s);
      }
      return pts;
    };
    Quadratic model;
    std::vector<const Sample*> pts = gather();
    if (!try_fit(pts, c, fc, delta, model)) {
      // Add a unisolvent stencil: two points per axis plus one per pair.
      std::vector<double> first(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        auto [s1, s2] = axis_steps(c(i), lower(i), upper(i), delta);
        first[static_cast<std::size_t>(i)] = s1;
        Eigen::VectorXd x = c;
        x(i) += s1;
        evaluate(x);
        x(i) = c(i) + s2;
        evaluate(x);
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
          Eigen::VectorXd x = c;
          x(i) += first[static_cast<std::size_t>(i)];
          x(j) += first[static_cast<std::size_t>(j)];
          evaluate(x);
        }
      }
      pts = gather();
      if (!try_fit(pts, c, fc, delta, model)) {
        throw OptimizationError("optimizer could not build a well-poised model", res.trace);
      }
    }

    Eigen::VectorXd lo(n), hi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      lo(i) = std::max(lower(i) - c(i), -delta);
      hi(i) = std::min(upper(i) - c(i), delta);
    }
    const Eigen::VectorXd s = box_step(model, lo, hi);
    const double pred = -model.at(s);
    if (!(pred > 1e-14 * (1.0 + std::abs(fc))) || s.cwiseAbs().maxCoeff() < 1e-3 * delta) {
      delta *= 0.5;
      continue;
    }
    Eigen::VectorXd xn = c + s;
    for (Eigen::Index i = 0; i < n; ++i) xn(i) = std::clamp(xn(i), lower(i), upper(i));
    const double fn = evaluate(xn);
    const double ratio = (fc - fn) / pred;
    if (fn < fc) {
      const bool tiny = (fc - fn) <= opts.ftol_rel * (1.0 + std::abs(fc));
      c = xn;
      fc = fn;
      res.trace.push_back(fc);
      small_moves = tiny ? small_moves + 1 : 0;
      if (small_moves >= 3 && delta < 1e3 * opts.rho_end) break;
      // Creeping along a flat valley: stop once a window of steps gains less than ftol_abs.
      const std::size_t k = res.trace.size();
      if (opts.ftol_abs > 0.0 && k > kCreepWindow && res.trace[k - 1 - kCreepWindow] - fc <= opts.ftol_abs) break;
    }
    if (ratio > 0.7 && s.cwiseAbs().maxCoeff() > 0.9 * delta) {
      delta = std::min(2.0 * delta, std::max(opts.rho_begin, 1.0));
    } else if (ratio < 0.1) {
      delta *= 0.5;
    }
    // Drop far-away cache entries so the model stays local.
    if (cache.size() > 400) {
      std::erase_if(cache, [&](const Sample& smp) {
        return (smp.x - c).cwiseAbs().maxCoeff() > 8.0 * delta;
      });
    }
  }

  res.x = c;
  res.f = fc;
  res.evals = eval.evals();
  log::debug("optimizer finished after {} evaluations, f = {}", res.evals, res.f);
  return res;
}

}  // namespace nergmm
