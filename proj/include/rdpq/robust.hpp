#pragma once

// High-breakdown linear regression: Tukey bisquare rho-family, M-scale,
// subsampling S-estimator and the fixed-scale MM-estimator.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "rdpq/error.hpp"
#include "rdpq/linmod.hpp"

namespace rdpq {

/// Tukey bisquare normalized to sup 1: rho(t) = 1 - (1 - (t/k)^2)^3 for |t| <= k.
struct BisquareRho {
  double k;

  double rho(double t) const {
    const double u = t / k;
    if (std::abs(u) >= 1.0) return 1.0;
    const double v = 1.0 - u * u;
    return 1.0 - v * v * v;
  }
  double psi(double t) const {
    const double u = t / k;
    if (std::abs(u) >= 1.0) return 0.0;
    const double v = 1.0 - u * u;
    return 6.0 * u * v * v / k;
  }
  /// psi(t)/t, continuous at 0 with value 6/k^2.
  double weight(double t) const {
    const double u = t / k;
    if (std::abs(u) >= 1.0) return 0.0;
    const double v = 1.0 - u * u;
    return 6.0 * v * v / (k * k);
  }
};

inline double rho(double t, double k) { return BisquareRho{k}.rho(t); }
inline double psi(double t, double k) { return BisquareRho{k}.psi(t); }
inline double rho_weight(double t, double k) { return BisquareRho{k}.weight(t); }

namespace detail {

inline double mean_rho(std::span<const double> r, double s, const BisquareRho& f) {
  double acc = 0.0;
  for (double v : r) acc += f.rho(v / s);
  return acc / static_cast<double>(r.size());
}

}  // namespace detail

/// M-scale: the s solving mean(rho_k0(r_i / s)) = delta. Zero when too many
/// residuals are exactly zero for a positive solution to exist.
inline double m_scale(std::span<const double> residuals, double k0, double delta, double rel_tol = 1e-10) {
  if (residuals.empty()) throw error(error_kind::invalid_input, "m_scale of an empty residual vector");
  if (!(k0 > 0.0) || !(delta > 0.0 && delta < 1.0)) throw error(error_kind::invalid_input, "bad m_scale tuning");
  const auto m = static_cast<double>(residuals.size());
  double max_abs = 0.0;
  std::size_t nonzero = 0;
  for (double r : residuals) {
    if (r != 0.0) ++nonzero;
    max_abs = std::max(max_abs, std::abs(r));
  }
  // mean rho tends to nonzero/m as s -> 0, so a root needs nonzero/m > delta.
  if (static_cast<double>(nonzero) / m <= delta) return 0.0;

  const BisquareRho f{k0};
  auto excess = [&](double s) { return detail::mean_rho(residuals, s, f) - delta; };

  // mean rho(r/s) <= max_abs^2 * 3 / (k0 s)^2 roughly; start above and walk down.
  double hi = max_abs / k0 * 2.0;
  while (excess(hi) > 0.0) hi *= 2.0;
  double lo = hi * 0.5;
  while (excess(lo) <= 0.0) {
    hi = lo;
    lo *= 0.5;
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct SEstimatorConfig {
  int subsamples = 500;
  double k0 = 1.57;
  double delta = 0.5;
  int refine_steps = 5;
  std::uint64_t seed = 0;
};

struct SEstimate {
  Vector beta;
  double scale = 0.0;
  Vector residuals;
};

namespace detail {

// Residuals this small relative to the response are treated as exact fits.
inline double exact_fit_tolerance(const Vector& y) { return 1e-10 * y.cwiseAbs().maxCoeff(); }

inline void snap_zeros(Vector& r, double tol) {
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (std::abs(r[i]) <= tol) r[i] = 0.0;
  }
}

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// Weighted least squares; returns false when the weighted design is rank deficient.
inline bool weighted_ls(const Matrix& x, const Vector& y, const Vector& w, Vector& beta) {
  const Vector sw = w.cwiseSqrt();
  const Matrix xw = sw.asDiagonal() * x;
  const Vector yw = sw.cwiseProduct(y);
  Eigen::ColPivHouseholderQR<Matrix> qr(xw);
  if (qr.rank() < x.cols()) return false;
  beta = qr.solve(yw);
  return true;
}

inline void require_fit_size(const Matrix& x, const Vector& y) {
  if (y.size() != x.rows()) throw error(error_kind::invalid_input, "response length does not match design rows");
  if (x.rows() <= x.cols()) {
    throw error(error_kind::degenerate_design, "robust fit needs more observed rows than coefficients");
  }
}

inline SEstimate s_estimate_design(const Matrix& x, const Vector& y, const SEstimatorConfig& cfg) {
  require_fit_size(x, y);
  const Eigen::Index m = x.rows(), r = x.cols();
  const BisquareRho f0{cfg.k0};
  const double ztol = exact_fit_tolerance(y);

  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(m));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});

  Matrix xs(r, r);
  Vector ys(r);
  Vector resid(m);
  SEstimate best;
  best.scale = std::numeric_limits<double>::infinity();

  for (int s = 0; s < cfg.subsamples && best.scale > 0.0; ++s) {
    // partial Fisher-Yates draw of r distinct rows
    for (Eigen::Index j = 0; j < r; ++j) {
      std::uniform_int_distribution<Eigen::Index> pick(j, m - 1);
      std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick(rng))]);
      xs.row(j) = x.row(pool[static_cast<std::size_t>(j)]);
      ys[j] = y[pool[static_cast<std::size_t>(j)]];
    }
    Eigen::FullPivLU<Matrix> lu(xs);
    if (!lu.isInvertible()) continue;
    const Vector beta = lu.solve(ys);
    resid = y - x * beta;
    snap_zeros(resid, ztol);
    const auto rs = as_span(resid);
    // Strict improvement only: ties keep the earlier subsample.
    if (std::isfinite(best.scale) && mean_rho(rs, best.scale, f0) >= cfg.delta) continue;
    const double sc = m_scale(rs, cfg.k0, cfg.delta);
    if (sc < best.scale) {
      best.beta = beta;
      best.scale = sc;
      best.residuals = resid;
    }
  }
  if (!std::isfinite(best.scale)) {
    throw error(error_kind::degenerate_design, "every elemental subsample was singular");
  }

  for (int step = 0; step < cfg.refine_steps && best.scale > 0.0; ++step) {
    Vector w(m);
    for (Eigen::Index i = 0; i < m; ++i) w[i] = f0.weight(best.residuals[i] / best.scale);
    Vector beta;
    if (!weighted_ls(x, y, w, beta)) break;
    Vector res = y - x * beta;
    snap_zeros(res, ztol);
    const double sc = m_scale(as_span(res), cfg.k0, cfg.delta);
    if (!(sc < best.scale)) break;
    best.beta = beta;
    best.scale = sc;
    best.residuals = res;
  }
  return best;
}

}  // namespace detail

/// S-estimator: best of `subsamples` elemental fits by M-scale, polished by a
/// few IRLS steps. Rows of `covariates` and `y` are the observed ones.
inline SEstimate s_estimator(const Matrix& covariates, const Vector& y, const DesignSpec& spec,
                             const SEstimatorConfig& cfg = {}) {
  return detail::s_estimate_design(design_matrix(covariates, spec), y, cfg);
}

struct MMConfig {
  double k0 = 1.57;
  double k1 = 3.44;
  double delta = 0.5;
  int subsamples = 500;
  int refine_steps = 5;
  std::uint64_t seed = 0;
  double tolerance = 1e-9;  // max coefficient change
  int max_iterations = 200;
};

struct RobustRegressionFit {
  Vector beta;
  Vector residuals;  // observed rows only
  double scale = 0.0;  // S-stage M-scale
  bool converged = false;
  double objective = 0.0;  // mean rho_k1(residual / scale)
  int iterations = 0;
  Vector s_beta;
  std::vector<double> objective_trace;
};

/// MM-estimator: S-stage start, then IRLS on rho_k1 with the scale held fixed.
inline RobustRegressionFit mm_regression(const Matrix& covariates, const Vector& y, const DesignSpec& spec,
                                         const MMConfig& cfg = {}) {
  const Matrix x = design_matrix(covariates, spec);
  const SEstimate s = detail::s_estimate_design(
      x, y, SEstimatorConfig{cfg.subsamples, cfg.k0, cfg.delta, cfg.refine_steps, cfg.seed});

  RobustRegressionFit fit;
  fit.s_beta = s.beta;
  fit.scale = s.scale;
  fit.beta = s.beta;
  if (s.scale == 0.0) {
    // More than half the rows are fitted exactly.
    fit.residuals = s.residuals;
    fit.converged = true;
    fit.objective = 0.0;
    fit.objective_trace.push_back(0.0);
    return fit;
  }

  const BisquareRho f1{cfg.k1};
  const Eigen::Index m = x.rows();
  auto objective = [&](const Vector& res) {
    return detail::mean_rho(detail::as_span(res), s.scale, f1);
  };

  Vector res = y - x * fit.beta;
  fit.objective_trace.push_back(objective(res));
  for (int it = 0; it < cfg.max_iterations; ++it) {
    Vector w(m);
    for (Eigen::Index i = 0; i < m; ++i) w[i] = f1.weight(res[i] / s.scale);
    Vector beta;
    if (!detail::weighted_ls(x, y, w, beta)) break;
    const double change = (beta - fit.beta).lpNorm<Eigen::Infinity>();
    fit.beta = beta;
    res = y - x * fit.beta;
    fit.objective_trace.push_back(objective(res));
    fit.iterations = it + 1;
    if (change <= cfg.tolerance * std::max(1.0, fit.beta.lpNorm<Eigen::Infinity>())) {
      fit.converged = true;
      break;
    }
  }
  fit.residuals = res;
  fit.objective = fit.objective_trace.back();
  return fit;
}

}  // namespace rdpq
