#pragma once

// Estimators of the outcome distribution F0 under missing-at-random responses,
// and their quantiles.
//
// Index convention for pseudo-samples: predictions g(X_i) run over all n rows
// and residuals u_j over the m observed rows, each pair carrying mass 1/(nm).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdpq/error.hpp"
#include "rdpq/linmod.hpp"
#include "rdpq/robust.hpp"
#include "rdpq/signedmix.hpp"

namespace rdpq {

/// Rows (X_i, A_i, Y_i); Y_i is NaN where A_i = 0.
struct ObservedSample {
  Matrix covariates;  // n x p, column 0 is the constant 1 by convention
  std::vector<int> a;
  std::vector<double> y;

  Eigen::Index n() const { return covariates.rows(); }
  Eigen::Index m() const {
    Eigen::Index k = 0;
    for (int v : a) k += v;
    return k;
  }
};

inline void validate(const ObservedSample& s) {
  const auto n = static_cast<std::size_t>(s.covariates.rows());
  if (s.a.size() != n || s.y.size() != n) throw error(error_kind::invalid_input, "sample columns differ in length");
  Eigen::Index m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (s.a[i] != 0 && s.a[i] != 1) throw error(error_kind::invalid_input, "indicator must be 0 or 1");
    if (s.a[i] == 1) {
      ++m;
      if (!std::isfinite(s.y[i])) {
        throw error(error_kind::invalid_input, "observed response on row " + std::to_string(i) + " is not finite");
      }
    }
  }
  if (m < 1) throw error(error_kind::invalid_input, "sample has no observed responses");
  if (!s.covariates.allFinite()) throw error(error_kind::invalid_input, "covariates must be finite");
}

inline std::vector<Eigen::Index> observed_rows(const ObservedSample& s) {
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < s.a.size(); ++i) {
    if (s.a[i] == 1) rows.push_back(static_cast<Eigen::Index>(i));
  }
  return rows;
}

inline Matrix observed_covariates(const ObservedSample& s) {
  const auto rows = observed_rows(s);
  Matrix x(static_cast<Eigen::Index>(rows.size()), s.covariates.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) x.row(static_cast<Eigen::Index>(k)) = s.covariates.row(rows[k]);
  return x;
}

inline Vector observed_outcomes(const ObservedSample& s) {
  const auto rows = observed_rows(s);
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) y[static_cast<Eigen::Index>(k)] = s.y[static_cast<std::size_t>(rows[k])];
  return y;
}

enum class Method { ipw, ipw_normalized, sy, dp_s, dp_nor, dp_g, dp_g_rob, dp_s_rob };

inline constexpr Method all_methods[] = {Method::ipw,  Method::ipw_normalized, Method::sy,       Method::dp_s,
                                         Method::dp_nor, Method::dp_g,         Method::dp_g_rob, Method::dp_s_rob};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::ipw: return "IPW";
    case Method::ipw_normalized: return "IPW-NOR";
    case Method::sy: return "SY";
    case Method::dp_s: return "DP-S";
    case Method::dp_nor: return "DP-NOR";
    case Method::dp_g: return "DP-G";
    case Method::dp_g_rob: return "DP-G-ROB";
    case Method::dp_s_rob: return "DP-S-ROB";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  for (Method m : all_methods) {
    if (to_string(m) == name) return m;
  }
  throw error(error_kind::invalid_input, "unknown method '" + std::string(name) + "'");
}

inline bool uses_propensity(Method m) { return m != Method::sy; }

inline bool uses_outcome_model(Method m) { return m != Method::ipw && m != Method::ipw_normalized; }

/// c * Phi((y - mean) / scale)
struct GaussianTerm {
  double coefficient;
  double mean;
  double scale;
};

/// An atomic signed mixture plus an optional analytic Gaussian part.
struct DistributionEstimate {
  AtomMixture atoms;
  std::vector<GaussianTerm> smooth;

  double evaluate(double y) const {
    double v = atoms.evaluate(y);
    for (const auto& g : smooth) v += g.coefficient * std_normal_cdf((y - g.mean) / g.scale);
    return v;
  }

  double total_mass() const {
    double v = atoms.total_mass();
    for (const auto& g : smooth) v += g.coefficient;
    return v;
  }

  /// inf{y : F(y) >= p}. With a smooth part, the first crossing is bracketed
  /// on a grid that includes every atom and then bisected to 1e-10.
  double quantile(double p) const;
};

class no_quantile_error : public error {
public:
  no_quantile_error(const std::string& what, DistributionEstimate estimate)
      : error(error_kind::no_quantile, what), estimate_(std::move(estimate)) {}
  const DistributionEstimate& estimate() const noexcept { return estimate_; }

private:
  DistributionEstimate estimate_;
};

inline double DistributionEstimate::quantile(double p) const {
  if (smooth.empty()) return rdpq::quantile(atoms, p);
  if (!(p > 0.0 && p < 1.0)) throw error(error_kind::invalid_input, "quantile level must lie in (0,1)");

  double lo = std::numeric_limits<double>::infinity(), hi = -lo, spread = 0.0;
  if (!atoms.empty()) {
    lo = atoms.min_location();
    hi = atoms.max_location();
  }
  for (const auto& g : smooth) {
    lo = std::min(lo, g.mean);
    hi = std::max(hi, g.mean);
    spread = std::max(spread, g.scale);
  }
  lo -= 10.0 * spread;
  hi += 10.0 * spread;
  if (evaluate(hi) < p) {
    throw error(error_kind::no_quantile,
                "estimated distribution never reaches level " + std::to_string(p));
  }

  constexpr int grid = 256;
  std::vector<double> points;
  points.reserve(grid + 1 + atoms.size());
  for (int k = 0; k <= grid; ++k) points.push_back(lo + (hi - lo) * k / grid);
  for (const auto& a : atoms.atoms()) points.push_back(a.location);
  std::sort(points.begin(), points.end());

  double below = lo;
  bool have_below = false;
  for (double c : points) {
    if (evaluate(c) >= p) {
      if (!have_below) return c;
      double left = below, right = c;
      while (right - left > 1e-10) {
        const double mid = 0.5 * (left + right);
        if (mid <= left || mid >= right) break;
        if (evaluate(mid) >= p) right = mid; else left = mid;
      }
      return right;
    }
    below = c;
    have_below = true;
  }
  return hi;
}

struct EstimatorOptions {
  std::uint64_t seed = 0;
  MMConfig mm{};                        // its seed field is replaced by `seed`
  double propensity_floor = 1e-6;
  std::size_t convolution_budget = default_convolution_budget;
  std::optional<std::vector<double>> forced_pi;  // test hook: skip the logistic fit
};

namespace detail {

[[noreturn]] inline void rethrow_as_failure(const error& e, std::string_view stage) {
  if (e.kind() == error_kind::invalid_input) throw;
  throw error(error_kind::estimator_failure, std::string(stage) + ": " + e.what());
}

}  // namespace detail

/// Logistic propensity fit (or the forced probabilities), with the floor
/// check on observed rows.
inline PropensityFit fit_propensity(const ObservedSample& s, const DesignSpec& ps_spec,
                                    const EstimatorOptions& opt = {}) {
  PropensityFit fit;
  if (opt.forced_pi) {
    if (static_cast<Eigen::Index>(opt.forced_pi->size()) != s.n()) {
      throw error(error_kind::invalid_input, "forced propensities have the wrong length");
    }
    fit.pi_hat = Eigen::Map<const Vector>(opt.forced_pi->data(), s.n());
  } else if (s.m() == s.n()) {
    // complete data: every weight is exactly one
    fit.pi_hat = Vector::Ones(s.n());
  } else {
    try {
      fit = logistic_mle(s.covariates, s.a, ps_spec);
    } catch (const error& e) {
      detail::rethrow_as_failure(e, "propensity fit");
    }
  }
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    if (s.a[static_cast<std::size_t>(i)] == 1 && !(fit.pi_hat[i] >= opt.propensity_floor)) {
      throw error(error_kind::estimator_failure,
                  "fitted propensity " + std::to_string(fit.pi_hat[i]) + " on observed row " + std::to_string(i) +
                      " is below the floor " + std::to_string(opt.propensity_floor));
    }
  }
  return fit;
}

inline LinearFit fit_outcome_ls(const ObservedSample& s, const DesignSpec& or_spec) {
  try {
    return least_squares(observed_covariates(s), observed_outcomes(s), or_spec);
  } catch (const error& e) {
    detail::rethrow_as_failure(e, "least-squares fit");
  }
}

inline RobustRegressionFit fit_outcome_mm(const ObservedSample& s, const DesignSpec& or_spec,
                                          const EstimatorOptions& opt = {}) {
  MMConfig cfg = opt.mm;
  cfg.seed = opt.seed;
  try {
    return mm_regression(observed_covariates(s), observed_outcomes(s), or_spec, cfg);
  } catch (const error& e) {
    detail::rethrow_as_failure(e, "MM fit");
  }
}

/// C_n = sum_i A_i / pi_i
inline double propensity_normalizer(const ObservedSample& s, const Vector& pi_hat) {
  double c = 0.0;
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    if (s.a[static_cast<std::size_t>(i)] == 1) c += 1.0 / pi_hat[i];
  }
  return c;
}

/// Inverse-probability weighted empirical distribution. Unnormalized weights
/// are 1/(n pi_i); normalized ones 1/(C_n pi_i).
inline AtomMixture f_ipw(const ObservedSample& s, const PropensityFit& prop, bool normalized) {
  const double denom = normalized ? propensity_normalizer(s, prop.pi_hat) : static_cast<double>(s.n());
  std::vector<Atom> atoms;
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (s.a[k] == 1) atoms.push_back({s.y[k], 1.0 / (denom * prop.pi_hat[i])});
  }
  return AtomMixture::from_atoms(std::move(atoms));
}

inline AtomMixture f_ipw(const ObservedSample& s, const DesignSpec& ps_spec, bool normalized,
                         const EstimatorOptions& opt = {}) {
  return f_ipw(s, fit_propensity(s, ps_spec, opt), normalized);
}

/// Uniform mass on every g(X_i) + u_j: the convolution of the prediction and
/// residual empirical distributions.
inline AtomMixture pseudo_sample(std::span<const double> predictions, std::span<const double> residuals,
                                 std::size_t budget = default_convolution_budget) {
  return convolve(AtomMixture::uniform(predictions), AtomMixture::uniform(residuals), budget);
}

inline std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Semiparametric regression estimator with an MM fit.
inline AtomMixture f_sy(const ObservedSample& s, const DesignSpec& or_spec, const EstimatorOptions& opt = {}) {
  const auto fit = fit_outcome_mm(s, or_spec, opt);
  const Vector pred = predict(s.covariates, or_spec, fit.beta);
  return pseudo_sample(as_span(pred), as_span(fit.residuals), opt.convolution_budget);
}

/// Doubly protected estimator with a pseudo-sample outcome model:
///   F1 - F2a * G + F3a * G
/// where F1 weights observed Y_i, F2a weights observed predictions, both by
/// inverse propensities (over C_n when normalized, n otherwise), G is the
/// residual empirical distribution and F3a the uniform law on all predictions.
inline AtomMixture dp_semiparametric(const ObservedSample& s, const PropensityFit& prop,
                                     std::span<const double> predictions, std::span<const double> residuals,
                                     bool normalized, std::size_t budget = default_convolution_budget) {
  const double denom = normalized ? propensity_normalizer(s, prop.pi_hat) : static_cast<double>(s.n());
  std::vector<Atom> f1, f2a;
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (s.a[k] != 1) continue;
    const double w = 1.0 / (denom * prop.pi_hat[i]);
    f1.push_back({s.y[k], w});
    f2a.push_back({predictions[k], w});
  }
  const AtomMixture first = AtomMixture::from_atoms(std::move(f1));
  const AtomMixture g = AtomMixture::uniform(residuals);
  const AtomMixture second = convolve(AtomMixture::from_atoms(std::move(f2a)), g, budget);
  const AtomMixture third = convolve(AtomMixture::uniform(predictions), g, budget);
  return combine({{1.0, &first}, {-1.0, &second}, {1.0, &third}});
}

/// Classical semiparametric doubly protected estimator (least squares, 1/n weights).
inline AtomMixture f_dp_s(const ObservedSample& s, const DesignSpec& ps_spec, const DesignSpec& or_spec,
                          const EstimatorOptions& opt = {}, bool normalized = false) {
  const auto prop = fit_propensity(s, ps_spec, opt);
  const auto fit = fit_outcome_ls(s, or_spec);
  const Vector pred = predict(s.covariates, or_spec, fit.beta);
  return dp_semiparametric(s, prop, as_span(pred), as_span(fit.residuals), normalized, opt.convolution_budget);
}

/// Normalized robust doubly protected estimator (MM fit, 1/C_n weights).
inline AtomMixture f_dp_s_rob(const ObservedSample& s, const DesignSpec& ps_spec, const DesignSpec& or_spec,
                              const EstimatorOptions& opt = {}) {
  const auto prop = fit_propensity(s, ps_spec, opt);
  const auto fit = fit_outcome_mm(s, or_spec, opt);
  const Vector pred = predict(s.covariates, or_spec, fit.beta);
  return dp_semiparametric(s, prop, as_span(pred), as_span(fit.residuals), true, opt.convolution_budget);
}

/// Gaussian plug-in doubly protected estimator:
///   (1/n) sum A_i 1{Y_i <= y}/pi_i - (1/n) sum (A_i/pi_i - 1) Phi((y - mean_i)/scale)
inline DistributionEstimate dp_gaussian(const ObservedSample& s, const PropensityFit& prop,
                                        std::span<const double> means, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw error(error_kind::estimator_failure, "residual scale is zero; Gaussian plug-in is undefined");
  }
  const auto n = static_cast<double>(s.n());
  DistributionEstimate est;
  est.atoms = f_ipw(s, prop, false);
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double c = -(s.a[k] / prop.pi_hat[i] - 1.0) / n;
    if (c != 0.0) est.smooth.push_back({c, means[k], scale});
  }
  return est;
}

inline DistributionEstimate f_dp_g(const ObservedSample& s, const DesignSpec& ps_spec, const DesignSpec& or_spec,
                                   bool robust, const EstimatorOptions& opt = {}) {
  const auto prop = fit_propensity(s, ps_spec, opt);
  if (robust) {
    const auto fit = fit_outcome_mm(s, or_spec, opt);
    const Vector pred = predict(s.covariates, or_spec, fit.beta);
    return dp_gaussian(s, prop, as_span(pred), fit.scale);
  }
  const auto fit = fit_outcome_ls(s, or_spec);
  const Vector pred = predict(s.covariates, or_spec, fit.beta);
  return dp_gaussian(s, prop, as_span(pred), fit.sigma_hat);
}

struct EstimateResult {
  Method method;
  double p = 0.5;
  DistributionEstimate distribution;
  double quantile = 0.0;
  std::optional<PropensityFit> propensity;
  std::optional<LinearFit> linear;
  std::optional<RobustRegressionFit> robust;
};

/// Fits what `method` needs, builds its distribution estimate and returns the
/// p-quantile together with the fits.
inline EstimateResult estimate_quantile(const ObservedSample& s, Method method, double p, const DesignSpec& ps_spec,
                                        const DesignSpec& or_spec, const EstimatorOptions& opt = {}) {
  validate(s);
  if (!(p > 0.0 && p < 1.0)) throw error(error_kind::invalid_input, "quantile level must lie in (0,1)");
  EstimateResult r;
  r.method = method;
  r.p = p;
  if (uses_propensity(method)) r.propensity = fit_propensity(s, ps_spec, opt);

  const bool robust_or = method == Method::sy || method == Method::dp_g_rob || method == Method::dp_s_rob;
  Vector pred;
  if (uses_outcome_model(method)) {
    if (robust_or) {
      r.robust = fit_outcome_mm(s, or_spec, opt);
      pred = predict(s.covariates, or_spec, r.robust->beta);
    } else {
      r.linear = fit_outcome_ls(s, or_spec);
      pred = predict(s.covariates, or_spec, r.linear->beta);
    }
  }
  const std::size_t budget = opt.convolution_budget;

  switch (method) {
    case Method::ipw: r.distribution.atoms = f_ipw(s, *r.propensity, false); break;
    case Method::ipw_normalized: r.distribution.atoms = f_ipw(s, *r.propensity, true); break;
    case Method::sy: r.distribution.atoms = pseudo_sample(as_span(pred), as_span(r.robust->residuals), budget); break;
    case Method::dp_s:
      r.distribution.atoms = dp_semiparametric(s, *r.propensity, as_span(pred), as_span(r.linear->residuals), false, budget);
      break;
    case Method::dp_nor:
      r.distribution.atoms = dp_semiparametric(s, *r.propensity, as_span(pred), as_span(r.linear->residuals), true, budget);
      break;
    case Method::dp_s_rob:
      r.distribution.atoms = dp_semiparametric(s, *r.propensity, as_span(pred), as_span(r.robust->residuals), true, budget);
      break;
    case Method::dp_g: r.distribution = dp_gaussian(s, *r.propensity, as_span(pred), r.linear->sigma_hat); break;
    case Method::dp_g_rob: r.distribution = dp_gaussian(s, *r.propensity, as_span(pred), r.robust->scale); break;
  }

  try {
    r.quantile = r.distribution.quantile(p);
  } catch (const error& e) {
    if (e.kind() != error_kind::no_quantile) throw;
    throw no_quantile_error(std::string(to_string(method)) + ": " + e.what(), r.distribution);
  }
  return r;
}

}  // namespace rdpq
