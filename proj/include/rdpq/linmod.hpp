#pragma once

// Classical fits: least squares for the outcome regression, logistic maximum
// likelihood for the propensity score, and the standard normal CDF.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rdpq/error.hpp"

namespace rdpq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Which covariate columns enter a fitted model. Leaving a true covariate out
/// is how misspecified models are produced.
struct DesignSpec {
  std::vector<int> columns;
  bool include_intercept = true;

  int num_coefficients() const { return static_cast<int>(columns.size()) + (include_intercept ? 1 : 0); }
};

inline void validate(const DesignSpec& spec, Eigen::Index covariate_dim) {
  for (std::size_t i = 0; i < spec.columns.size(); ++i) {
    const int c = spec.columns[i];
    if (c < 0 || c >= covariate_dim) {
      throw error(error_kind::invalid_input, "design column " + std::to_string(c) + " out of range");
    }
    if (std::find(spec.columns.begin(), spec.columns.begin() + static_cast<std::ptrdiff_t>(i), c) !=
        spec.columns.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw error(error_kind::invalid_input, "design column " + std::to_string(c) + " repeated");
    }
  }
  if (spec.num_coefficients() == 0) throw error(error_kind::invalid_input, "empty design");
}

/// Model matrix: optional leading column of ones, then the selected columns.
inline Matrix design_matrix(const Matrix& covariates, const DesignSpec& spec) {
  validate(spec, covariates.cols());
  const Eigen::Index n = covariates.rows();
  Matrix d(n, spec.num_coefficients());
  Eigen::Index k = 0;
  if (spec.include_intercept) d.col(k++).setOnes();
  for (int c : spec.columns) d.col(k++) = covariates.col(c);
  return d;
}

inline Vector predict(const Matrix& covariates, const DesignSpec& spec, const Vector& beta) {
  return design_matrix(covariates, spec) * beta;
}

inline double expit(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

struct LinearFit {
  Vector beta;
  Vector residuals;  // observed rows only
  double sigma_hat = 0.0;
  Eigen::Index m = 0;
};

/// Ordinary least squares through a column-pivoting QR. `covariates` and `y`
/// are already restricted to the observed rows.
inline LinearFit least_squares(const Matrix& covariates, const Vector& y, const DesignSpec& spec) {
  const Matrix x = design_matrix(covariates, spec);
  const Eigen::Index m = x.rows(), r = x.cols();
  if (y.size() != m) throw error(error_kind::invalid_input, "response length does not match design rows");
  if (m <= r) {
    throw error(error_kind::singular_design,
                "least squares needs more rows (" + std::to_string(m) + ") than coefficients (" +
                    std::to_string(r) + ")");
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() < r) throw error(error_kind::singular_design, "design matrix is rank deficient");
  LinearFit fit;
  fit.beta = qr.solve(y);
  fit.residuals = y - x * fit.beta;
  fit.m = m;
  fit.sigma_hat = std::sqrt(fit.residuals.squaredNorm() / static_cast<double>(m - r));
  return fit;
}

struct LogisticOptions {
  double tolerance = 1e-8;  // max-norm of the score
  int max_iterations = 100;
  double separation_bound = 1e3;
};

struct PropensityFit {
  Vector gamma;
  Vector pi_hat;  // all n rows
  int iterations = 0;
  double score_norm = 0.0;
  std::vector<double> loglik_trace;
};

namespace detail {

inline double logistic_loglik(const Vector& eta, std::span<const int> a) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    // log(1 + exp(e)) without overflow
    const double softplus = std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e)));
    ll += a[static_cast<std::size_t>(i)] * e - softplus;
  }
  return ll;
}

}  // namespace detail

/// Logistic regression by Newton-Raphson (IRLS) with step halving.
inline PropensityFit logistic_mle(const Matrix& covariates, std::span<const int> a, const DesignSpec& spec,
                                  const LogisticOptions& opt = {}) {
  const Matrix x = design_matrix(covariates, spec);
  const Eigen::Index n = x.rows(), r = x.cols();
  if (static_cast<Eigen::Index>(a.size()) != n) throw error(error_kind::invalid_input, "indicator length mismatch");
  Vector av(n);
  Eigen::Index ones = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int ai = a[static_cast<std::size_t>(i)];
    if (ai != 0 && ai != 1) throw error(error_kind::invalid_input, "response indicator must be 0/1");
    av[i] = ai;
    ones += ai;
  }
  if (ones == 0 || ones == n) throw error(error_kind::invalid_input, "both response classes must be present");

  PropensityFit fit;
  fit.gamma = Vector::Zero(r);
  Vector eta = Vector::Zero(n);
  double ll = detail::logistic_loglik(eta, a);
  fit.loglik_trace.push_back(ll);

  auto probabilities = [](const Vector& e) {
    Vector p(e.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) p[i] = expit(e[i]);
    return p;
  };

  bool polished = false;
  for (int it = 0;; ++it) {
    const Vector p = probabilities(eta);
    const Vector score = x.transpose() * (av - p);
    fit.score_norm = score.lpNorm<Eigen::Infinity>();
    if (fit.score_norm <= opt.tolerance) {
      // one extra Newton step once inside the tolerance
      if (polished) {
        fit.pi_hat = p;
        fit.iterations = it;
        break;
      }
      polished = true;
    }
    if (it == opt.max_iterations) {
      throw error(error_kind::convergence, "logistic fit did not converge in " +
                                               std::to_string(opt.max_iterations) + " iterations");
    }
    const Vector w = p.array() * (1.0 - p.array());
    const Matrix info = x.transpose() * w.asDiagonal() * x;
    Eigen::LDLT<Matrix> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw error(error_kind::separation, "logistic information matrix is singular");
    }
    Vector step = ldlt.solve(score);

    // Near the optimum the likelihood gain drops below rounding noise; only a
    // real decrease triggers halving.
    const double slack = 1e-12 * (1.0 + std::abs(ll));
    double t = 1.0;
    Vector candidate = fit.gamma + step;
    Vector cand_eta = x * candidate;
    double cand_ll = detail::logistic_loglik(cand_eta, a);
    for (int h = 0; h < 40 && !(cand_ll >= ll - slack); ++h) {
      t *= 0.5;
      candidate = fit.gamma + t * step;
      cand_eta = x * candidate;
      cand_ll = detail::logistic_loglik(cand_eta, a);
    }
    if (!(cand_ll >= ll - slack)) {
      // No ascent direction left at double precision; keep the current point.
      cand_ll = ll;
      candidate = fit.gamma;
      cand_eta = eta;
    }
    fit.gamma = candidate;
    eta = cand_eta;
    ll = cand_ll;
    fit.loglik_trace.push_back(ll);
    if (fit.gamma.lpNorm<Eigen::Infinity>() > opt.separation_bound) {
      throw error(error_kind::separation, "logistic coefficients diverge (complete separation)");
    }
  }

  // Perfectly separated data drives the score to zero while every fitted
  // probability collapses onto its label.
  const double worst = (av - fit.pi_hat).lpNorm<Eigen::Infinity>();
  if (worst < 1e-6) throw error(error_kind::separation, "fitted probabilities reproduce the indicators (separation)");
  return fit;
}

}  // namespace rdpq
