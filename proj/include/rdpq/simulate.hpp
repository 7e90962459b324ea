#pragma once

// Monte Carlo harness: the linear-logistic data-generating process, the four
// model-misspecification scenarios, point-mass contamination, and MSE
// aggregation over replicates.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "rdpq/error.hpp"
#include "rdpq/estimators.hpp"

namespace rdpq {

enum class ErrorLaw { normal, t3, cauchy };

inline std::string_view to_string(ErrorLaw e) {
  switch (e) {
    case ErrorLaw::normal: return "normal";
    case ErrorLaw::t3: return "t3";
    case ErrorLaw::cauchy: return "cauchy";
  }
  return "?";
}

inline ErrorLaw parse_error_law(std::string_view s) {
  if (s == "normal") return ErrorLaw::normal;
  if (s == "t3") return ErrorLaw::t3;
  if (s == "cauchy") return ErrorLaw::cauchy;
  throw error(error_kind::invalid_input, "unknown error law '" + std::string(s) + "'");
}

/// S.1 .. S.4: which of the propensity (PS) and outcome (OR) fits drop X2.
enum class Scenario { s1, s2, s3, s4 };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::s1: return "s1";
    case Scenario::s2: return "s2";
    case Scenario::s3: return "s3";
    case Scenario::s4: return "s4";
  }
  return "?";
}

inline Scenario parse_scenario(std::string_view s) {
  if (s == "s1") return Scenario::s1;
  if (s == "s2") return Scenario::s2;
  if (s == "s3") return Scenario::s3;
  if (s == "s4") return Scenario::s4;
  throw error(error_kind::invalid_input, "unknown scenario '" + std::string(s) + "'");
}

inline bool ps_correct(Scenario s) { return s == Scenario::s1 || s == Scenario::s2; }
inline bool or_correct(Scenario s) { return s == Scenario::s1 || s == Scenario::s3; }

struct Contamination {
  double fraction = 0.1;
  std::vector<double> x0{1.0, 2.0, 0.0};
  double y0 = 0.0;
};

struct ScenarioSpec {
  int n = 100;
  std::vector<double> gamma0{0.0, 0.1, -1.1};
  std::vector<double> beta0{0.0, -3.0, 2.0};
  ErrorLaw error_law = ErrorLaw::normal;
  DesignSpec ps_fit_spec{{1, 2}, true};
  DesignSpec or_fit_spec{{1, 2}, true};
  std::optional<Contamination> contamination;
};

inline void validate(const ScenarioSpec& spec) {
  if (spec.n < 10) throw error(error_kind::invalid_input, "scenario needs n >= 10");
  if (spec.gamma0.size() != 3 || spec.beta0.size() != 3) {
    throw error(error_kind::invalid_input, "true coefficients must have length 3 (1, X1, X2)");
  }
  if (spec.contamination) {
    const auto& c = *spec.contamination;
    if (!(c.fraction >= 0.0 && c.fraction < 0.5)) throw error(error_kind::invalid_input, "fraction must be in [0, 0.5)");
    if (c.x0.size() != 3) throw error(error_kind::invalid_input, "outlier covariate vector must have length 3");
  }
}

inline ScenarioSpec make_scenario(Scenario s, ErrorLaw law, int n = 100) {
  ScenarioSpec spec;
  spec.n = n;
  spec.error_law = law;
  const DesignSpec full{{1, 2}, true}, reduced{{1}, true};
  spec.ps_fit_spec = ps_correct(s) ? full : reduced;
  spec.or_fit_spec = or_correct(s) ? full : reduced;
  return spec;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Identifies one independent random stream; `purpose` separates the draws
/// used for data, contamination and robust-fit subsampling.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  std::uint64_t derive(std::uint64_t purpose) const {
    return detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^ stream_id) + purpose);
  }
  std::mt19937_64 engine(std::uint64_t purpose = 0) const { return std::mt19937_64(derive(purpose)); }
};

namespace purpose {
inline constexpr std::uint64_t data = 0;
inline constexpr std::uint64_t contamination = 1;
inline constexpr std::uint64_t fitting = 2;
inline constexpr std::uint64_t mask = 3;
}  // namespace purpose

template <class Engine>
double draw_error(ErrorLaw law, Engine& eng) {
  std::normal_distribution<double> z;
  switch (law) {
    case ErrorLaw::normal: return z(eng);
    case ErrorLaw::t3: {
      const double num = z(eng);
      double chi2 = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double v = z(eng);
        chi2 += v * v;
      }
      return num / std::sqrt(chi2 / 3.0);
    }
    case ErrorLaw::cauchy: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      return std::tan(std::numbers::pi * (u(eng) - 0.5));
    }
  }
  return 0.0;
}

/// CDF of the error law.
inline double error_cdf(ErrorLaw law, double x) {
  switch (law) {
    case ErrorLaw::normal: return std_normal_cdf(x);
    case ErrorLaw::t3: {
      const double t = x / std::numbers::sqrt3;
      return 0.5 + (t / (1.0 + t * t) + std::atan(t)) / std::numbers::pi;
    }
    case ErrorLaw::cauchy: return 0.5 + std::atan(x) / std::numbers::pi;
  }
  return 0.0;
}

/// A generated sample plus the complete outcomes (for truth computations).
struct SimulatedSample {
  ObservedSample observed;
  std::vector<double> full_y;
};

inline SimulatedSample gen_sample(const ScenarioSpec& spec, const RngStream& stream) {
  validate(spec);
  auto eng = stream.engine(purpose::data);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto n = static_cast<std::size_t>(spec.n);
  SimulatedSample out;
  out.observed.covariates.resize(spec.n, 3);
  out.observed.a.resize(n);
  out.observed.y.resize(n);
  out.full_y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double x1 = z(eng), x2 = z(eng);
    out.observed.covariates(r, 0) = 1.0;
    out.observed.covariates(r, 1) = x1;
    out.observed.covariates(r, 2) = x2;
    const double pi = expit(spec.gamma0[0] + spec.gamma0[1] * x1 + spec.gamma0[2] * x2);
    const int a = u(eng) < pi ? 1 : 0;
    const double y = spec.beta0[0] + spec.beta0[1] * x1 + spec.beta0[2] * x2 + draw_error(spec.error_law, eng);
    out.observed.a[i] = a;
    out.full_y[i] = y;
    out.observed.y[i] = a ? y : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

/// Replaces floor(fraction * n) distinct rows, chosen uniformly, by the
/// outlier (x0, A0, y0) with A0 ~ Bernoulli(expit(x0' gamma0)).
inline SimulatedSample contaminate(SimulatedSample sample, double fraction, std::span<const double> x0, double y0,
                                   std::span<const double> gamma0, const RngStream& stream) {
  const auto n = static_cast<std::size_t>(sample.observed.n());
  if (static_cast<Eigen::Index>(x0.size()) != sample.observed.covariates.cols() || gamma0.size() != x0.size()) {
    throw error(error_kind::invalid_input, "outlier covariate vector has the wrong length");
  }
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  if (k == 0) return sample;
  auto eng = stream.engine(purpose::contamination);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  double eta = 0.0;
  for (std::size_t c = 0; c < x0.size(); ++c) eta += x0[c] * gamma0[c];
  const double pi0 = expit(eta);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t j = 0; j < k; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n - 1);
    std::swap(idx[j], idx[pick(eng)]);
    const std::size_t row = idx[j];
    for (std::size_t c = 0; c < x0.size(); ++c) {
      sample.observed.covariates(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) = x0[c];
    }
    const int a = u(eng) < pi0 ? 1 : 0;
    sample.observed.a[row] = a;
    sample.full_y[row] = y0;
    sample.observed.y[row] = a ? y0 : std::numeric_limits<double>::quiet_NaN();
  }
  return sample;
}

/// p-quantile of Y = x'beta0 + u for the uncontaminated process, where
/// x'beta0 - beta0[0] is N(0, beta1^2 + beta2^2): the CDF is a normal mixture
/// of the error CDF, integrated on a fine grid and inverted by bisection.
inline double true_quantile(const ScenarioSpec& spec, double p) {
  const double b0 = spec.beta0[0];
  const double sd = std::hypot(spec.beta0[1], spec.beta0[2]);
  if (p == 0.5) return b0;  // symmetric about the intercept
  auto cdf = [&](double y) {
    constexpr int steps = 4000;
    constexpr double lim = 9.0;
    const double h = 2.0 * lim / steps;
    double acc = 0.0;
    for (int k = 0; k <= steps; ++k) {
      const double z = -lim + k * h;
      const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
      acc += w * std::exp(-0.5 * z * z) * error_cdf(spec.error_law, y - b0 - sd * z);
    }
    return acc * h / std::sqrt(2.0 * std::numbers::pi);
  };
  double lo = b0 - 1.0, hi = b0 + 1.0;
  while (cdf(lo) > p) lo = b0 - 2.0 * (b0 - lo);
  while (cdf(hi) < p) hi = b0 + 2.0 * (hi - b0);
  while (hi - lo > 1e-10 * std::max(1.0, std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) >= p) hi = mid; else lo = mid;
  }
  return hi;
}

struct StudyRow {
  Method method;
  int replicate = 0;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string message;
};

/// Worker count from RDPQ_THREADS, else the hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("RDPQ_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) over a fixed worker pool. Each index owns
/// its output slot, so results do not depend on scheduling.
template <class Body>
void parallel_for(int count, Body&& body, unsigned threads = thread_count()) {
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1)));
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      (void)t;
      for (int i = next++; i < count && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

/// One replicate: draw (and maybe contaminate) a sample, then run every method
/// on it. Estimator errors are recorded on the row.
inline std::vector<StudyRow> run_replicate(const ScenarioSpec& spec, std::span<const Method> methods, double p,
                                           int replicate, std::uint64_t base_seed) {
  const RngStream stream{base_seed, static_cast<std::uint64_t>(replicate)};
  SimulatedSample sample = gen_sample(spec, stream);
  if (spec.contamination) {
    const auto& c = *spec.contamination;
    sample = contaminate(std::move(sample), c.fraction, c.x0, c.y0, spec.gamma0, stream);
  }
  EstimatorOptions opt;
  opt.seed = stream.derive(purpose::fitting);
  std::vector<StudyRow> rows;
  rows.reserve(methods.size());
  for (Method m : methods) {
    StudyRow row{m, replicate};
    try {
      row.estimate = estimate_quantile(sample.observed, m, p, spec.ps_fit_spec, spec.or_fit_spec, opt).quantile;
    } catch (const error& e) {
      row.failed = true;
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Rows ordered by replicate, then by the order of `methods`.
inline std::vector<StudyRow> run_study(const ScenarioSpec& spec, std::span<const Method> methods, double p, int reps,
                                       std::uint64_t base_seed) {
  validate(spec);
  if (reps < 1) throw error(error_kind::invalid_input, "reps must be >= 1");
  std::vector<std::vector<StudyRow>> per(static_cast<std::size_t>(reps));
  parallel_for(reps, [&](int r) { per[static_cast<std::size_t>(r)] = run_replicate(spec, methods, p, r, base_seed); });
  std::vector<StudyRow> rows;
  rows.reserve(static_cast<std::size_t>(reps) * methods.size());
  for (auto& v : per) {
    for (auto& row : v) rows.push_back(std::move(row));
  }
  return rows;
}

inline double mse(std::span<const double> estimates, double truth) {
  if (estimates.empty()) throw error(error_kind::invalid_input, "mse of an empty estimate vector");
  double acc = 0.0;
  for (double e : estimates) acc += (e - truth) * (e - truth);
  return acc / static_cast<double>(estimates.size());
}

struct MseSummary {
  Method method;
  double mse = std::numeric_limits<double>::quiet_NaN();
  int used = 0;
  int failures = 0;
};

/// MSE for `method` over the non-failed replicates, with the failure count.
inline MseSummary summarize(std::span<const StudyRow> rows, Method method, double truth) {
  MseSummary s{method};
  std::vector<double> est;
  for (const auto& r : rows) {
    if (r.method != method) continue;
    if (r.failed) ++s.failures; else est.push_back(r.estimate);
  }
  s.used = static_cast<int>(est.size());
  if (!est.empty()) s.mse = mse(est, truth);
  return s;
}

struct SweepPoint {
  Method method;
  double y0 = 0.0;
  double mse = 0.0;
  int used = 0;
  int failures = 0;
};

struct SweepMax {
  Method method;
  double max_mse = 0.0;
  double argmax_y0 = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // grid-major, methods in input order
  std::vector<SweepMax> maxima;
};

/// One study per outlier value y0; the same base seed is reused at every grid
/// point so curves over y0 compare identical clean samples.
inline SweepResult contamination_sweep(const ScenarioSpec& spec, std::span<const Method> methods, double p, int reps,
                                       std::span<const double> y0_grid, std::uint64_t base_seed) {
  if (y0_grid.empty()) throw error(error_kind::invalid_input, "empty y0 grid");
  ScenarioSpec base = spec;
  if (!base.contamination) base.contamination = Contamination{};
  ScenarioSpec clean = spec;
  clean.contamination.reset();
  const double truth = true_quantile(clean, p);

  SweepResult out;
  for (Method m : methods) out.maxima.push_back({m, -std::numeric_limits<double>::infinity(), 0.0});
  for (double y0 : y0_grid) {
    ScenarioSpec at = base;
    at.contamination->y0 = y0;
    const auto rows = run_study(at, methods, p, reps, base_seed);
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto s = summarize(rows, methods[k], truth);
      out.points.push_back({methods[k], y0, s.mse, s.used, s.failures});
      if (s.used > 0 && s.mse > out.maxima[k].max_mse) {
        out.maxima[k].max_mse = s.mse;
        out.maxima[k].argmax_y0 = y0;
      }
    }
  }
  return out;
}

}  // namespace rdpq
