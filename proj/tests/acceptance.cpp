// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: rdpq_acceptance [output-dir]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rdpq/commands.hpp"

namespace fs = std::filesystem;
using namespace rdpq;

namespace {

// Pinned tolerances and seeds.
constexpr double table1_tol_light = 0.25;  // normal, t3
constexpr double table1_tol_cauchy = 0.40;
constexpr double table2_robust_cap = 1.0;
constexpr double table2_dpg_floor = 2.0;
constexpr double table2_robust_ratio = 0.5;
constexpr double protect_cap = 0.75;
constexpr double protect_floor = 0.85;
constexpr double consistency_ratio = 0.4;
constexpr double mixture_sup_tol = 1e-12;
constexpr double mm_exact_tol = 1e-8;
constexpr double m_scale_eq_tol = 1e-8;
constexpr double objective_slack = 1e-12;
constexpr double equivariance_tol = 1e-6;
constexpr double score_tol = 1e-8;
constexpr double closed_form_tol = 1e-10;
constexpr double missing_target = 0.5, missing_tol = 0.1;
constexpr double masked_median_tol = 0.3;

constexpr std::uint64_t table1_seed = 1;
constexpr std::uint64_t sweep_seed = 2;
constexpr std::uint64_t consistency_seed = 3;
constexpr int table_reps = 1000;
constexpr int consistency_reps = 200;

int failures = 0;

void verdict(int k, bool pass, const std::string& detail) {
  std::printf("CRITERION %d: %s  %s\n", k, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void note(const std::string& s) {
  std::printf("  %s\n", s.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Clock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

using CellKey = std::tuple<std::string, std::string, std::string>;  // method, scenario, law

std::map<CellKey, double> read_summary(const std::string& path, const std::string& value_col) {
  const auto t = csv::read_file(path);
  const auto im = static_cast<std::size_t>(t.column("method")), is = static_cast<std::size_t>(t.column("scenario"));
  const auto ie = static_cast<std::size_t>(t.column("errors")), iv = static_cast<std::size_t>(t.column(value_col));
  std::map<CellKey, double> out;
  for (const auto& r : t.rows) out[{r[im], r[is], r[ie]}] = std::stod(r[iv]);
  return out;
}

// --- criterion 1 / 3 -----------------------------------------------------------

struct PaperCell {
  std::string method;
  std::string label;  // PS/OR as printed in the table
  double normal, t3, cauchy;
  std::string ours;    // our scenario under the adopted mapping
  std::string literal; // our scenario under the literal labels
};

// Table 1. The two mixed-misspecification DP rows are printed with swapped
// labels in the source table; `ours` follows the values, `literal` the labels.
const std::vector<PaperCell> table1 = {
    {"IPW", "PS c", 0.381, 0.424, 0.689, "s1", "s1"},
    {"IPW", "PS i", 1.125, 1.137, 1.22, "s3", "s3"},
    {"SY", "OR c", 0.206, 0.233, 0.339, "s1", "s1"},
    {"SY", "OR i", 0.945, 1.035, 0.996, "s2", "s2"},
    {"DP-S-ROB", "c/c", 0.313, 0.361, 0.548, "s1", "s1"},
    {"DP-S-ROB", "c/i", 0.280, 0.310, 0.469, "s3", "s2"},
    {"DP-S-ROB", "i/c", 0.683, 0.528, 0.841, "s2", "s3"},
    {"DP-S-ROB", "i/i", 0.983, 1.115, 1.100, "s4", "s4"},
    {"DP-G", "c/c", 0.310, 0.361, 0.707, "s1", "s1"},
    {"DP-G", "c/i", 0.268, 0.326, 0.740, "s3", "s2"},
    {"DP-G", "i/c", 0.712, 0.570, 0.733, "s2", "s3"},
    {"DP-G", "i/i", 0.982, 1.104, 1.063, "s4", "s4"},
    {"DP-G-ROB", "c/c", 0.310, 0.364, 0.590, "s1", "s1"},
    {"DP-G-ROB", "c/i", 0.278, 0.302, 0.483, "s3", "s2"},
    {"DP-G-ROB", "i/c", 0.682, 0.537, 0.942, "s2", "s3"},
    {"DP-G-ROB", "i/i", 0.976, 1.088, 1.088, "s4", "s4"},
};

std::map<CellKey, double> run_table1(const fs::path& dir) {
  cli::SimulateArgs args;
  args.scenarios = "s1,s2,s3,s4";
  args.errors = "normal,t3,cauchy";
  args.n = 100;
  args.reps = table_reps;
  args.p = 0.5;
  args.seed = table1_seed;
  args.out = (dir / "table1.csv").string();
  std::ostringstream out, err;
  if (cli::cmd_simulate(args, out, err) != 0) throw std::runtime_error("simulate failed: " + err.str());
  return read_summary(cli::summary_path(args.out, ""), "mse");
}

void criterion1(const std::map<CellKey, double>& mse) {
  int bad = 0, literal_bad = 0, cells = 0;
  double worst = 0;
  std::string worst_cell;
  for (const auto& c : table1) {
    const std::pair<const char*, double> laws[] = {{"normal", c.normal}, {"t3", c.t3}, {"cauchy", c.cauchy}};
    for (const auto& [law, paper] : laws) {
      const double tol = std::string(law) == "cauchy" ? table1_tol_cauchy : table1_tol_light;
      const double ours = mse.at({c.method, c.ours, law});
      const double lit = mse.at({c.method, c.literal, law});
      const double dev = ours / paper - 1, lit_dev = lit / paper - 1;
      const bool ok = std::abs(dev) <= tol;
      ++cells;
      bad += !ok;
      literal_bad += std::abs(lit_dev) > tol;
      if (std::abs(dev) > std::abs(worst)) {
        worst = dev;
        worst_cell = c.method + " " + c.label + " " + law;
      }
      note(fmt("%-9s %-5s %-6s paper %.3f  ours(%s) %.3f  %+6.1f%%  tol %2.0f%%  %s   literal(%s) %.3f %+6.1f%%",
               c.method.c_str(), c.label.c_str(), law, paper, c.ours.c_str(), ours, 100 * dev, 100 * tol,
               ok ? "ok" : "OUT", c.literal.c_str(), lit, 100 * lit_dev));
    }
  }
  note(fmt("literal label mapping would leave %d/%d cells out of tolerance", literal_bad, cells));
  verdict(1, bad == 0,
          fmt("Table 1: %d/%d cells within tolerance; worst %s at %+.1f%%", cells - bad, cells, worst_cell.c_str(),
              100 * worst));
}

void criterion3(const std::map<CellKey, double>& mse) {
  bool pass = true;
  std::string detail;
  for (const char* m : {"DP-S-ROB", "DP-G-ROB"}) {
    for (const char* s : {"s1", "s2", "s3", "s4"}) {
      const double v = mse.at({m, s, "normal"});
      const bool ok = std::string(s) == "s4" ? v >= protect_floor : v <= protect_cap;
      pass &= ok;
      detail += fmt(" %s/%s=%.3f%s", m, s, v, ok ? "" : "!");
    }
  }
  for (const char* law : {"t3", "cauchy"}) {
    std::string line = fmt("(info, %s)", law);
    for (const char* m : {"DP-S-ROB", "DP-G-ROB"}) {
      for (const char* s : {"s1", "s2", "s3", "s4"}) line += fmt(" %s/%s=%.3f", m, s, mse.at({m, s, law}));
    }
    note(line);
  }
  verdict(3, pass, fmt("normal errors, S1-S3 <= %.2f and S4 >= %.2f:", protect_cap, protect_floor) + detail);
}

// --- criterion 2 ----------------------------------------------------------------

void criterion2(const fs::path& dir) {
  cli::SweepArgs args;
  args.scenarios = "s1,s2,s3,s4";
  args.errors = "normal";
  args.methods = "IPW,SY,DP-G,DP-G-ROB,DP-S-ROB";
  args.n = 100;
  args.reps = table_reps;
  args.seed = sweep_seed;
  args.y0_grid = "-100:100:10";
  args.fraction = 0.1;
  args.x0 = "1,2,0";
  args.out = (dir / "table2_grid.csv").string();
  std::ostringstream out, err;
  if (cli::cmd_sweep(args, out, err) != 0) throw std::runtime_error("sweep failed: " + err.str());
  const auto mx = read_summary(cli::summary_path(args.out, ""), "max_mse");

  cli::ReportArgs rep;
  rep.in = args.out;
  rep.plot_out = (dir / "figures_plot.csv").string();
  std::ostringstream rendered;
  cli::cmd_report(rep, rendered, err);

  const std::map<std::pair<std::string, std::string>, double> paper = {
      {{"IPW", "s1"}, 0.885},      {{"IPW", "s3"}, 2.300},      {{"SY", "s1"}, 1.641},
      {{"SY", "s2"}, 4.301},       {{"DP-S-ROB", "s1"}, 0.675}, {{"DP-S-ROB", "s2"}, 0.907},
      {{"DP-S-ROB", "s3"}, 0.733}, {{"DP-S-ROB", "s4"}, 2.355}, {{"DP-G", "s1"}, 1.036},
      {{"DP-G", "s2"}, 1.131},     {{"DP-G", "s3"}, 2.706},     {{"DP-G", "s4"}, 2.314},
      {{"DP-G-ROB", "s1"}, 0.695}, {{"DP-G-ROB", "s2"}, 0.945}, {{"DP-G-ROB", "s3"}, 0.681},
      {{"DP-G-ROB", "s4"}, 2.314}};
  for (const auto& [k, v] : paper) {
    note(fmt("(info) max-MSE %-9s %s  paper %.3f  ours %.3f", k.first.c_str(), k.second.c_str(), v,
             mx.at({k.first, k.second, "normal"})));
  }

  const double gr_cc = mx.at({"DP-G-ROB", "s1", "normal"}), sr_cc = mx.at({"DP-S-ROB", "s1", "normal"});
  const double g_ic = mx.at({"DP-G", "s3", "normal"});
  const double gr_ic = mx.at({"DP-G-ROB", "s3", "normal"}), sr_ic = mx.at({"DP-S-ROB", "s3", "normal"});
  const bool a = gr_cc <= table2_robust_cap, b = sr_cc <= table2_robust_cap, c = g_ic >= table2_dpg_floor;
  const bool d = gr_ic < table2_robust_ratio * g_ic && sr_ic < table2_robust_ratio * g_ic;
  verdict(2, a && b && c && d,
          fmt("max-MSE DP-G-ROB c/c %.3f<=%.1f %s; DP-S-ROB c/c %.3f<=%.1f %s; DP-G i/c %.3f>=%.1f %s; "
              "robust i/c %.3f,%.3f < %.3f %s",
              gr_cc, table2_robust_cap, a ? "ok" : "NO", sr_cc, table2_robust_cap, b ? "ok" : "NO", g_ic,
              table2_dpg_floor, c ? "ok" : "NO", gr_ic, sr_ic, table2_robust_ratio * g_ic, d ? "ok" : "NO"));
}

// --- criterion 4 ----------------------------------------------------------------

void criterion4() {
  const Method m[] = {Method::dp_s_rob};
  std::vector<double> v;
  std::string detail;
  for (int n : {100, 400, 1600}) {
    const auto spec = make_scenario(Scenario::s1, ErrorLaw::normal, n);
    const auto rows = run_study(spec, m, 0.5, consistency_reps, consistency_seed);
    const auto s = summarize(rows, Method::dp_s_rob, true_quantile(spec, 0.5));
    v.push_back(s.mse);
    detail += fmt(" n=%d:%.4f", n, s.mse);
  }
  const bool pass = v[0] > v[1] && v[1] > v[2] && v[2] <= consistency_ratio * v[0];
  verdict(4, pass, fmt("DP-S-ROB S1 normal MSE%s; ratio %.3f <= %.1f", detail.c_str(), v[2] / v[0], consistency_ratio));
}

// --- criterion 5 ----------------------------------------------------------------

void criterion5() {
  const Method methods[] = {Method::ipw,  Method::ipw_normalized, Method::dp_s,    Method::dp_nor,
                            Method::dp_g, Method::dp_g_rob,       Method::dp_s_rob};
  const DesignSpec full{{1, 2}, true}, intercept{{}, true};
  double worst = 0, sy_worst = 0;
  int median_mismatch = 0, smooth_left = 0, checks = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const int n = 20 + static_cast<int>(k % 80);
    auto sample = gen_sample(make_scenario(Scenario::s1, ErrorLaw::t3, n), RngStream{5000 + k, 0});
    auto s = sample.observed;
    s.y = sample.full_y;
    std::fill(s.a.begin(), s.a.end(), 1);
    EstimatorOptions opt;
    opt.seed = k;
    opt.forced_pi = std::vector<double>(static_cast<std::size_t>(n), 1.0);
    const auto emp = oracle::empirical(s.y);
    const double med = oracle::lower_median(s.y);
    for (Method m : methods) {
      const auto r = estimate_quantile(s, m, 0.5, full, full, opt);
      ++checks;
      smooth_left += !r.distribution.smooth.empty();
      worst = std::max(worst, sup_distance(r.distribution.atoms, emp));
      median_mismatch += r.quantile != med;
    }
    const auto sy = estimate_quantile(s, Method::sy, 0.5, intercept, intercept, opt);
    sy_worst = std::max(sy_worst, std::abs(sy.quantile - med));
  }
  note(fmt("(info) SY has no propensity; intercept-only SY median deviation max %.2e", sy_worst));
  verdict(5, worst <= mixture_sup_tol && median_mismatch == 0 && smooth_left == 0,
          fmt("%d method-sample pairs: max sup distance %.2e <= %.0e, median mismatches %d, residual smooth terms %d",
              checks, worst, mixture_sup_tol, median_mismatch, smooth_left));
}

// --- criterion 6 ----------------------------------------------------------------

// Signed weights whose running sums stay inside [0,1] and end at exactly 1.
std::vector<std::pair<double, double>> bounded_signed_pairs(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> loc(-40, 40);
  std::uniform_real_distribution<double> u;
  std::vector<double> locs;
  while (static_cast<int>(locs.size()) < n) {
    const double x = loc(rng) * 0.25;
    if (std::find(locs.begin(), locs.end(), x) == locs.end()) locs.push_back(x);
  }
  std::sort(locs.begin(), locs.end());
  std::vector<std::pair<double, double>> pairs;
  double prev = 0;
  for (int i = 0; i < n; ++i) {
    const double cum = i == n - 1 ? 1.0 : std::ldexp(std::floor(u(rng) * 1024), -10);
    pairs.emplace_back(locs[static_cast<std::size_t>(i)], cum - prev);
    prev = cum;
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  return pairs;
}

AtomMixture to_mixture(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<Atom> atoms;
  for (const auto& [x, w] : pairs) atoms.push_back({x, w});
  return AtomMixture::from_atoms(std::move(atoms));
}

void criterion6() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> pu(0.001, 0.999);
  std::normal_distribution<double> z;
  int signed_bad = 0, negative = 0, proper_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto pairs = bounded_signed_pairs(rng, 2 + t % 40);
    for (const auto& pr : pairs) negative += pr.second < 0;
    const double p = pu(rng);
    bool found = false;
    const double expected = oracle::brute_quantile(pairs, p, &found);
    try {
      signed_bad += !found || quantile(to_mixture(pairs), p) != expected;
    } catch (const error&) {
      signed_bad += found;
    }
  }
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(static_cast<std::size_t>(1 + t % 70));
    for (auto& v : x) v = std::round(4 * z(rng)) / 2;
    const double p = pu(rng);
    proper_bad += quantile(AtomMixture::uniform(x), p) != oracle::type1_quantile(x, p);
  }
  verdict(6, signed_bad == 0 && proper_bad == 0 && negative > 0,
          fmt("1000 signed mixtures (%d negative atoms): %d mismatches vs cumulative scan; 1000 proper samples: %d "
              "mismatches vs type-1 quantile",
              negative, signed_bad, proper_bad));
}

// --- criterion 7 ----------------------------------------------------------------

struct Problem {
  Matrix cov;
  Vector y;
};

Problem linear_problem(std::mt19937_64& rng, int m, double noise, int outliers, double shift) {
  std::normal_distribution<double> z;
  Problem p{Matrix(m, 3), Vector(m)};
  for (int i = 0; i < m; ++i) {
    p.cov(i, 0) = 1.0;
    p.cov(i, 1) = z(rng);
    p.cov(i, 2) = z(rng);
    p.y[i] = -0.5 + 1.5 * p.cov(i, 1) + 0.75 * p.cov(i, 2) + noise * z(rng);
    if (i < outliers) p.y[i] += shift;
  }
  return p;
}

void criterion7() {
  const DesignSpec spec{{1, 2}, true};
  std::mt19937_64 rng(707);
  Vector truth(3);
  truth << -0.5, 1.5, 0.75;
  MMConfig cfg;

  double exact_err = 0;
  for (int t = 0; t < 50; ++t) {
    const auto p = linear_problem(rng, 15 + t, 0.0, 0, 0.0);
    cfg.seed = static_cast<std::uint64_t>(t);
    exact_err = std::max(exact_err, (mm_regression(p.cov, p.y, spec, cfg).beta - truth).lpNorm<Eigen::Infinity>());
  }

  double eq_err = 0;
  std::cauchy_distribution<double> cauchy;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> r(static_cast<std::size_t>(10 + t));
    for (auto& v : r) v = cauchy(rng);
    const double s = m_scale(r, cfg.k0, cfg.delta);
    double mean = 0;
    for (double v : r) mean += oracle::bisquare(v / s, cfg.k0);
    eq_err = std::max(eq_err, std::abs(mean / static_cast<double>(r.size()) - cfg.delta));
  }

  int increases = 0;
  for (int t = 0; t < 100; ++t) {
    const auto p = linear_problem(rng, 25 + t % 60, 1.0, t % 9, 8.0 * (t % 6));
    cfg.seed = static_cast<std::uint64_t>(t);
    const auto fit = mm_regression(p.cov, p.y, spec, cfg);
    for (std::size_t k = 1; k < fit.objective_trace.size(); ++k) {
      increases += fit.objective_trace[k] > fit.objective_trace[k - 1] + objective_slack;
    }
  }

  double shift_err = 0, scale_err = 0;
  for (int t = 0; t < 30; ++t) {
    const auto p = linear_problem(rng, 60, 1.0, 6, 25.0);
    cfg.seed = static_cast<std::uint64_t>(t);
    const auto base = mm_regression(p.cov, p.y, spec, cfg);
    Vector c(3);
    c << 0.7 * t - 3, 2.0, -1.25;
    const auto shifted = mm_regression(p.cov, p.y + p.cov * c, spec, cfg);
    shift_err = std::max(shift_err, (shifted.beta - base.beta - c).lpNorm<Eigen::Infinity>() / (1 + c.lpNorm<Eigen::Infinity>()));
    for (double lambda : {0.05, 4.0, -3.0}) {
      const auto scaled = mm_regression(p.cov, lambda * p.y, spec, cfg);
      const double denom = std::abs(lambda) * std::max(1.0, base.beta.lpNorm<Eigen::Infinity>());
      scale_err = std::max(scale_err, (scaled.beta - lambda * base.beta).lpNorm<Eigen::Infinity>() / denom);
      scale_err = std::max(scale_err, std::abs(scaled.scale - std::abs(lambda) * base.scale) / (std::abs(lambda) * base.scale));
    }
  }

  const bool pass = exact_err <= mm_exact_tol && eq_err <= m_scale_eq_tol && increases == 0 &&
                    shift_err <= equivariance_tol && scale_err <= equivariance_tol;
  verdict(7, pass,
          fmt("noiseless beta err %.1e; m_scale equation err %.1e; objective increases %d/100 problems; "
              "shift err %.1e, scale err %.1e",
              exact_err, eq_err, increases, shift_err, scale_err));
}

// --- criterion 8 ----------------------------------------------------------------

void criterion8() {
  std::mt19937_64 rng(808);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u;
  const DesignSpec spec{{1, 2}, true};
  double worst_score = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 50 + 3 * t;
    Matrix cov(n, 3);
    std::vector<int> a(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      cov(i, 0) = 1;
      cov(i, 1) = z(rng);
      cov(i, 2) = 3 * u(rng);
      a[static_cast<std::size_t>(i)] = u(rng) < expit(-0.4 + 0.9 * cov(i, 1) - 0.3 * cov(i, 2));
    }
    const auto fit = logistic_mle(cov, a, spec);
    const Matrix x = design_matrix(cov, spec);
    Vector av(n);
    for (int i = 0; i < n; ++i) av[i] = a[static_cast<std::size_t>(i)];
    worst_score = std::max(worst_score, (x.transpose() * (av - fit.pi_hat)).lpNorm<Eigen::Infinity>());
  }
  double worst_closed = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 10 + t;
    std::vector<int> a(static_cast<std::size_t>(n));
    int ones = 0;
    for (auto& v : a) ones += v = u(rng) < 0.3;
    if (ones == 0 || ones == n) a[0] = 1 - a[0], ones += a[0] ? 1 : -1;
    const double mean = static_cast<double>(ones) / n;
    const auto fit = logistic_mle(Matrix::Ones(n, 1), a, {{}, true});
    worst_closed = std::max(worst_closed, std::abs(fit.gamma[0] - std::log(mean / (1 - mean))));
  }
  verdict(8, worst_score <= score_tol && worst_closed <= closed_form_tol,
          fmt("max score norm %.1e <= %.0e over 100 problems; intercept-only logit error %.1e <= %.0e", worst_score,
              score_tol, worst_closed, closed_form_tol));
}

// --- mask + estimate on a synthetic complete dataset --------------------------

void mask_check(const fs::path& dir) {
  std::mt19937_64 rng(909);
  std::exponential_distribution<double> los(1.0 / 11.0);
  std::normal_distribution<double> z;
  const std::string full = (dir / "synthetic_complete.csv").string();
  std::vector<double> ys;
  {
    std::ofstream os(full);
    os << "los,age,y\n";
    for (int i = 0; i < 2000; ++i) {
      const double l = los(rng), age = 60 + 10 * z(rng);
      ys.push_back(2 + 0.3 * l + 0.02 * age + z(rng));
      os << csv::format_number(l) << ',' << csv::format_number(age) << ',' << csv::format_number(ys.back()) << '\n';
    }
  }
  cli::MaskArgs mask;
  mask.data = full;
  mask.logit_col = "los";
  mask.seed = 11;
  mask.out = (dir / "synthetic_masked.csv").string();
  std::ostringstream mo, err;
  const int mrc = cli::cmd_mask(mask, mo, err);
  double frac = -1;
  std::istringstream ms(mo.str());
  for (std::string line; std::getline(ms, line);) {
    if (line.rfind("missing_fraction: ", 0) == 0) frac = std::stod(line.substr(18));
  }
  cli::EstimateArgs est;
  est.data = mask.out;
  est.method = "DP-S-ROB";
  std::ostringstream eo;
  const int erc = cli::cmd_estimate(est, eo, err);
  double q = NAN;
  std::istringstream es(eo.str());
  for (std::string line; std::getline(es, line);) {
    if (line.rfind("quantile: ", 0) == 0) q = std::stod(line.substr(10));
  }
  const double med = oracle::lower_median(ys);
  const bool pass = mrc == 0 && erc == 0 && std::abs(frac - missing_target) <= missing_tol &&
                    std::abs(q - med) <= masked_median_tol;
  std::printf("CHECK mask+estimate: %s  missing fraction %.3f (target %.1f +- %.1f); DP-S-ROB median %.3f vs "
              "complete-data median %.3f (tol %.1f)\n",
              pass ? "PASS" : "FAIL", frac, missing_target, missing_tol, q, med, masked_median_tol);
  if (!pass) ++failures;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rdpq_acceptance";
  fs::create_directories(dir);
  try {
    Clock c1;
    const auto t1 = run_table1(dir);
    criterion1(t1);
    note(fmt("Table 1 runtime %.1f s", c1.seconds()));
    Clock c2;
    criterion2(dir);
    note(fmt("sweep runtime %.1f s", c2.seconds()));
    criterion3(t1);
    Clock c4;
    criterion4();
    note(fmt("consistency runtime %.1f s", c4.seconds()));
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    mask_check(dir);
  } catch (const std::exception& e) {
    std::printf("ABORT: %s\n", e.what());
    return 2;
  }
  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "SOME FAIL", failures);
  return failures == 0 ? 0 : 1;
}
