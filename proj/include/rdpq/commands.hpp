#pragma once

// Implementations of the command-line subcommands. Each returns a process
// exit code: 0 success, 1 usage error, 2 data error, 3 estimator failure.

#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rdpq/csv.hpp"
#include "rdpq/dataset.hpp"
#include "rdpq/error.hpp"
#include "rdpq/estimators.hpp"
#include "rdpq/simulate.hpp"

namespace rdpq::cli {

enum exit_code : int { ok = 0, usage = 1, data_error = 2, estimator_error = 3 };

inline int exit_code_for(error_kind k) {
  switch (k) {
    case error_kind::invalid_input: return usage;
    case error_kind::data: return data_error;
    default: return estimator_error;
  }
}

inline int report_error(const error& e, std::ostream& err) {
  err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
  return exit_code_for(e.kind());
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw error(error_kind::data, "cannot write '" + path + "'");
  return f;
}

inline std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += csv::format_number(v[i]);
  }
  return s;
}

inline std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  for (const auto& name : split_list(list)) out.push_back(parse_method(name));
  if (out.empty()) throw error(error_kind::invalid_input, "no methods given");
  return out;
}

inline const char* default_methods = "IPW,SY,DP-S,DP-G,DP-G-ROB,DP-S-ROB";

// --- estimate ---------------------------------------------------------------

struct EstimateArgs {
  std::string data;
  std::string method = "DP-S-ROB";
  double p = 0.5;
  std::string ps_cols;
  std::string or_cols;
  std::uint64_t seed = 0;
  std::string dump_cdf;
  std::string dump_atoms;
  std::string a_col = "a";
  std::string y_col = "y";
};

inline void dump_cdf(std::ostream& os, const DistributionEstimate& d) {
  std::vector<double> ys;
  for (const auto& a : d.atoms.atoms()) ys.push_back(a.location);
  if (!d.smooth.empty()) {
    double lo = d.atoms.empty() ? d.smooth.front().mean : d.atoms.min_location(), hi = lo, s = 0.0;
    if (!d.atoms.empty()) hi = d.atoms.max_location();
    for (const auto& g : d.smooth) {
      lo = std::min(lo, g.mean);
      hi = std::max(hi, g.mean);
      s = std::max(s, g.scale);
    }
    lo -= 4 * s;
    hi += 4 * s;
    for (int k = 0; k <= 512; ++k) ys.push_back(lo + (hi - lo) * k / 512);
    std::sort(ys.begin(), ys.end());
  }
  os << "y,cdf\n";
  for (double y : ys) os << csv::format_number(y) << ',' << csv::format_number(d.evaluate(y)) << '\n';
}

inline int cmd_estimate(const EstimateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const Method method = parse_method(args.method);
    if (!(args.p > 0.0 && args.p < 1.0)) throw error(error_kind::invalid_input, "--p must lie in (0,1)");
    const Dataset d = load_dataset(csv::read_file(args.data), args.a_col, args.y_col);
    const DesignSpec ps = design_from_names(d, args.ps_cols);
    const DesignSpec orm = design_from_names(d, args.or_cols);
    EstimatorOptions opt;
    opt.seed = args.seed;
    EstimateResult r;
    try {
      r = estimate_quantile(d.sample, method, args.p, ps, orm, opt);
    } catch (const no_quantile_error& e) {
      if (!args.dump_atoms.empty()) {
        auto f = open_output(args.dump_atoms);
        write_csv(f, e.estimate().atoms);
      }
      throw;
    }

    out << "method: " << to_string(method) << '\n';
    out << "p: " << csv::format_number(args.p) << '\n';
    out << "quantile: " << csv::format_number(r.quantile) << '\n';
    out << "n: " << d.sample.n() << '\n';
    out << "m: " << d.sample.m() << '\n';
    if (r.propensity) {
      out << "propensity.gamma: " << join(r.propensity->gamma) << '\n';
      out << "propensity.iterations: " << r.propensity->iterations << '\n';
      out << "propensity.min_pi: " << csv::format_number(r.propensity->pi_hat.minCoeff()) << '\n';
    }
    if (r.linear) {
      out << "regression: least-squares\n";
      out << "regression.beta: " << join(r.linear->beta) << '\n';
      out << "regression.sigma_hat: " << csv::format_number(r.linear->sigma_hat) << '\n';
    }
    if (r.robust) {
      out << "regression: MM\n";
      out << "regression.beta: " << join(r.robust->beta) << '\n';
      out << "regression.s_hat: " << csv::format_number(r.robust->scale) << '\n';
      out << "regression.converged: " << (r.robust->converged ? "true" : "false") << '\n';
    }
    out << "distribution.atoms: " << r.distribution.atoms.size() << '\n';
    out << "distribution.mass: " << csv::format_number(r.distribution.total_mass()) << '\n';

    if (!args.dump_cdf.empty()) {
      auto f = open_output(args.dump_cdf);
      dump_cdf(f, r.distribution);
    }
    if (!args.dump_atoms.empty()) {
      auto f = open_output(args.dump_atoms);
      write_csv(f, r.distribution.atoms);
    }
    return ok;
  } catch (const error& e) {
    return report_error(e, err);
  }
}

// --- mask -------------------------------------------------------------------

struct MaskArgs {
  std::string data;
  std::string logit_col;
  double slope = 0.1;
  double intercept = -1.1;
  std::uint64_t seed = 0;
  std::string out;
  std::string a_col = "a";
  std::string y_col = "y";
};

/// Draws A_i ~ Bernoulli(expit(intercept + slope * x_i)) and blanks the
/// outcome where A_i = 0.
inline int cmd_mask(const MaskArgs& args, std::ostream& out, std::ostream& err) {
  try {
    csv::Table t = csv::read_file(args.data);
    const auto ix = t.column(args.logit_col);
    if (ix < 0) throw error(error_kind::data, "missing column '" + args.logit_col + "'");
    const auto iy = t.column(args.y_col);
    if (iy < 0) throw error(error_kind::data, "missing outcome column '" + args.y_col + "'");
    auto ia = t.column(args.a_col);
    if (ia < 0) {
      t.header.push_back(args.a_col);
      for (auto& r : t.rows) r.emplace_back();
      ia = static_cast<std::ptrdiff_t>(t.header.size()) - 1;
    }
    auto eng = RngStream{args.seed, 0}.engine(purpose::mask);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t missing = 0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      auto& row = t.rows[r];
      const double x = csv::parse_number(row[static_cast<std::size_t>(ix)], t.line_numbers[r], args.logit_col, false);
      csv::parse_number(row[static_cast<std::size_t>(iy)], t.line_numbers[r], args.y_col, false);
      const bool observed = u(eng) < expit(args.intercept + args.slope * x);
      row[static_cast<std::size_t>(ia)] = observed ? "1" : "0";
      if (!observed) {
        row[static_cast<std::size_t>(iy)].clear();
        ++missing;
      }
    }
    auto f = open_output(args.out);
    csv::write(f, t);
    const double frac = t.rows.empty() ? 0.0 : static_cast<double>(missing) / static_cast<double>(t.rows.size());
    out << "rows: " << t.rows.size() << '\n';
    out << "missing: " << missing << '\n';
    out << "missing_fraction: " << csv::format_number(frac) << '\n';
    return ok;
  } catch (const error& e) {
    return report_error(e, err);
  }
}

// --- simulate / sweep ---------------------------------------------------------

struct SimulateArgs {
  std::string scenarios = "s1";
  std::string errors = "normal";
  int n = 100;
  int reps = 1000;
  std::string methods = default_methods;
  double p = 0.5;
  std::uint64_t seed = 1;
  std::string out;
  std::string summary;
};

/// "<stem>_summary.csv" next to the main output.
inline std::string summary_path(const std::string& out, const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  const auto dot = out.rfind('.');
  const auto slash = out.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + "_summary.csv";
  return out.substr(0, dot) + "_summary" + out.substr(dot);
}

struct Cell {
  Scenario scenario;
  ErrorLaw law;
};

inline std::vector<Cell> parse_cells(const std::string& scenarios, const std::string& errors) {
  std::vector<Cell> cells;
  const auto ss = split_list(scenarios);
  const auto es = split_list(errors);
  if (ss.empty() || es.empty()) throw error(error_kind::invalid_input, "no scenario or error law given");
  for (const auto& s : ss) {
    for (const auto& e : es) cells.push_back({parse_scenario(s), parse_error_law(e)});
  }
  return cells;
}

inline const std::vector<std::string> long_header{"method", "scenario", "errors", "replicate", "estimate"};
inline const std::vector<std::string> summary_header{"method", "scenario", "errors", "mse", "failures"};
inline const std::vector<std::string> grid_header{"method", "scenario", "errors", "y0", "mse", "failures"};
inline const std::vector<std::string> max_header{"method", "scenario", "errors", "max_mse", "argmax_y0"};

inline int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const auto methods = parse_methods(args.methods);
    const auto cells = parse_cells(args.scenarios, args.errors);
    if (args.reps < 1) throw error(error_kind::invalid_input, "--reps must be >= 1");
    if (!(args.p > 0.0 && args.p < 1.0)) throw error(error_kind::invalid_input, "--p must lie in (0,1)");
    if (args.out.empty()) throw error(error_kind::invalid_input, "--out is required");

    auto lf = open_output(args.out);
    auto sf = open_output(summary_path(args.out, args.summary));
    csv::write_row(lf, long_header);
    csv::write_row(sf, summary_header);
    csv::write_row(out, summary_header);
    for (const auto& c : cells) {
      const ScenarioSpec spec = make_scenario(c.scenario, c.law, args.n);
      const auto rows = run_study(spec, methods, args.p, args.reps, args.seed);
      const std::string sc(to_string(c.scenario)), law(to_string(c.law));
      for (Method m : methods) {
        for (const auto& r : rows) {
          if (r.method != m) continue;
          csv::write_row(lf, {std::string(to_string(m)), sc, law, std::to_string(r.replicate),
                              r.failed ? std::string() : csv::format_number(r.estimate)});
        }
      }
      const double truth = true_quantile(spec, args.p);
      for (Method m : methods) {
        const auto s = summarize(rows, m, truth);
        const std::vector<std::string> line{std::string(to_string(m)), sc, law, csv::format_number(s.mse),
                                            std::to_string(s.failures)};
        csv::write_row(sf, line);
        csv::write_row(out, line);
      }
    }
    return ok;
  } catch (const error& e) {
    return report_error(e, err);
  }
}

struct SweepArgs : SimulateArgs {
  std::string y0_grid = "-100:100:10";
  double fraction = 0.1;
  std::string x0 = "1,2,0";
};

/// "lo:hi:step" or an explicit comma list.
inline std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> g;
  if (spec.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(csv::parse_number(csv::trim(tok), 0, "--y0-grid", false));
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
      throw error(error_kind::invalid_input, "grid must look like lo:hi:step with step > 0");
    }
    const auto count = static_cast<int>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (int k = 0; k <= count; ++k) g.push_back(parts[0] + k * parts[2]);
  } else {
    for (const auto& t : split_list(spec)) g.push_back(csv::parse_number(t, 0, "--y0-grid", false));
  }
  if (g.empty()) throw error(error_kind::invalid_input, "empty y0 grid");
  return g;
}

inline int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const auto methods = parse_methods(args.methods);
    const auto cells = parse_cells(args.scenarios, args.errors);
    const auto grid = parse_grid(args.y0_grid);
    if (args.reps < 1) throw error(error_kind::invalid_input, "--reps must be >= 1");
    if (args.out.empty()) throw error(error_kind::invalid_input, "--out is required");
    Contamination cont;
    cont.fraction = args.fraction;
    cont.x0.clear();
    for (const auto& t : split_list(args.x0)) cont.x0.push_back(csv::parse_number(t, 0, "--x0", false));

    auto gf = open_output(args.out);
    auto mf = open_output(summary_path(args.out, args.summary));
    csv::write_row(gf, grid_header);
    csv::write_row(mf, max_header);
    csv::write_row(out, max_header);
    for (const auto& c : cells) {
      ScenarioSpec spec = make_scenario(c.scenario, c.law, args.n);
      spec.contamination = cont;
      validate(spec);
      const auto res = contamination_sweep(spec, methods, args.p, args.reps, grid, args.seed);
      const std::string sc(to_string(c.scenario)), law(to_string(c.law));
      for (const auto& pt : res.points) {
        csv::write_row(gf, {std::string(to_string(pt.method)), sc, law, csv::format_number(pt.y0),
                            csv::format_number(pt.mse), std::to_string(pt.failures)});
      }
      for (const auto& mx : res.maxima) {
        const std::vector<std::string> line{std::string(to_string(mx.method)), sc, law, csv::format_number(mx.max_mse),
                                            csv::format_number(mx.argmax_y0)};
        csv::write_row(mf, line);
        csv::write_row(out, line);
      }
    }
    return ok;
  } catch (const error& e) {
    return report_error(e, err);
  }
}

// --- report -----------------------------------------------------------------

struct ReportArgs {
  std::string in;
  std::string format = "csv";
  std::string plot_out;
  std::string out;
  double p = 0.5;
};

namespace detail {

struct Key {
  std::string method, scenario, errors;
  bool operator<(const Key& o) const {
    return std::tie(method, scenario, errors) < std::tie(o.method, o.scenario, o.errors);
  }
};

inline std::string ps_label(Method m, Scenario s) {
  if (!uses_propensity(m)) return "";
  return ps_correct(s) ? "correct" : "incorrect";
}

inline std::string or_label(Method m, Scenario s) {
  if (!uses_outcome_model(m)) return "";
  return or_correct(s) ? "correct" : "incorrect";
}

inline std::string fixed3(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// Pivot rows (method, scenario) against error-law columns.
inline void markdown_pivot(std::ostream& os, const std::vector<Key>& order, const std::map<Key, std::string>& cell,
                           const std::string& title) {
  std::vector<std::string> laws;
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& k : order) {
    if (std::find(laws.begin(), laws.end(), k.errors) == laws.end()) laws.push_back(k.errors);
    const std::pair<std::string, std::string> r{k.method, k.scenario};
    if (std::find(rows.begin(), rows.end(), r) == rows.end()) rows.push_back(r);
  }
  os << "| Estimator | Scenario | PS | OR |";
  for (const auto& l : laws) os << ' ' << title << " (" << l << ") |";
  os << "\n|---|---|---|---|";
  for (std::size_t i = 0; i < laws.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& [m, s] : rows) {
    const Method method = parse_method(m);
    const Scenario sc = parse_scenario(s);
    os << "| " << m << " | " << s << " | " << ps_label(method, sc) << " | " << or_label(method, sc) << " |";
    for (const auto& l : laws) {
      const auto it = cell.find({m, s, l});
      os << ' ' << (it == cell.end() ? "" : it->second) << " |";
    }
    os << '\n';
  }
}

}  // namespace detail

inline int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  try {
    if (args.format != "csv" && args.format != "markdown") {
      throw error(error_kind::invalid_input, "--format must be csv or markdown");
    }
    const csv::Table t = csv::read_file(args.in);
    std::ofstream file_out;
    if (!args.out.empty()) file_out = open_output(args.out);
    std::ostream& os = args.out.empty() ? out : file_out;

    auto col = [&](const char* name) {
      const auto c = t.column(name);
      if (c < 0) throw error(error_kind::data, "report input lacks column '" + std::string(name) + "'");
      return static_cast<std::size_t>(c);
    };
    const std::size_t im = col("method"), is = col("scenario"), ie = col("errors");

    if (t.column("replicate") >= 0) {
      // long format from `simulate`
      const std::size_t iest = col("estimate");
      std::vector<detail::Key> order;
      std::map<detail::Key, std::vector<double>> est;
      std::map<detail::Key, int> failures;
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const detail::Key k{row[im], row[is], row[ie]};
        if (!est.count(k) && !failures.count(k)) order.push_back(k);
        est[k];
        const double v = csv::parse_number(row[iest], t.line_numbers[r], "estimate", true);
        if (std::isnan(v)) ++failures[k]; else est[k].push_back(v);
      }
      std::map<detail::Key, std::string> cell;
      std::vector<std::vector<std::string>> lines;
      for (const auto& k : order) {
        const ScenarioSpec spec = make_scenario(parse_scenario(k.scenario), parse_error_law(k.errors));
        const double truth = true_quantile(spec, args.p);
        const auto& v = est[k];
        const double m = v.empty() ? std::numeric_limits<double>::quiet_NaN() : mse(v, truth);
        lines.push_back({k.method, k.scenario, k.errors, csv::format_number(m), std::to_string(failures[k])});
        cell[k] = detail::fixed3(m);
      }
      if (args.format == "csv") {
        csv::write_row(os, summary_header);
        for (const auto& l : lines) csv::write_row(os, l);
      } else {
        detail::markdown_pivot(os, order, cell, "MSE");
      }
      return ok;
    }

    if (t.column("y0") >= 0) {
      // per-grid-point output from `sweep`
      const std::size_t iy0 = col("y0"), imse = col("mse");
      std::vector<detail::Key> order;
      std::map<detail::Key, std::pair<double, double>> best;  // max mse, argmax y0
      std::ofstream plot;
      if (!args.plot_out.empty()) {
        plot = open_output(args.plot_out);
        csv::write_row(plot, {"y0", "mse", "method", "scenario", "errors"});
      }
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const detail::Key k{row[im], row[is], row[ie]};
        const double y0 = csv::parse_number(row[iy0], t.line_numbers[r], "y0", false);
        const double m = csv::parse_number(row[imse], t.line_numbers[r], "mse", true);
        auto it = best.find(k);
        if (it == best.end()) {
          order.push_back(k);
          it = best.emplace(k, std::pair{-std::numeric_limits<double>::infinity(), 0.0}).first;
        }
        if (!std::isnan(m) && m > it->second.first) it->second = {m, y0};
        if (plot) csv::write_row(plot, {row[iy0], row[imse], k.method, k.scenario, k.errors});
      }
      std::map<detail::Key, std::string> cell;
      if (args.format == "csv") csv::write_row(os, max_header);
      for (const auto& k : order) {
        const auto& [m, y0] = best[k];
        if (args.format == "csv") {
          csv::write_row(os, {k.method, k.scenario, k.errors, csv::format_number(m), csv::format_number(y0)});
        }
        cell[k] = detail::fixed3(m);
      }
      if (args.format == "markdown") detail::markdown_pivot(os, order, cell, "Max MSE");
      return ok;
    }
    throw error(error_kind::data, "unrecognised report input: expected a 'replicate' or 'y0' column");
  } catch (const error& e) {
    return report_error(e, err);
  }
}

}  // namespace rdpq::cli
