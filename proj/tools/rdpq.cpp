#include <iostream>

#include <CLI11.hpp>

#include "rdpq/commands.hpp"

namespace {

void add_study_flags(CLI::App* c, rdpq::cli::SimulateArgs& a) {
  c->add_option("--scenario", a.scenarios, "s1..s4, comma separated")->capture_default_str();
  c->add_option("--errors", a.errors, "normal, t3 or cauchy, comma separated")->capture_default_str();
  c->add_option("--n", a.n, "sample size")->capture_default_str();
  c->add_option("--reps", a.reps, "replicates per cell")->capture_default_str();
  c->add_option("--methods", a.methods, "comma separated method names")->capture_default_str();
  c->add_option("--p", a.p, "quantile level")->capture_default_str();
  c->add_option("--seed", a.seed, "base seed")->capture_default_str();
  c->add_option("--out", a.out, "output CSV")->required();
  c->add_option("--summary", a.summary, "summary CSV (default: <out>_summary.csv)");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = rdpq::cli;
  CLI::App app{"Quantile estimation for outcomes missing at random"};
  app.require_subcommand(1);

  cli::EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "estimate a quantile from a CSV dataset");
  e->add_option("--data", est.data, "input CSV")->required();
  e->add_option("--method", est.method, "IPW, IPW-NOR, SY, DP-S, DP-NOR, DP-G, DP-G-ROB or DP-S-ROB")
      ->capture_default_str();
  e->add_option("--p", est.p, "quantile level")->capture_default_str();
  e->add_option("--ps-cols", est.ps_cols, "propensity covariates (default: all)");
  e->add_option("--or-cols", est.or_cols, "outcome-model covariates (default: all)");
  e->add_option("--seed", est.seed, "seed for robust subsampling")->capture_default_str();
  e->add_option("--dump-cdf", est.dump_cdf, "write the estimated CDF as y,cdf");
  e->add_option("--dump-atoms", est.dump_atoms, "write the signed atoms as location,weight");
  e->add_option("--a-col", est.a_col, "indicator column")->capture_default_str();
  e->add_option("--y-col", est.y_col, "outcome column")->capture_default_str();

  cli::MaskArgs mask;
  auto* m = app.add_subcommand("mask", "delete outcomes with a logistic missingness mechanism");
  m->add_option("--data", mask.data, "complete input CSV")->required();
  m->add_option("--logit-col", mask.logit_col, "column driving the missingness")->required();
  m->add_option("--slope", mask.slope)->capture_default_str();
  m->add_option("--intercept", mask.intercept)->capture_default_str();
  m->add_option("--seed", mask.seed)->capture_default_str();
  m->add_option("--out", mask.out, "output CSV")->required();
  m->add_option("--a-col", mask.a_col)->capture_default_str();
  m->add_option("--y-col", mask.y_col)->capture_default_str();

  cli::SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Monte Carlo study over scenarios and error laws");
  add_study_flags(s, sim);

  cli::SweepArgs sweep;
  auto* w = app.add_subcommand("sweep", "contamination sweep over the outlier location y0");
  add_study_flags(w, sweep);
  w->add_option("--y0-grid", sweep.y0_grid, "lo:hi:step or a comma list")->capture_default_str();
  w->add_option("--fraction", sweep.fraction, "contaminated fraction")->capture_default_str();
  w->add_option("--x0", sweep.x0, "outlier covariates (1,x1,x2)")->capture_default_str();

  cli::ReportArgs rep;
  auto* r = app.add_subcommand("report", "summarise simulate or sweep output");
  r->add_option("--in", rep.in, "simulate long CSV or sweep grid CSV")->required();
  r->add_option("--format", rep.format, "csv or markdown")->capture_default_str();
  r->add_option("--plot-out", rep.plot_out, "plot-ready CSV (sweep input only)");
  r->add_option("--out", rep.out, "write the table here instead of stdout");
  r->add_option("--p", rep.p, "quantile level used to compute the truth")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe);
    return code == 0 ? cli::ok : cli::usage;
  }

  if (*e) return cli::cmd_estimate(est, std::cout, std::cerr);
  if (*m) return cli::cmd_mask(mask, std::cout, std::cerr);
  if (*s) return cli::cmd_simulate(sim, std::cout, std::cerr);
  if (*w) return cli::cmd_sweep(sweep, std::cout, std::cerr);
  return cli::cmd_report(rep, std::cout, std::cerr);
}
