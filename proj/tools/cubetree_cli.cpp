// cubetree command-line front end.
//
// Exit codes: 0 success, 1 a validation suite failed, 2 config or usage
// error, 3 runtime error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cubetree/bounds.hpp"
#include "cubetree/error.hpp"
#include "cubetree/fourier.hpp"
#include "cubetree/harness.hpp"
#include "json.hpp"

using namespace cubetree;

namespace {

SparseFourier load_function(const std::string& spec, int d) {
  if (!spec.empty() && spec[0] == '@') {
    std::ifstream in(spec.substr(1));
    if (!in) throw Error(ErrorKind::ConfigError, "cannot read " + spec.substr(1));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_function_json(ss.str()).with_dim(d);
  }
  return parse_function(spec, d);
}

std::vector<FeatureSet> parse_cut(const std::string& text, int d) {
  // Vertices separated by ';', each a product such as x1*x2.
  std::vector<FeatureSet> cut;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const SparseFourier v = parse_function(item, d);
    if (v.terms().size() != 1) throw Error(ErrorKind::ParseError, "bad cut vertex '" + item + "'");
    cut.push_back(v.terms()[0].subset);
  }
  return cut;
}

void print_report(const BoundReport& r, bool as_json) { std::cout << (as_json ? r.to_json() + "\n" : r.to_text()); }

struct AnalyzeArgs {
  std::string function;
  int d = 0;
  double n = 0;
  double sigma = 0;
  std::string cut;
  double lambda = 0;
  double M = 0;
  bool json = false;
};

void analyze(const AnalyzeArgs& a) {
  const SparseFourier f = load_function(a.function, a.d);
  const MspClosure closure = msp_closure(f);
  if (!a.json) {
    std::cout << "function: " << f.str() << "\n"
              << "hash: " << f.hash() << "\n"
              << "variance: " << format_double(f.variance()) << "\n"
              << "msp: " << (closure.is_msp ? "yes" : "no") << "\n";
    if (!closure.is_msp) {
      std::cout << "unreached:";
      for (FeatureSet s : closure.unreached) std::cout << " " << s.str();
      std::cout << "\nvar_r_msp: " << format_double(msp_residual(f).variance()) << "\n";
    }
    if (f.sparsity() <= kDefaultSparsityCap && !f.is_constant()) {
      std::cout << "smsp: " << (is_smsp(f) ? "yes" : "no") << "\n"
                << "sid_lambda: " << format_double(sid_lambda(f)) << "\n"
                << "smsp_lambda: " << format_double(smsp_lambda(f)) << "\n";
    }
  }
  if (a.n <= 0) return;
  const std::optional<double> M = a.M > 0 ? std::optional<double>(a.M) : std::nullopt;
  if (!closure.is_msp) print_report(nonmsp_bound(f, a.d, a.n, M), a.json);
  if (!a.cut.empty()) {
    print_report(robust_bound(f, parse_cut(a.cut, a.d), a.d, a.n, a.sigma), a.json);
  } else if (a.sigma > 0 && f.terms().size() <= 12) {
    print_report(best_robust_bound(f, a.d, a.n, a.sigma), a.json);
  }
  if (a.lambda > 0) {
    const GammaWindow w = gamma_window(f.inf_norm(), a.sigma, f.sparsity(), a.d, a.n, a.lambda);
    std::cout << "gamma_window: tau=" << format_double(w.tau);
    if (w.empty) {
      std::cout << " empty\n";
    } else {
      std::cout << " [" << format_double(w.gamma_min) << ", " << format_double(w.gamma_max) << ")\n";
    }
  }
  if (f.sparsity() >= 1) {
    const RateValues r = rate_values(f.sparsity(), a.d, a.n, a.sigma, a.M > 0 ? a.M : f.inf_norm());
    std::cout << "rates (constant-free order guides): minimax=" << format_double(r.minimax)
              << " erm=" << format_double(r.erm) << " cart_upper=" << format_double(r.cart_upper)
              << " na_delta=" << format_double(r.na_delta) << "\n";
  }
}

void print_row(const ExperimentConfig& c, const SweepRow& r) {
  std::cout << "risk_exact: " << format_double(r.risk_exact);
  if (r.risk_se > 0) std::cout << " (monte carlo se " << format_double(r.risk_se) << ")";
  std::cout << "\ngamma_used: " << format_double(r.gamma_used) << "\nmean_depth: " << format_double(r.mean_depth)
            << "\nnode_count: " << format_double(r.node_count) << "\n";
  if (r.selection) std::cout << "selection: " << format_double(*r.selection) << "\n";
  for (std::size_t j = 0; j < r.coverage.size(); ++j) {
    std::cout << "coverage x" << c.coverage_features[j] << ": " << format_double(r.coverage[j]) << "\n";
  }
}

int log2_of(double n) {
  const int l = static_cast<int>(std::lround(std::log2(n)));
  if (n < 2 || std::ldexp(1.0, l) != n) throw Error(ErrorKind::ConfigError, "n must be a power of two >= 2");
  return l;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regression trees on the Boolean hypercube: fitting, analysis and sweeps"};
  app.require_subcommand(1);

  AnalyzeArgs an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Fourier structure and bound calculators for a function");
  analyze_cmd->add_option("--function", an.function, "e.g. '1*x1*x2 + 0.02*x1', or @file.json")->required();
  analyze_cmd->add_option("--d", an.d, "ambient dimension")->required();
  analyze_cmd->add_option("--n", an.n, "sample size for the bounds");
  analyze_cmd->add_option("--sigma", an.sigma, "noise standard deviation");
  analyze_cmd->add_option("--cut", an.cut, "cut vertices separated by ';', e.g. 'x1;x2*x3'");
  analyze_cmd->add_option("--lambda", an.lambda, "SMSP(lambda) level for the gamma window");
  analyze_cmd->add_option("--M", an.M, "response bound for ensemble bounds");
  analyze_cmd->add_flag("--json", an.json, "bound reports as JSON records");

  std::string fn;
  int fd = 0;
  double fnum = 0;
  double fsigma = 0;
  std::string fest = "cart";
  std::optional<double> fgamma;
  std::vector<double> fgrid;
  bool fgrid_default = false;
  std::uint64_t fseed = 0;
  int fdepth = -1;
  double fclip = 1.0;
  int ftrees = 100;
  std::string ftie = "lowest";
  std::string fcrit = "cart";
  auto* fit_cmd = app.add_subcommand("fit", "Fit one estimator and report its exact risk");
  fit_cmd->add_option("--function", fn)->required();
  fit_cmd->add_option("--d", fd)->required();
  fit_cmd->add_option("--n", fnum, "sample size (power of two)")->required();
  fit_cmd->add_option("--sigma", fsigma);
  fit_cmd->add_option("--estimator", fest)->check(CLI::IsMember({"cart", "rf", "erm", "random"}));
  fit_cmd->add_option("--gamma", fgamma, "fixed minimum impurity decrease");
  fit_cmd->add_option("--gamma-grid", fgrid, "validation grid of gamma values, comma-separated")->delimiter(',');
  fit_cmd->add_flag("--gamma-grid-default", fgrid_default, "validation over 0 and 2^-k, k = 0..12");
  fit_cmd->add_option("--seed", fseed);
  fit_cmd->add_option("--depth", fdepth, "depth cap (cart, rf) or depth budget (erm, random)");
  fit_cmd->add_option("--clip", fclip, "leaf label bound M for erm");
  fit_cmd->add_option("--trees", ftrees);
  fit_cmd->add_option("--criterion", fcrit, "registered split criterion");
  fit_cmd->add_option("--tie-break", ftie)->check(CLI::IsMember({"lowest", "random"}));

  std::string config_path, out_path;
  int jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment config and write a CSV");
  sweep_cmd->add_option("--config", config_path)->required();
  sweep_cmd->add_option("--out", out_path)->required();
  sweep_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

  std::string cfn;
  int cd = 0;
  double cnum = 0;
  double csigma = 0;
  std::vector<int> cfeatures{1, 2, 3};
  int creps = 20;
  std::uint64_t cseed = 0;
  auto* coverage_cmd = app.add_subcommand("coverage", "Split coverage of CART grown to purity");
  coverage_cmd->add_option("--function", cfn)->required();
  coverage_cmd->add_option("--d", cd)->required();
  coverage_cmd->add_option("--n", cnum)->required();
  coverage_cmd->add_option("--sigma", csigma);
  coverage_cmd->add_option("--features", cfeatures)->delimiter(',');
  coverage_cmd->add_option("--replicates", creps)->check(CLI::PositiveNumber);
  coverage_cmd->add_option("--seed", cseed);
  coverage_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

  std::string suite;
  ValidationParams vp;
  auto* validate_cmd = app.add_subcommand("validate", "Monte-Carlo checks of the query-path lemmas");
  validate_cmd->add_option("--suite", suite)
      ->required()
      ->check(CLI::IsMember({"depth", "halving", "xor_selection", "nonadaptive_selection"}));
  validate_cmd->add_option("--runs", vp.runs);
  validate_cmd->add_option("--d", vp.d);
  validate_cmd->add_option("--log2n", vp.log2n);
  validate_cmd->add_option("--s", vp.s);
  validate_cmd->add_option("--seed", vp.seed);
  validate_cmd->add_option("--jobs", vp.jobs)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*analyze_cmd) {
      analyze(an);
    } else if (*fit_cmd) {
      ExperimentConfig c;
      c.name = "fit";
      c.function = fn;
      c.d = {fd};
      c.log2n = {log2_of(fnum)};
      c.sigma2 = {fsigma * fsigma};
      c.estimator = parse_estimator(fest);
      c.seed = fseed;
      c.params.tie_break = ftie == "random" ? TieBreak::Random : TieBreak::LowestIndex;
      c.params.trees = ftrees;
      c.params.criterion = fcrit;
      find_criterion(fcrit);
      c.params.clip = fclip;
      if (fdepth >= 0) {
        c.params.max_depth = fdepth;
        c.params.depth_budget = fdepth;
      }
      c.gamma.grid = default_gamma_grid();
      if (!fgrid.empty() || fgrid_default) {
        c.gamma.mode = GammaSelection::Mode::Validation;
        if (!fgrid.empty()) c.gamma.grid = fgrid;
        std::sort(c.gamma.grid.begin(), c.gamma.grid.end());
      } else {
        c.gamma.value = fgamma.value_or(0.0);
      }
      load_function(fn, fd);  // surface parse errors before fitting
      print_row(c, run_fit(c, {fd, c.log2n[0], c.sigma2[0], 0.0}, 0));
    } else if (*sweep_cmd) {
      run_sweep(load_config(config_path), out_path, jobs);
    } else if (*coverage_cmd) {
      ExperimentConfig c;
      c.name = "coverage";
      c.function = cfn;
      c.d = {cd};
      c.log2n = {log2_of(cnum)};
      c.sigma2 = {csigma * csigma};
      c.replicates = creps;
      c.seed = cseed;
      c.params.tie_break = TieBreak::Random;
      c.metric_coverage = true;
      c.coverage_features = cfeatures;
      for (int k : cfeatures) {
        if (k < 1 || k > cd) throw Error(ErrorKind::ConfigError, "coverage feature out of range");
      }
      const std::vector<SweepRow> rows = run_rows(c, jobs);
      for (std::size_t j = 0; j < cfeatures.size(); ++j) {
        double sum = 0, sq = 0;
        for (const SweepRow& r : rows) {
          sum += r.coverage[j];
          sq += r.coverage[j] * r.coverage[j];
        }
        const double m = sum / creps;
        const double se = creps > 1 ? std::sqrt(std::max(0.0, sq / creps - m * m) * creps / (creps - 1) / creps) : 0.0;
        std::cout << "x" << cfeatures[j] << ": mean=" << format_double(m) << " se=" << format_double(se) << "\n";
      }
    } else if (*validate_cmd) {
      const ValidationReport r = run_validation(parse_suite(suite), vp);
      std::cout << r.to_text() << "\n";
      return r.pass ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::ConfigError:
      case ErrorKind::ParseError:
      case ErrorKind::InvalidArgument:
      case ErrorKind::SupportExceedsDimension:
        return 2;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
