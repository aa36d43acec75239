#include "cubetree/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "cubetree/erm.hpp"
#include "cubetree/error.hpp"
#include "cubetree/rng.hpp"
#include "cubetree/sampling.hpp"
#include "cubetree/trees.hpp"
#include "cubetree/bounds.hpp"
#include "json.hpp"

namespace cubetree {

using nlohmann::json;

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::Cart: return "cart";
    case Estimator::Forest: return "rf";
    case Estimator::Erm: return "erm";
    case Estimator::Random: return "random";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name) {
  if (name == "cart") return Estimator::Cart;
  if (name == "rf") return Estimator::Forest;
  if (name == "erm") return Estimator::Erm;
  if (name == "random") return Estimator::Random;
  throw Error(ErrorKind::ConfigError, "unknown estimator '" + name + "' (expected cart, rf, erm or random)");
}

std::vector<double> default_gamma_grid() {
  std::vector<double> g{0.0};
  for (int k = 12; k >= 0; --k) g.push_back(std::ldexp(1.0, -k));
  return g;
}

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      config_error("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
T get_as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_error("field '" + field + "' has the wrong type");
  }
}

template <class T>
std::vector<T> get_list(const json& obj, const char* key, const std::string& field) {
  if (!obj.contains(key)) config_error("missing field '" + field + "'");
  const json& j = obj.at(key);
  if (!j.is_array() || j.empty()) config_error("field '" + field + "' must be a nonempty list");
  std::vector<T> out = get_as<std::vector<T>>(j, field);
  std::vector<T> sorted = out;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    config_error("field '" + field + "' has duplicate values");
  }
  return out;
}

std::string substitute_alpha(std::string text, double alpha) {
  const std::string key = "{alpha}";
  const std::string value = format_double(alpha);
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t double_bits(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"name", "function", "grid", "estimator", "params", "gamma", "replicates", "seed",
                           "metrics", "coverage_features"});
  ExperimentConfig c;
  if (j.contains("name")) c.name = get_as<std::string>(j["name"], "name");
  if (c.name.empty() || c.name.find_first_of(",\"\n\r") != std::string::npos) {
    config_error("name must be nonempty without commas, quotes or newlines");
  }
  if (!j.contains("function")) config_error("missing field 'function'");
  c.function = get_as<std::string>(j["function"], "function");

  if (!j.contains("grid")) config_error("missing field 'grid'");
  const json& g = j["grid"];
  check_keys(g, "grid", {"d", "log2n", "sigma2", "alpha"});
  c.d = get_list<int>(g, "d", "grid.d");
  c.log2n = get_list<int>(g, "log2n", "grid.log2n");
  if (g.contains("sigma2")) c.sigma2 = get_list<double>(g, "sigma2", "grid.sigma2");
  if (g.contains("alpha")) c.alpha = get_list<double>(g, "alpha", "grid.alpha");
  for (int d : c.d) {
    if (d < 1 || d > kMaxDim) config_error("grid.d values must be in 1..64");
  }
  for (int l : c.log2n) {
    if (l < 1 || l > 30) config_error("grid.log2n values must be in 1..30");
  }
  for (double s : c.sigma2) {
    if (!(s >= 0.0) || !std::isfinite(s)) config_error("grid.sigma2 values must be finite and >= 0");
  }
  for (double a : c.alpha) {
    if (!std::isfinite(a)) config_error("grid.alpha values must be finite");
  }

  c.estimator = parse_estimator(j.contains("estimator") ? get_as<std::string>(j["estimator"], "estimator") : "cart");

  if (j.contains("params")) {
    const json& p = j["params"];
    check_keys(p, "params", {"max_depth", "tie_break", "mtry", "min_samples", "criterion", "trees", "bootstrap",
                             "depth_budget", "clip", "state_cap"});
    EstimatorParams& e = c.params;
    if (p.contains("max_depth") && !p["max_depth"].is_null()) e.max_depth = get_as<int>(p["max_depth"], "params.max_depth");
    if (p.contains("mtry") && !p["mtry"].is_null()) e.mtry = get_as<int>(p["mtry"], "params.mtry");
    if (p.contains("tie_break")) {
      const auto t = get_as<std::string>(p["tie_break"], "params.tie_break");
      if (t == "lowest") {
        e.tie_break = TieBreak::LowestIndex;
      } else if (t == "random") {
        e.tie_break = TieBreak::Random;
      } else {
        config_error("params.tie_break must be 'lowest' or 'random'");
      }
    }
    if (p.contains("min_samples")) e.min_samples = get_as<std::size_t>(p["min_samples"], "params.min_samples");
    if (p.contains("criterion")) {
      e.criterion = get_as<std::string>(p["criterion"], "params.criterion");
      try {
        find_criterion(e.criterion);
      } catch (const Error& err) {
        config_error(err.what());
      }
    }
    if (p.contains("trees")) e.trees = get_as<int>(p["trees"], "params.trees");
    if (p.contains("bootstrap")) e.bootstrap = get_as<bool>(p["bootstrap"], "params.bootstrap");
    if (p.contains("depth_budget")) e.depth_budget = get_as<int>(p["depth_budget"], "params.depth_budget");
    if (p.contains("clip")) e.clip = get_as<double>(p["clip"], "params.clip");
    if (p.contains("state_cap")) e.state_cap = get_as<std::size_t>(p["state_cap"], "params.state_cap");
    const int min_d = *std::min_element(c.d.begin(), c.d.end());
    if (e.max_depth && *e.max_depth < 0) config_error("params.max_depth must be >= 0");
    if (e.mtry && (*e.mtry < 1 || *e.mtry > min_d)) config_error("params.mtry must be in 1..min(grid.d)");
    if (e.min_samples < 1) config_error("params.min_samples must be >= 1");
    if (e.trees < 1) config_error("params.trees must be >= 1");
    if (e.depth_budget < 0) config_error("params.depth_budget must be >= 0");
    if (c.estimator == Estimator::Erm && e.depth_budget > min_d) config_error("params.depth_budget exceeds min(grid.d)");
    if (!(e.clip > 0.0)) config_error("params.clip must be > 0");
    if (e.state_cap < 1) config_error("params.state_cap must be >= 1");
  }

  c.gamma.grid = default_gamma_grid();
  if (j.contains("gamma")) {
    const json& gm = j["gamma"];
    check_keys(gm, "gamma", {"mode", "value", "grid", "validation_fraction"});
    const auto mode = gm.contains("mode") ? get_as<std::string>(gm["mode"], "gamma.mode") : std::string("fixed");
    if (mode == "fixed") {
      c.gamma.mode = GammaSelection::Mode::Fixed;
    } else if (mode == "validation") {
      c.gamma.mode = GammaSelection::Mode::Validation;
    } else {
      config_error("gamma.mode must be 'fixed' or 'validation'");
    }
    if (gm.contains("value")) c.gamma.value = get_as<double>(gm["value"], "gamma.value");
    if (gm.contains("grid")) c.gamma.grid = get_list<double>(gm, "grid", "gamma.grid");
    if (gm.contains("validation_fraction")) {
      c.gamma.validation_fraction = get_as<double>(gm["validation_fraction"], "gamma.validation_fraction");
    }
  }
  if (!(c.gamma.value >= 0.0)) config_error("gamma.value must be >= 0");
  for (double v : c.gamma.grid) {
    if (!(v >= 0.0) || !std::isfinite(v)) config_error("gamma.grid values must be finite and >= 0");
  }
  std::sort(c.gamma.grid.begin(), c.gamma.grid.end());
  if (!(c.gamma.validation_fraction > 0.0 && c.gamma.validation_fraction < 1.0)) {
    config_error("gamma.validation_fraction must be in (0, 1)");
  }
  if (c.gamma.mode == GammaSelection::Mode::Validation &&
      (c.estimator == Estimator::Erm || c.estimator == Estimator::Random)) {
    config_error("validation gamma selection applies to cart and rf only");
  }

  if (j.contains("replicates")) c.replicates = get_as<int>(j["replicates"], "replicates");
  if (c.replicates < 1) config_error("replicates must be >= 1");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");

  if (j.contains("metrics")) {
    for (const auto& m : get_as<std::vector<std::string>>(j["metrics"], "metrics")) {
      if (m == "coverage") {
        c.metric_coverage = true;
      } else if (m == "selection") {
        c.metric_selection = true;
      } else if (m != "risk_exact" && m != "depth") {
        config_error("unknown metric '" + m + "'");
      }
    }
  }
  if (j.contains("coverage_features")) c.coverage_features = get_as<std::vector<int>>(j["coverage_features"], "coverage_features");
  if (c.metric_coverage && c.coverage_features.empty()) config_error("coverage metric needs coverage_features");
  const int min_d = *std::min_element(c.d.begin(), c.d.end());
  for (int k : c.coverage_features) {
    if (k < 1 || k > min_d) config_error("coverage_features must lie in 1..min(grid.d)");
  }

  // Every grid point must yield a parseable function.
  for (double a : c.alpha) {
    try {
      parse_function(substitute_alpha(c.function, a), min_d, ParseOptions{true});
    } catch (const Error& e) {
      config_error("function does not parse at alpha=" + format_double(a) + ", d=" + std::to_string(min_d) + ": " +
                   e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["name"] = name;
  j["function"] = function;
  j["grid"] = {{"d", d}, {"log2n", log2n}, {"sigma2", sigma2}, {"alpha", alpha}};
  j["estimator"] = to_string(estimator);
  json p;
  p["max_depth"] = params.max_depth ? json(*params.max_depth) : json(nullptr);
  p["mtry"] = params.mtry ? json(*params.mtry) : json(nullptr);
  p["tie_break"] = params.tie_break == TieBreak::Random ? "random" : "lowest";
  p["min_samples"] = params.min_samples;
  p["criterion"] = params.criterion;
  p["trees"] = params.trees;
  p["bootstrap"] = params.bootstrap;
  p["depth_budget"] = params.depth_budget;
  p["clip"] = params.clip;
  p["state_cap"] = params.state_cap;
  j["params"] = p;
  j["gamma"] = {{"mode", gamma.mode == GammaSelection::Mode::Fixed ? "fixed" : "validation"},
                {"value", gamma.value},
                {"grid", gamma.grid},
                {"validation_fraction", gamma.validation_fraction}};
  j["replicates"] = replicates;
  j["seed"] = seed;
  std::vector<std::string> metrics{"depth", "risk_exact"};
  if (metric_coverage) metrics.push_back("coverage");
  if (metric_selection) metrics.push_back("selection");
  std::sort(metrics.begin(), metrics.end());
  j["metrics"] = metrics;
  j["coverage_features"] = coverage_features;
  return j.dump();
}

std::string ExperimentConfig::hash() const {
  const std::string text = canonical_json();
  return hex64(mix64(hash_tag(text)));
}

std::vector<GridPoint> grid_points(const ExperimentConfig& config) {
  std::vector<GridPoint> out;
  for (int d : config.d) {
    for (int l : config.log2n) {
      for (double s : config.sigma2) {
        for (double a : config.alpha) out.push_back({d, l, s, a});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SparseFourier function_at(const ExperimentConfig& config, const GridPoint& p) {
  return parse_function(substitute_alpha(config.function, p.alpha), p.d, ParseOptions{true});
}

std::uint64_t replicate_seed(const ExperimentConfig& config, const GridPoint& p, int replicate) {
  return derive_seed(config.seed, "replicate",
                     {static_cast<std::uint64_t>(p.d), static_cast<std::uint64_t>(p.log2n), double_bits(p.sigma2),
                      double_bits(p.alpha), static_cast<std::uint64_t>(replicate)});
}

namespace {

CartParams cart_params(const EstimatorParams& e) {
  CartParams cp;
  cp.max_depth = e.max_depth;
  cp.tie_break = e.tie_break;
  cp.mtry = e.mtry;
  cp.min_samples = e.min_samples;
  cp.parallel_scan = false;  // sweeps parallelize across replicates
  return cp;
}

struct Split {
  Dataset train, validation;
};

Split split_dataset(const Dataset& data, double fraction) {
  const std::size_t n = data.size();
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_val < 1 || n_val >= n) {
    throw Error(ErrorKind::ConfigError, "validation split leaves an empty train or validation part at n=" +
                                            std::to_string(n));
  }
  return {data.slice(0, n - n_val), data.slice(n - n_val, n)};
}

SweepRow fit_point(const ExperimentConfig& c, const GridPoint& p, int replicate) {
  const SparseFourier f = function_at(c, p);
  const std::size_t n = std::size_t{1} << p.log2n;
  const std::uint64_t seed = replicate_seed(c, p, replicate);
  const Dataset data = sample_dataset(f, p.d, n, NoiseModel::gaussian(std::sqrt(p.sigma2)), seed);
  const std::uint64_t fit_seed = derive_seed(seed, "fit");

  SweepRow row;
  row.experiment = c.name;
  row.function_hash = f.hash();
  row.point = p;
  row.estimator = c.estimator;
  row.replicate = replicate;
  row.seed = seed;

  std::vector<TreeModel> trees;
  std::optional<Forest> forest;
  const bool validate = c.gamma.mode == GammaSelection::Mode::Validation;
  switch (c.estimator) {
    case Estimator::Cart: {
      CartParams cp = cart_params(c.params);
      const auto criterion = find_criterion(c.params.criterion);
      if (!validate) {
        cp.gamma = c.gamma.value;
        trees.push_back(fit_cart(data, cp, *criterion, fit_seed));
        row.gamma_used = c.gamma.value;
        break;
      }
      const Split s = split_dataset(data, c.gamma.validation_fraction);
      const CartFit path = fit_cart_path(s.train, cp, *criterion, fit_seed);
      double best = std::numeric_limits<double>::infinity();
      for (double g : c.gamma.grid) {  // ascending, so ties keep the smallest gamma
        TreeModel t = truncate(path, g);
        const double mse = empirical_risk(t, s.validation);
        if (mse < best) {
          best = mse;
          row.gamma_used = g;
          trees.assign(1, std::move(t));
        }
      }
      break;
    }
    case Estimator::Forest: {
      ForestParams fp;
      fp.trees = c.params.trees;
      fp.bootstrap = c.params.bootstrap;
      fp.mtry = c.params.mtry;
      fp.cart = cart_params(c.params);
      fp.seed = fit_seed;
      if (!validate) {
        fp.cart.gamma = c.gamma.value;
        forest = fit_forest(data, fp, Execution::Serial);
        row.gamma_used = c.gamma.value;
      } else {
        const Split s = split_dataset(data, c.gamma.validation_fraction);
        const ForestFit path = fit_forest_path(s.train, fp, Execution::Serial);
        double best = std::numeric_limits<double>::infinity();
        for (double g : c.gamma.grid) {
          Forest fo = path.truncated(g);
          const double mse = empirical_risk(fo, s.validation);
          if (mse < best) {
            best = mse;
            row.gamma_used = g;
            forest = std::move(fo);
          }
        }
      }
      trees = forest->trees();
      break;
    }
    case Estimator::Erm: {
      ErmParams ep;
      ep.depth_budget = c.params.depth_budget;
      ep.clip = c.params.clip;
      ep.state_cap = c.params.state_cap;
      trees.push_back(fit_erm(data, ep).tree);
      row.gamma_used = std::numeric_limits<double>::quiet_NaN();
      break;
    }
    case Estimator::Random:
      trees.push_back(fit_random_tree(data, c.params.depth_budget, fit_seed));
      row.gamma_used = std::numeric_limits<double>::quiet_NaN();
      break;
  }

  if (forest) {
    ForestRiskOptions opts;
    opts.mc_seed = derive_seed(seed, "risk-mc");
    const RiskReport r = exact_risk(*forest, f, opts);
    row.risk_exact = r.risk;
    row.risk_se = r.se;
  } else {
    row.risk_exact = exact_risk(trees.front(), f);
  }

  const double m = static_cast<double>(trees.size());
  row.coverage.assign(c.metric_coverage ? c.coverage_features.size() : 0, 0.0);
  double selection = 0.0;
  for (const TreeModel& t : trees) {
    row.mean_depth += expected_path_length(t) / m;
    row.node_count += static_cast<double>(t.node_count()) / m;
    for (std::size_t j = 0; j < row.coverage.size(); ++j) row.coverage[j] += coverage(t, c.coverage_features[j]) / m;
    if (c.metric_selection && !f.support().empty()) selection += selection_probability(t, f.support()) / m;
  }
  if (c.metric_selection) row.selection = selection;
  return row;
}

}  // namespace

SweepRow run_fit(const ExperimentConfig& config, const GridPoint& p, int replicate) {
  try {
    return fit_point(config, p, replicate);
  } catch (const Error& e) {
    std::ostringstream ctx;
    ctx << "at d=" << p.d << " log2n=" << p.log2n << " sigma2=" << format_double(p.sigma2)
        << " alpha=" << format_double(p.alpha) << " replicate=" << replicate << ": " << e.what();
    throw Error(e.kind(), ctx.str());
  }
}

std::vector<SweepRow> run_rows(const ExperimentConfig& config, int jobs) {
  if (jobs < 1) throw Error(ErrorKind::InvalidArgument, "jobs must be >= 1");
  const std::vector<GridPoint> points = grid_points(config);
  const std::size_t r = static_cast<std::size_t>(config.replicates);
  const auto tasks = static_cast<std::ptrdiff_t>(points.size() * r);
  std::vector<std::optional<SweepRow>> rows(static_cast<std::size_t>(tasks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(tasks));
#pragma omp parallel for num_threads(jobs) schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < tasks; ++t) {
    const auto i = static_cast<std::size_t>(t);
    try {
      rows[i] = run_fit(config, points[i / r], static_cast<int>(i % r));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<SweepRow> out;
  out.reserve(rows.size());
  for (auto& row : rows) out.push_back(std::move(*row));
  return out;
}

void write_sweep_csv(std::ostream& out, const ExperimentConfig& config, const std::vector<SweepRow>& rows) {
  out << "# config_hash=" << config.hash() << "\n";
  out << "experiment,function_hash,d,log2n,sigma2,alpha,estimator,gamma_used,replicate,seed,risk_exact,risk_se,"
         "mean_depth,node_count";
  if (config.metric_selection) out << ",selection";
  if (config.metric_coverage) {
    for (int k : config.coverage_features) out << ",cov_x" << k;
  }
  out << "\n";
  for (const SweepRow& r : rows) {
    out << r.experiment << ',' << r.function_hash << ',' << r.point.d << ',' << r.point.log2n << ','
        << format_double(r.point.sigma2) << ',' << format_double(r.point.alpha) << ',' << to_string(r.estimator) << ','
        << format_double(r.gamma_used) << ',' << r.replicate << ',' << r.seed << ',' << format_double(r.risk_exact)
        << ',' << format_double(r.risk_se) << ',' << format_double(r.mean_depth) << ','
        << format_double(r.node_count);
    if (config.metric_selection) out << ',' << format_double(r.selection.value_or(0.0));
    for (double v : r.coverage) out << ',' << format_double(v);
    out << "\n";
  }
}

void run_sweep(const ExperimentConfig& config, const std::string& out_path, int jobs) {
  const std::vector<SweepRow> rows = run_rows(config, jobs);
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + out_path + " for writing");
  write_sweep_csv(out, config, rows);
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + out_path);
}

std::string to_string(Suite s) {
  switch (s) {
    case Suite::Depth: return "depth";
    case Suite::Halving: return "halving";
    case Suite::XorSelection: return "xor_selection";
    case Suite::NonAdaptiveSelection: return "nonadaptive_selection";
  }
  return "?";
}

Suite parse_suite(const std::string& name) {
  if (name == "depth") return Suite::Depth;
  if (name == "halving") return Suite::Halving;
  if (name == "xor_selection") return Suite::XorSelection;
  if (name == "nonadaptive_selection") return Suite::NonAdaptiveSelection;
  throw Error(ErrorKind::InvalidArgument, "unknown suite '" + name + "'");
}

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  out << "suite=" << to_string(suite) << " runs=" << runs << " statistic=" << format_double(statistic)
      << " se=" << format_double(se);
  if (suite == Suite::Halving) {
    out << " interval=[" << format_double(lower) << ", " << format_double(upper) << "]";
  } else {
    out << " bound=" << format_double(bound) << " threshold=" << format_double(bound + 3.0 * se);
  }
  out << " pass=" << (pass ? "yes" : "no");
  if (!detail.empty()) out << " (" << detail << ")";
  return out.str();
}

ValidationReport run_validation(Suite suite, const ValidationParams& params) {
  const bool selection = suite == Suite::XorSelection || suite == Suite::NonAdaptiveSelection;
  const int runs = params.runs.value_or(suite == Suite::Depth ? 200 : suite == Suite::Halving ? 500 : 400);
  const int d = params.d.value_or(selection ? 50 : 20);
  const int log2n = params.log2n.value_or(suite == Suite::XorSelection ? 7 : suite == Suite::NonAdaptiveSelection ? 9 : 10);
  const int s = params.s.value_or(2);
  if (runs < 2 || d < 3 || d > kMaxDim || log2n < 1 || log2n > 24 || s < 1 || s > d || params.jobs < 1) {
    throw Error(ErrorKind::InvalidArgument, "validation parameters out of range");
  }
  const std::size_t n = std::size_t{1} << log2n;

  CartParams grow;
  grow.tie_break = TieBreak::Random;
  grow.parallel_scan = false;

  std::vector<double> stat(static_cast<std::size_t>(runs));
#pragma omp parallel for num_threads(params.jobs) schedule(dynamic)
  for (int r = 0; r < runs; ++r) {
    const std::uint64_t seed = derive_seed(params.seed, to_string(suite), {static_cast<std::uint64_t>(r)});
    double value = 0.0;
    switch (suite) {
      case Suite::Depth: {
        const Dataset data = sample_dataset(SparseFourier(d, {}), d, n, NoiseModel::gaussian(1.0), seed);
        value = expected_path_length(fit_cart(data, grow, *cart_criterion(), derive_seed(seed, "fit")));
        break;
      }
      case Suite::Halving: {
        const Dataset data = sample_dataset(SparseFourier(d, {}), d, n, NoiseModel::gaussian(1.0), seed);
        CartParams one = grow;
        one.max_depth = 1;
        const TreeModel t = fit_cart(data, one, *cart_criterion(), derive_seed(seed, "fit"));
        const int k = t.node(0).feature;
        Rng rng = make_rng(seed, "query");
        const bool query_negative = (rng() & 1U) != 0;
        std::size_t n1 = 0;
        for (std::size_t i = 0; i < n; ++i) n1 += data.column_negative(k, i) == query_negative ? 1 : 0;
        value = static_cast<double>(n1) / static_cast<double>(n);
        break;
      }
      case Suite::XorSelection: {
        const SparseFourier f(d, {{FeatureSet{1, 2}, 1.0}});
        const Dataset data = sample_dataset(f, d, n, NoiseModel::none(), seed);
        value = selection_probability(fit_cart(data, grow, *cart_criterion(), derive_seed(seed, "fit")), f.support());
        break;
      }
      case Suite::NonAdaptiveSelection: {
        std::vector<int> features(static_cast<std::size_t>(d));
        std::iota(features.begin(), features.end(), 1);
        Rng rng = make_rng(seed, "support");
        std::shuffle(features.begin(), features.end(), rng);
        features.resize(static_cast<std::size_t>(s));
        const FeatureSet support = FeatureSet::from_features(features);
        const SparseFourier f(d, {{support, 1.0}});
        const Dataset data = sample_dataset(f, d, n, NoiseModel::none(), seed);
        value = selection_probability(fit_random_tree(data, log2n, derive_seed(seed, "fit")), support);
        break;
      }
    }
    stat[static_cast<std::size_t>(r)] = value;
  }

  const double mean = std::accumulate(stat.begin(), stat.end(), 0.0) / runs;
  double ss = 0.0;
  for (double v : stat) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (runs - 1) / runs);

  ValidationReport rep{suite, mean, se, 0.0, 0.0, 0.0, false, runs, ""};
  std::ostringstream detail;
  detail << "d=" << d << " n=2^" << log2n;
  switch (suite) {
    case Suite::Depth:
      rep.bound = selection_prob_bound(SelectionKind::Depth, {.n = static_cast<double>(n)});
      detail << ", pure noise, grown to purity";
      break;
    case Suite::Halving:
      rep.bound = 0.5;
      rep.lower = 0.47;
      rep.upper = 0.53;
      detail << ", first split";
      break;
    case Suite::XorSelection:
      rep.bound = selection_prob_bound(SelectionKind::Xor, {.d = d, .n = static_cast<double>(n)});
      detail << ", f = x1*x2, grown to purity";
      break;
    case Suite::NonAdaptiveSelection:
      rep.bound = selection_prob_bound(SelectionKind::NonAdaptive, {.d = d, .n = static_cast<double>(n), .s = s});
      detail << ", s=" << s << ", random tree of depth " << log2n;
      break;
  }
  rep.pass = suite == Suite::Halving ? (mean >= rep.lower && mean <= rep.upper) : mean <= rep.bound + 3.0 * se;
  rep.detail = detail.str();
  return rep;
}

}  // namespace cubetree
