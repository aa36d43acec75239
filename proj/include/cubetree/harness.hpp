#pragma once

// Experiment configuration, per-replicate fitting, sweeps to CSV, and
// Monte-Carlo checks of the query-path and selection lemmas.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cubetree/fourier.hpp"
#include "cubetree/greedy.hpp"

namespace cubetree {

enum class Estimator { Cart, Forest, Erm, Random };
std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);  // cart | rf | erm | random

struct EstimatorParams {
  std::optional<int> max_depth;      // cart, rf
  TieBreak tie_break = TieBreak::LowestIndex;
  std::optional<int> mtry;           // rf default ceil(sqrt d); cart default all features
  std::size_t min_samples = 1;
  std::string criterion = "cart";    // registered GreedyCriterion name; cart estimator only
  int trees = 100;                   // rf
  bool bootstrap = true;             // rf
  int depth_budget = 2;              // erm, random
  double clip = 1.0;                 // erm
  std::size_t state_cap = std::size_t{1} << 24;
};

struct GammaSelection {
  enum class Mode { Fixed, Validation };
  Mode mode = Mode::Fixed;
  double value = 0.0;
  std::vector<double> grid;          // default 0 and 2^-k, k = 0..12
  double validation_fraction = 0.3;  // tail of the generated dataset
};

/// {0} and 2^-k for k = 0..12, ascending.
std::vector<double> default_gamma_grid();

struct ExperimentConfig {
  std::string name = "experiment";
  std::string function;  // text grammar; "{alpha}" is substituted per grid point
  std::vector<int> d;
  std::vector<int> log2n;
  std::vector<double> sigma2{0.0};
  std::vector<double> alpha{0.0};
  Estimator estimator = Estimator::Cart;
  EstimatorParams params;
  GammaSelection gamma;
  int replicates = 1;
  std::uint64_t seed = 0;
  bool metric_coverage = false;
  bool metric_selection = false;
  std::vector<int> coverage_features;

  /// Canonical JSON (sorted keys, defaults filled in); the hash digests this.
  std::string canonical_json() const;
  std::string hash() const;
};

/// Throws Error(ConfigError) naming the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

struct GridPoint {
  int d;
  int log2n;
  double sigma2;
  double alpha;
  auto operator<=>(const GridPoint&) const = default;
};

/// Sorted by (d, log2n, sigma2, alpha).
std::vector<GridPoint> grid_points(const ExperimentConfig& config);
SparseFourier function_at(const ExperimentConfig& config, const GridPoint& p);
std::uint64_t replicate_seed(const ExperimentConfig& config, const GridPoint& p, int replicate);

struct SweepRow {
  std::string experiment;
  std::string function_hash;
  GridPoint point{};
  Estimator estimator = Estimator::Cart;
  double gamma_used = 0.0;  // NaN for erm and random
  int replicate = 0;
  std::uint64_t seed = 0;
  double risk_exact = 0.0;
  double risk_se = 0.0;     // nonzero only for Monte-Carlo forest risk
  double mean_depth = 0.0;  // expected query-path length (mean over trees)
  double node_count = 0.0;  // mean over trees
  std::optional<double> selection;  // P(query path meets the support)
  std::vector<double> coverage;     // aligned with coverage_features
};

/// Errors are rethrown with the grid point and replicate in the message.
SweepRow run_fit(const ExperimentConfig& config, const GridPoint& p, int replicate);
/// All grid x replicate rows in sorted order; `jobs` OpenMP threads.
std::vector<SweepRow> run_rows(const ExperimentConfig& config, int jobs);
void write_sweep_csv(std::ostream& out, const ExperimentConfig& config, const std::vector<SweepRow>& rows);
/// Throws IoError when the output cannot be written.
void run_sweep(const ExperimentConfig& config, const std::string& out_path, int jobs);

enum class Suite { Depth, Halving, XorSelection, NonAdaptiveSelection };
std::string to_string(Suite s);
Suite parse_suite(const std::string& name);  // depth | halving | xor_selection | nonadaptive_selection

struct ValidationParams {
  std::optional<int> runs;   // default 200 (depth), 500 (halving), 400 (selection suites)
  std::optional<int> d;      // default 20 (depth, halving), 50 (selection suites)
  std::optional<int> log2n;  // default 10 (depth, halving), 7 (xor), 9 (nonadaptive)
  std::optional<int> s;      // nonadaptive sparsity, default 2
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct ValidationReport {
  Suite suite;
  double statistic;
  double se;
  double bound;       // upper bound (or interval centre for halving)
  double lower = 0;   // halving interval
  double upper = 0;
  bool pass;
  int runs;
  std::string detail;
  std::string to_text() const;
};

ValidationReport run_validation(Suite suite, const ValidationParams& params = {});

}  // namespace cubetree
