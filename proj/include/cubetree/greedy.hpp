#pragma once

// Greedy top-down tree fitting: CART impurity machinery, pluggable split
// criteria, random forests and completely random (non-adaptive) trees.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cubetree/boolcube.hpp"
#include "cubetree/split_kernel.hpp"
#include "cubetree/trees.hpp"

namespace cubetree {

/// (1/N) sum (Y_i - Ybar)^2; throws EmptyCell for no responses.
double impurity(std::span<const double> responses);

/// I(C) - (N_R/N) I(C_R) - (N_L/N) I(C_L); an empty child contributes 0.
double impurity_decrease(int k, const Cell& cell, const Dataset& data);
/// p(1-p)(Ybar_R - Ybar_L)^2 with p = N_R/N; 0 if a child is empty.
double impurity_decrease_pq(int k, const Cell& cell, const Dataset& data);
/// I(C) * Corr^2(Y, X_k | C); nullopt when either variance is zero.
std::optional<double> impurity_decrease_corr(int k, const Cell& cell, const Dataset& data);

/// Split criterion O(k; C, D). Implementations may read only column k and the
/// responses of the node's samples, and should be symmetric under X -> -X
/// (not checked).
class GreedyCriterion {
 public:
  virtual ~GreedyCriterion() = default;
  virtual std::string name() const = 0;
  /// scores[j] = O(candidates[j]; node). The fitter passes the kernel's
  /// per-candidate statistics and the node's response sum; criteria that need
  /// more than counts and sums read column k and the responses over idx.
  virtual void score(const Dataset& data, std::span<const std::uint32_t> idx, double node_sum,
                     std::span<const int> candidates, std::span<const FeatureSplitStats> stats,
                     std::span<double> scores) const = 0;
};

/// Impurity decrease, registered as "cart".
std::shared_ptr<const GreedyCriterion> cart_criterion();

void register_criterion(std::shared_ptr<const GreedyCriterion> criterion);
/// Throws InvalidArgument for unknown names.
std::shared_ptr<const GreedyCriterion> find_criterion(const std::string& name);
std::vector<std::string> registered_criteria();

enum class TieBreak { LowestIndex, Random };

struct CartParams {
  double gamma = 0.0;                 // minimum weighted impurity decrease
  std::optional<int> max_depth;
  TieBreak tie_break = TieBreak::LowestIndex;
  std::optional<int> mtry;            // fresh uniform feature subset per node
  std::size_t min_samples = 1;        // N(C) <= min_samples makes a leaf
  bool parallel_scan = true;          // OpenMP kernel, or the serial reference
};

/// A grown tree plus, per node, the stopping statistic (N(C)/n) max_k score
/// (negative infinity where it was never computed). Truncating at any
/// gamma' >= the fitting gamma reproduces fit_cart at gamma' exactly, because
/// every per-node random draw is keyed by the node's position, not by visit order.
struct CartFit {
  TreeModel tree;
  std::vector<double> node_score;
};

TreeModel fit_cart(const Dataset& data, const CartParams& params = {},
                   const GreedyCriterion& criterion = *cart_criterion(), std::uint64_t seed = 0);
CartFit fit_cart_path(const Dataset& data, const CartParams& params = {},
                      const GreedyCriterion& criterion = *cart_criterion(), std::uint64_t seed = 0);
/// Fits on the multiset of rows `rows` (e.g. a bootstrap sample); n = rows.size().
CartFit fit_cart_path(const Dataset& data, std::span<const std::uint32_t> rows, const CartParams& params,
                      const GreedyCriterion& criterion, std::uint64_t seed);
TreeModel truncate(const CartFit& fit, double gamma);

enum class Execution { Serial, Parallel };

struct ForestParams {
  int trees = 100;
  bool bootstrap = true;
  std::optional<int> mtry;  // default ceil(sqrt(d))
  CartParams cart;
  std::uint64_t seed = 0;
};

struct ForestFit {
  std::vector<CartFit> trees;
  std::vector<std::vector<std::uint32_t>> out_of_bag;  // recorded, not used by any estimator here
  Forest forest() const;
  Forest truncated(double gamma) const;
};

Forest fit_forest(const Dataset& data, const ForestParams& params, Execution exec = Execution::Parallel);
ForestFit fit_forest_path(const Dataset& data, const ForestParams& params, Execution exec = Execution::Parallel);

/// Split feature drawn uniformly from the unconstrained ones; structure ignores
/// the responses. Stops at depth_budget or N(C) <= 1. Empty leaves get the
/// global mean.
TreeModel fit_random_tree(const Dataset& data, int depth_budget, std::uint64_t seed);

}  // namespace cubetree
