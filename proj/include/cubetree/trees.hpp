#pragma once

// Axis-aligned binary trees on {-1,+1}^d: prediction, exact L2 risk through the
// Fourier restriction on each leaf, query paths and split coverage.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cubetree/boolcube.hpp"
#include "cubetree/fourier.hpp"

namespace cubetree {

struct TreeNode {
  int feature = 0;   // split feature (1-based); 0 marks a leaf
  int left = -1;     // child with x_feature = -1
  int right = -1;    // child with x_feature = +1
  double value = 0;  // leaf label; for internal nodes the node mean (kept for truncation)

  bool is_leaf() const { return feature == 0; }
  bool operator==(const TreeNode&) const = default;
};

class TreeModel {
 public:
  /// Validates structure: node 0 is the root, every internal node has two
  /// children, and no root-to-leaf path repeats a feature.
  TreeModel(int dim, std::vector<TreeNode> nodes);
  static TreeModel leaf(int dim, double value);

  int dim() const { return dim_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const { return (nodes_.size() + 1) / 2; }
  int depth() const;

  /// Leaf index reached by a point given as its negative mask.
  int leaf_of(std::uint64_t negative_mask) const;

  /// Visits leaves left to right with their cells.
  void for_each_leaf(const std::function<void(int node, const Cell& cell)>& visit) const;

  bool operator==(const TreeModel&) const = default;

 private:
  int dim_;
  std::vector<TreeNode> nodes_;
};

class Forest {
 public:
  explicit Forest(std::vector<TreeModel> trees);
  int dim() const { return trees_.front().dim(); }
  const std::vector<TreeModel>& trees() const { return trees_; }
  std::size_t size() const { return trees_.size(); }
  bool operator==(const Forest&) const = default;

 private:
  std::vector<TreeModel> trees_;
};

double predict(const TreeModel& tree, const Point& x);
double predict(const Forest& forest, const Point& x);
double predict_mask(const TreeModel& tree, std::uint64_t negative_mask);
double predict_mask(const Forest& forest, std::uint64_t negative_mask);

/// (1/n) sum (Y_i - g(X_i))^2
double empirical_risk(const TreeModel& tree, const Dataset& data);
double empirical_risk(const Forest& forest, const Dataset& data);

struct RiskReport {
  enum class Method { Exact, MonteCarlo };
  double risk = 0.0;
  Method method = Method::Exact;
  double se = 0.0;
};
std::string to_string(RiskReport::Method m);

/// E_X (g(X) - f(X))^2 summed leaf by leaf:
/// 2^{-depth(L)} [(mu_L - alpha^L_0)^2 + sum_{S != {}} (alpha^L_S)^2].
double exact_risk(const TreeModel& tree, const SparseFourier& f);

struct ForestRiskOptions {
  std::size_t refinement_cap = std::size_t{1} << 20;
  std::size_t mc_samples = 200000;
  std::uint64_t mc_seed = 0;
};
/// Exact over the common refinement of the leaf partitions; falls back to Monte
/// Carlo (method = MonteCarlo, se reported) when the refinement exceeds the cap.
RiskReport exact_risk(const Forest& forest, const SparseFourier& f, const ForestRiskOptions& options = {});

/// Split features along the root-to-leaf path of x, in depth order.
std::vector<int> query_path(const TreeModel& tree, const Point& x);

/// P{k in J(X)} for uniform X.
double coverage(const TreeModel& tree, int k);
/// coverage for every feature; entry k-1 is feature k.
std::vector<double> coverages(const TreeModel& tree);
/// P{J(X) intersects S}.
double selection_probability(const TreeModel& tree, FeatureSet features);
/// sum_L depth(L) 2^{-depth(L)}
double expected_path_length(const TreeModel& tree);

/// Nested JSON: {"schema":"cubetree.tree","version":1,"dim":d,"root":{...}} where
/// a node is {"split":k,"left":{..},"right":{..}} or {"leaf":value}.
std::string to_json(const TreeModel& tree);
TreeModel tree_from_json(const std::string& text);
std::string to_json(const Forest& forest);
Forest forest_from_json(const std::string& text);

}  // namespace cubetree
