#include "cubetree/trees.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "cubetree/error.hpp"
#include "cubetree/rng.hpp"

namespace cubetree {

namespace {

constexpr int kTreeSchemaVersion = 1;

}  // namespace

TreeModel::TreeModel(int dim, std::vector<TreeNode> nodes) : dim_(dim), nodes_(std::move(nodes)) {
  if (dim < 1 || dim > kMaxDim) throw Error(ErrorKind::InvalidArgument, "tree dimension must be in 1..64");
  if (nodes_.empty()) throw Error(ErrorKind::InvalidArgument, "tree has no nodes");
  std::vector<char> seen(nodes_.size(), 0);
  double measure = 0.0;
  // (node, features used on the path, depth)
  std::vector<std::tuple<int, FeatureSet, int>> stack{{0, FeatureSet{}, 0}};
  while (!stack.empty()) {
    auto [i, used, depth] = stack.back();
    stack.pop_back();
    if (i < 0 || static_cast<std::size_t>(i) >= nodes_.size() || seen[static_cast<std::size_t>(i)]) {
      throw Error(ErrorKind::InvalidArgument, "malformed tree: bad or shared child index");
    }
    seen[static_cast<std::size_t>(i)] = 1;
    const TreeNode& nd = nodes_[static_cast<std::size_t>(i)];
    if (nd.is_leaf()) {
      measure += std::ldexp(1.0, -depth);
      continue;
    }
    if (nd.feature < 1 || nd.feature > dim) throw Error(ErrorKind::IndexOutOfRange, "split feature out of range");
    if (used.contains(nd.feature)) {
      throw Error(ErrorKind::InvalidArgument, "path repeats split feature x" + std::to_string(nd.feature));
    }
    stack.emplace_back(nd.right, used.with(nd.feature), depth + 1);
    stack.emplace_back(nd.left, used.with(nd.feature), depth + 1);
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorKind::InvalidArgument, "malformed tree: unreachable nodes");
  }
  if (measure != 1.0) throw Error(ErrorKind::InvalidArgument, "leaf measures do not sum to one");
}

TreeModel TreeModel::leaf(int dim, double value) { return TreeModel(dim, {TreeNode{0, -1, -1, value}}); }

int TreeModel::depth() const {
  int best = 0;
  for_each_leaf([&](int, const Cell& c) { best = std::max(best, c.depth()); });
  return best;
}

int TreeModel::leaf_of(std::uint64_t negative_mask) const {
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const TreeNode& nd = nodes_[static_cast<std::size_t>(i)];
    i = ((negative_mask >> (nd.feature - 1)) & 1U) ? nd.left : nd.right;
  }
  return i;
}

void TreeModel::for_each_leaf(const std::function<void(int, const Cell&)>& visit) const {
  std::function<void(int, const Cell&)> rec = [&](int i, const Cell& cell) {
    const TreeNode& nd = nodes_[static_cast<std::size_t>(i)];
    if (nd.is_leaf()) {
      visit(i, cell);
      return;
    }
    rec(nd.left, split_cell(cell, nd.feature, -1));
    rec(nd.right, split_cell(cell, nd.feature, +1));
  };
  rec(0, Cell(dim_));
}

Forest::Forest(std::vector<TreeModel> trees) : trees_(std::move(trees)) {
  if (trees_.empty()) throw Error(ErrorKind::InvalidArgument, "forest needs at least one tree");
  for (const TreeModel& t : trees_) {
    if (t.dim() != trees_.front().dim()) throw Error(ErrorKind::DimensionMismatch, "forest trees differ in dimension");
  }
}

double predict_mask(const TreeModel& tree, std::uint64_t negative_mask) {
  return tree.node(tree.leaf_of(negative_mask)).value;
}

double predict_mask(const Forest& forest, std::uint64_t negative_mask) {
  double s = 0.0;
  for (const TreeModel& t : forest.trees()) s += predict_mask(t, negative_mask);
  return s / static_cast<double>(forest.size());
}

double predict(const TreeModel& tree, const Point& x) {
  if (x.dim() != tree.dim()) throw Error(ErrorKind::DimensionMismatch, "point/tree dimension");
  return predict_mask(tree, x.negative_mask());
}

double predict(const Forest& forest, const Point& x) {
  if (x.dim() != forest.dim()) throw Error(ErrorKind::DimensionMismatch, "point/forest dimension");
  return predict_mask(forest, x.negative_mask());
}

namespace {

template <class Model>
double empirical_risk_impl(const Model& m, const Dataset& data) {
  if (m.dim() != data.dim()) throw Error(ErrorKind::DimensionMismatch, "model/dataset dimension");
  if (data.size() == 0) throw Error(ErrorKind::EmptyDataset, "empirical risk of an empty dataset");
  double sse = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data.y(i) - predict_mask(m, data.row_mask(i));
    sse += r * r;
  }
  return sse / static_cast<double>(data.size());
}

double leaf_risk(double label, const CellMoments& m) {
  const double bias = label - m.mean;
  return bias * bias + m.variance;
}

}  // namespace

double empirical_risk(const TreeModel& tree, const Dataset& data) { return empirical_risk_impl(tree, data); }
double empirical_risk(const Forest& forest, const Dataset& data) { return empirical_risk_impl(forest, data); }

std::string to_string(RiskReport::Method m) { return m == RiskReport::Method::Exact ? "exact" : "mc"; }

double exact_risk(const TreeModel& tree, const SparseFourier& f) {
  if (tree.dim() != f.dim()) throw Error(ErrorKind::DimensionMismatch, "tree/function dimension");
  double risk = 0.0;
  tree.for_each_leaf([&](int i, const Cell& cell) {
    const CellMoments m = restricted_moments(f, cell.fixed(), cell.negative());
    risk += cell.measure() * leaf_risk(tree.node(i).value, m);
  });
  return risk;
}

namespace {

struct RefinementOverflow {};

class Refiner {
 public:
  Refiner(const Forest& forest, const SparseFourier& f, std::size_t cap) : forest_(forest), f_(f), cap_(cap) {}

  double run() {
    std::vector<int> at(forest_.size(), 0);
    return visit(FeatureSet{}, 0, at);
  }

 private:
  double visit(FeatureSet fixed, std::uint64_t neg, std::vector<int> at) {
    int split_on = 0;
    double label = 0.0;
    for (std::size_t t = 0; t < forest_.size(); ++t) {
      const TreeModel& tree = forest_.trees()[t];
      int i = at[t];
      while (!tree.node(i).is_leaf() && fixed.contains(tree.node(i).feature)) {
        const TreeNode& nd = tree.node(i);
        i = ((neg >> (nd.feature - 1)) & 1U) ? nd.left : nd.right;
      }
      at[t] = i;
      if (!tree.node(i).is_leaf()) {
        if (split_on == 0) split_on = tree.node(i).feature;
      } else {
        label += tree.node(i).value;
      }
    }
    if (split_on != 0) {
      const FeatureSet next = fixed.with(split_on);
      const std::uint64_t bit = std::uint64_t{1} << (split_on - 1);
      return visit(next, neg | bit, at) + visit(next, neg, at);
    }
    if (++cells_ > cap_) throw RefinementOverflow{};
    label /= static_cast<double>(forest_.size());
    return std::ldexp(leaf_risk(label, restricted_moments(f_, fixed, neg)), -fixed.size());
  }

  const Forest& forest_;
  const SparseFourier& f_;
  std::size_t cap_;
  std::size_t cells_ = 0;
};

}  // namespace

RiskReport exact_risk(const Forest& forest, const SparseFourier& f, const ForestRiskOptions& options) {
  if (forest.dim() != f.dim()) throw Error(ErrorKind::DimensionMismatch, "forest/function dimension");
  try {
    return {Refiner(forest, f, options.refinement_cap).run(), RiskReport::Method::Exact, 0.0};
  } catch (const RefinementOverflow&) {
  }
  if (options.mc_samples < 2) throw Error(ErrorKind::RefinementCapExceeded, "refinement cap exceeded and MC disabled");
  Rng rng = make_rng(options.mc_seed, "forest-risk-mc");
  const std::uint64_t valid = FeatureSet::all(forest.dim()).bits();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < options.mc_samples; ++i) {
    const std::uint64_t x = rng() & valid;
    const double r = predict_mask(forest, x) - eval_mask(f, x);
    sum += r * r;
    sum_sq += r * r * r * r;
  }
  const double n = static_cast<double>(options.mc_samples);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, RiskReport::Method::MonteCarlo, std::sqrt(var / n)};
}

std::vector<int> query_path(const TreeModel& tree, const Point& x) {
  if (x.dim() != tree.dim()) throw Error(ErrorKind::DimensionMismatch, "point/tree dimension");
  std::vector<int> path;
  int i = 0;
  while (!tree.node(i).is_leaf()) {
    const TreeNode& nd = tree.node(i);
    path.push_back(nd.feature);
    i = x[nd.feature] < 0 ? nd.left : nd.right;
  }
  return path;
}

double coverage(const TreeModel& tree, int k) {
  if (k < 1 || k > tree.dim()) throw Error(ErrorKind::IndexOutOfRange, "feature x" + std::to_string(k));
  return selection_probability(tree, FeatureSet{}.with(k));
}

std::vector<double> coverages(const TreeModel& tree) {
  std::vector<double> out(static_cast<std::size_t>(tree.dim()), 0.0);
  tree.for_each_leaf([&](int, const Cell& cell) {
    for (int k : cell.fixed().features()) out[static_cast<std::size_t>(k - 1)] += cell.measure();
  });
  return out;
}

double selection_probability(const TreeModel& tree, FeatureSet features) {
  double p = 0.0;
  tree.for_each_leaf([&](int, const Cell& cell) {
    if (!(cell.fixed() & features).empty()) p += cell.measure();
  });
  return p;
}

double expected_path_length(const TreeModel& tree) {
  double e = 0.0;
  tree.for_each_leaf([&](int, const Cell& cell) { e += cell.depth() * cell.measure(); });
  return e;
}

namespace {

nlohmann::json node_to_json(const TreeModel& tree, int i) {
  const TreeNode& nd = tree.node(i);
  if (nd.is_leaf()) return {{"leaf", nd.value}};
  return {{"split", nd.feature}, {"left", node_to_json(tree, nd.left)}, {"right", node_to_json(tree, nd.right)}};
}

int node_from_json(const nlohmann::json& j, std::vector<TreeNode>& nodes) {
  const int i = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (j.contains("leaf")) {
    nodes[static_cast<std::size_t>(i)].value = j.at("leaf").get<double>();
    return i;
  }
  const int feature = j.at("split").get<int>();
  const int l = node_from_json(j.at("left"), nodes);
  const int r = node_from_json(j.at("right"), nodes);
  nodes[static_cast<std::size_t>(i)] = TreeNode{feature, l, r, 0.0};
  return i;
}

nlohmann::json tree_json(const TreeModel& tree) {
  return {{"schema", "cubetree.tree"}, {"version", kTreeSchemaVersion}, {"dim", tree.dim()},
          {"root", node_to_json(tree, 0)}};
}

TreeModel tree_from(const nlohmann::json& j) {
  if (j.at("schema") != "cubetree.tree") throw Error(ErrorKind::ParseError, "not a cubetree.tree document");
  if (j.at("version") != kTreeSchemaVersion) throw Error(ErrorKind::ParseError, "unsupported tree schema version");
  std::vector<TreeNode> nodes;
  node_from_json(j.at("root"), nodes);
  return TreeModel(j.at("dim").get<int>(), std::move(nodes));
}

}  // namespace

std::string to_json(const TreeModel& tree) { return tree_json(tree).dump(); }

TreeModel tree_from_json(const std::string& text) {
  try {
    return tree_from(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

std::string to_json(const Forest& forest) {
  nlohmann::json j{{"schema", "cubetree.forest"}, {"version", kTreeSchemaVersion}, {"trees", nlohmann::json::array()}};
  for (const TreeModel& t : forest.trees()) j["trees"].push_back(tree_json(t));
  return j.dump();
}

Forest forest_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema") != "cubetree.forest") throw Error(ErrorKind::ParseError, "not a cubetree.forest document");
    std::vector<TreeModel> trees;
    for (const auto& t : j.at("trees")) trees.push_back(tree_from(t));
    return Forest(std::move(trees));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

}  // namespace cubetree
