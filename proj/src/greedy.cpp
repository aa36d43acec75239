#include "cubetree/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>

#include "cubetree/error.hpp"
#include "cubetree/rng.hpp"

namespace cubetree {

double impurity(std::span<const double> responses) {
  if (responses.empty()) throw Error(ErrorKind::EmptyCell, "impurity of an empty cell");
  const double n = static_cast<double>(responses.size());
  const double mean = std::accumulate(responses.begin(), responses.end(), 0.0) / n;
  double ss = 0.0;
  for (double y : responses) ss += (y - mean) * (y - mean);
  return ss / n;
}

namespace {

struct SplitSides {
  std::vector<double> all, left, right;  // left: x_k = -1
};

SplitSides split_sides(int k, const Cell& cell, const Dataset& data) {
  if (cell.dim() != data.dim()) throw Error(ErrorKind::DimensionMismatch, "cell/dataset dimension");
  if (k < 1 || k > data.dim()) throw Error(ErrorKind::IndexOutOfRange, "feature x" + std::to_string(k));
  if (cell.is_fixed(k)) throw Error(ErrorKind::FeatureAlreadyFixed, "x" + std::to_string(k) + " is fixed in the cell");
  SplitSides s;
  for (std::size_t i : cell_members(cell, data).indices) {
    s.all.push_back(data.y(i));
    (data.x(i, k) < 0 ? s.left : s.right).push_back(data.y(i));
  }
  if (s.all.empty()) throw Error(ErrorKind::EmptyCell, "impurity decrease on an empty cell");
  return s;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double impurity_decrease(int k, const Cell& cell, const Dataset& data) {
  const SplitSides s = split_sides(k, cell, data);
  const double n = static_cast<double>(s.all.size());
  double d = impurity(s.all);
  if (!s.right.empty()) d -= static_cast<double>(s.right.size()) / n * impurity(s.right);
  if (!s.left.empty()) d -= static_cast<double>(s.left.size()) / n * impurity(s.left);
  return d;
}

double impurity_decrease_pq(int k, const Cell& cell, const Dataset& data) {
  const SplitSides s = split_sides(k, cell, data);
  if (s.left.empty() || s.right.empty()) return 0.0;
  const double p = static_cast<double>(s.right.size()) / static_cast<double>(s.all.size());
  const double gap = mean_of(s.right) - mean_of(s.left);
  return p * (1.0 - p) * gap * gap;
}

std::optional<double> impurity_decrease_corr(int k, const Cell& cell, const Dataset& data) {
  const SplitSides s = split_sides(k, cell, data);
  const double n = static_cast<double>(s.all.size());
  const double ybar = mean_of(s.all);
  const double xbar = (static_cast<double>(s.right.size()) - static_cast<double>(s.left.size())) / n;
  double sxy = 0.0;
  for (double y : s.right) sxy += (1.0 - xbar) * (y - ybar);
  for (double y : s.left) sxy += (-1.0 - xbar) * (y - ybar);
  const double var_x = 1.0 - xbar * xbar;
  const double var_y = impurity(s.all);
  if (var_x <= 0.0 || var_y <= 0.0) return std::nullopt;
  const double cov = sxy / n;
  return var_y * (cov * cov / (var_x * var_y));
}

namespace {

class CartCriterion final : public GreedyCriterion {
 public:
  std::string name() const override { return "cart"; }
  void score(const Dataset&, std::span<const std::uint32_t> idx, double node_sum, std::span<const int>,
             std::span<const FeatureSplitStats> stats, std::span<double> scores) const override {
    for (std::size_t j = 0; j < stats.size(); ++j) scores[j] = impurity_decrease_from_stats(idx.size(), node_sum, stats[j]);
  }
};

struct Registry {
  std::mutex mu;
  std::map<std::string, std::shared_ptr<const GreedyCriterion>> by_name;
};

Registry& registry() {
  static Registry r;
  static std::once_flag once;
  std::call_once(once, [] { r.by_name.emplace("cart", cart_criterion()); });
  return r;
}

}  // namespace

std::shared_ptr<const GreedyCriterion> cart_criterion() {
  static const auto instance = std::make_shared<const CartCriterion>();
  return instance;
}

void register_criterion(std::shared_ptr<const GreedyCriterion> criterion) {
  if (!criterion) throw Error(ErrorKind::InvalidArgument, "null criterion");
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  r.by_name[criterion->name()] = std::move(criterion);
}

std::shared_ptr<const GreedyCriterion> find_criterion(const std::string& name) {
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  auto it = r.by_name.find(name);
  if (it == r.by_name.end()) throw Error(ErrorKind::InvalidArgument, "unknown criterion '" + name + "'");
  return it->second;
}

std::vector<std::string> registered_criteria() {
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  std::vector<std::string> names;
  for (const auto& [name, _] : r.by_name) names.push_back(name);
  return names;
}

namespace {

constexpr double kTieTol = 1e-12;

std::uint64_t child_key(std::uint64_t parent, int feature, int side) {
  return mix64(parent ^ mix64(static_cast<std::uint64_t>(feature) * 2 + (side > 0 ? 1 : 0)));
}

struct Work {
  int node;
  std::vector<std::uint32_t> idx;
  FeatureSet fixed;
  int depth;
  std::uint64_t key;
};

void validate(const CartParams& p, int dim) {
  if (!(p.gamma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma must be >= 0");
  if (p.mtry && (*p.mtry < 1 || *p.mtry > dim)) throw Error(ErrorKind::InvalidArgument, "mtry must be in 1..d");
  if (p.max_depth && *p.max_depth < 0) throw Error(ErrorKind::InvalidArgument, "max_depth must be >= 0");
  if (p.min_samples < 1) throw Error(ErrorKind::InvalidArgument, "min_samples must be >= 1");
}

std::vector<int> draw_mtry(int dim, int mtry, std::uint64_t key) {
  std::vector<int> all(static_cast<std::size_t>(dim));
  std::iota(all.begin(), all.end(), 1);
  Rng rng(mix64(key ^ hash_tag("mtry")));
  for (int i = 0; i < mtry; ++i) {
    std::uniform_int_distribution<int> pick(i, dim - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
  }
  all.resize(static_cast<std::size_t>(mtry));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

CartFit fit_cart_path(const Dataset& data, std::span<const std::uint32_t> rows, const CartParams& params,
                      const GreedyCriterion& criterion, std::uint64_t seed) {
  if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "cannot fit a tree to no samples");
  validate(params, data.dim());
  const int dim = data.dim();
  const double n_total = static_cast<double>(rows.size());

  std::vector<TreeNode> nodes(1);
  std::vector<double> scores(1, -std::numeric_limits<double>::infinity());
  std::vector<Work> stack;
  stack.push_back({0, std::vector<std::uint32_t>(rows.begin(), rows.end()), FeatureSet{}, 0,
                   derive_seed(seed, "cart-node")});

  std::vector<int> candidates;
  std::vector<FeatureSplitStats> stats;
  std::vector<double> crit;

  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    const std::size_t count = w.idx.size();
    double sum = 0.0;
    bool pure = true;
    const double first_y = data.y(w.idx.front());
    for (std::uint32_t i : w.idx) {
      sum += data.y(i);
      pure = pure && data.y(i) == first_y;
    }
    TreeNode& self = nodes[static_cast<std::size_t>(w.node)];
    self.value = sum / static_cast<double>(count);

    if (count <= params.min_samples || pure || (params.max_depth && w.depth >= *params.max_depth)) continue;

    candidates.clear();
    if (params.mtry) {
      for (int k : draw_mtry(dim, *params.mtry, w.key)) {
        if (!w.fixed.contains(k)) candidates.push_back(k);
      }
    } else {
      for (int k = 1; k <= dim; ++k) {
        if (!w.fixed.contains(k)) candidates.push_back(k);
      }
    }
    stats.resize(candidates.size());
    if (params.parallel_scan) {
      scan_features_parallel(data, w.idx, candidates, stats);
    } else {
      scan_features_serial(data, w.idx, candidates, stats);
    }
    // Drop features constant within the node.
    std::size_t kept = 0;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (stats[j].neg_count > 0 && stats[j].neg_count < count) {
        candidates[kept] = candidates[j];
        stats[kept] = stats[j];
        ++kept;
      }
    }
    candidates.resize(kept);
    stats.resize(kept);
    if (candidates.empty()) continue;

    crit.assign(candidates.size(), 0.0);
    criterion.score(data, w.idx, sum, candidates, stats, crit);
    const double best = *std::max_element(crit.begin(), crit.end());
    const double score = static_cast<double>(count) / n_total * best;
    scores[static_cast<std::size_t>(w.node)] = score;
    if (score < params.gamma) continue;

    std::vector<int> tied;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (crit[j] >= best - kTieTol * std::abs(best)) tied.push_back(candidates[j]);
    }
    int k = tied.front();
    if (params.tie_break == TieBreak::Random && tied.size() > 1) {
      k = tied[hashed_below(w.key ^ hash_tag("tie"), tied.size())];
    }

    std::vector<std::uint32_t> left, right;
    left.reserve(count);
    right.reserve(count);
    for (std::uint32_t i : w.idx) (data.column_negative(k, i) ? left : right).push_back(i);

    const int l = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes.push_back({});
    scores.push_back(-std::numeric_limits<double>::infinity());
    scores.push_back(-std::numeric_limits<double>::infinity());
    nodes[static_cast<std::size_t>(w.node)].feature = k;
    nodes[static_cast<std::size_t>(w.node)].left = l;
    nodes[static_cast<std::size_t>(w.node)].right = l + 1;
    const FeatureSet fixed = w.fixed.with(k);
    stack.push_back({l + 1, std::move(right), fixed, w.depth + 1, child_key(w.key, k, +1)});
    stack.push_back({l, std::move(left), fixed, w.depth + 1, child_key(w.key, k, -1)});
  }
  return {TreeModel(dim, std::move(nodes)), std::move(scores)};
}

CartFit fit_cart_path(const Dataset& data, const CartParams& params, const GreedyCriterion& criterion,
                      std::uint64_t seed) {
  std::vector<std::uint32_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0U);
  return fit_cart_path(data, rows, params, criterion, seed);
}

TreeModel fit_cart(const Dataset& data, const CartParams& params, const GreedyCriterion& criterion,
                   std::uint64_t seed) {
  return fit_cart_path(data, params, criterion, seed).tree;
}

TreeModel truncate(const CartFit& fit, double gamma) {
  std::vector<TreeNode> out;
  const TreeModel& t = fit.tree;
  std::vector<std::pair<int, int>> stack{{0, 0}};  // (source, destination)
  out.emplace_back();
  while (!stack.empty()) {
    auto [src, dst] = stack.back();
    stack.pop_back();
    const TreeNode& nd = t.node(src);
    out[static_cast<std::size_t>(dst)].value = nd.value;
    if (nd.is_leaf() || fit.node_score[static_cast<std::size_t>(src)] < gamma) continue;
    const int l = static_cast<int>(out.size());
    out.emplace_back();
    out.emplace_back();
    out[static_cast<std::size_t>(dst)].feature = nd.feature;
    out[static_cast<std::size_t>(dst)].left = l;
    out[static_cast<std::size_t>(dst)].right = l + 1;
    stack.emplace_back(nd.right, l + 1);
    stack.emplace_back(nd.left, l);
  }
  return TreeModel(t.dim(), std::move(out));
}

Forest ForestFit::forest() const {
  std::vector<TreeModel> ts;
  for (const CartFit& f : trees) ts.push_back(f.tree);
  return Forest(std::move(ts));
}

Forest ForestFit::truncated(double gamma) const {
  std::vector<TreeModel> ts;
  for (const CartFit& f : trees) ts.push_back(truncate(f, gamma));
  return Forest(std::move(ts));
}

ForestFit fit_forest_path(const Dataset& data, const ForestParams& params, Execution exec) {
  if (data.size() == 0) throw Error(ErrorKind::EmptyDataset, "cannot fit a forest to no samples");
  if (params.trees < 1) throw Error(ErrorKind::InvalidArgument, "forest needs M >= 1");
  CartParams cart = params.cart;
  cart.mtry = params.mtry ? params.mtry
                          : std::optional<int>(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(data.dim())))));
  validate(cart, data.dim());
  const std::size_t m = static_cast<std::size_t>(params.trees);
  const std::size_t n = data.size();

  std::vector<std::optional<CartFit>> fits(m);
  std::vector<std::vector<std::uint32_t>> oob(m);
  const GreedyCriterion& crit = *cart_criterion();
  auto fit_one = [&](std::size_t t) {
    std::vector<std::uint32_t> rows(n);
    std::vector<char> in_bag(n, 0);
    if (params.bootstrap) {
      Rng rng = make_rng(params.seed, "bootstrap", {t});
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
      for (auto& r : rows) {
        r = pick(rng);
        in_bag[r] = 1;
      }
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), 0U);
      std::fill(in_bag.begin(), in_bag.end(), 1);
    }
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!in_bag[i]) oob[t].push_back(i);
    }
    CartParams local = cart;
    local.parallel_scan = false;  // parallelism lives at the tree level here
    fits[t] = fit_cart_path(data, rows, local, crit, derive_seed(params.seed, "tree", {t}));
  };

  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(m); ++t) fit_one(static_cast<std::size_t>(t));
  } else {
    for (std::size_t t = 0; t < m; ++t) fit_one(t);
  }

  ForestFit out;
  for (auto& f : fits) out.trees.push_back(std::move(*f));
  out.out_of_bag = std::move(oob);
  return out;
}

Forest fit_forest(const Dataset& data, const ForestParams& params, Execution exec) {
  return fit_forest_path(data, params, exec).forest();
}

TreeModel fit_random_tree(const Dataset& data, int depth_budget, std::uint64_t seed) {
  if (data.size() == 0) throw Error(ErrorKind::EmptyDataset, "cannot fit a tree to no samples");
  if (depth_budget < 0) throw Error(ErrorKind::InvalidArgument, "depth budget must be >= 0");
  const int dim = data.dim();
  const std::span<const double> y = data.responses();
  const double global_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

  std::vector<TreeNode> nodes(1);
  std::vector<Work> stack;
  std::vector<std::uint32_t> all(data.size());
  std::iota(all.begin(), all.end(), 0U);
  stack.push_back({0, std::move(all), FeatureSet{}, 0, derive_seed(seed, "random-tree-node")});
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    double sum = 0.0;
    for (std::uint32_t i : w.idx) sum += y[i];
    nodes[static_cast<std::size_t>(w.node)].value = w.idx.empty() ? global_mean : sum / static_cast<double>(w.idx.size());
    if (w.depth >= depth_budget || w.idx.size() <= 1 || w.fixed.size() == dim) continue;

    const std::vector<int> free_features = FeatureSet::all(dim).minus(w.fixed).features();
    const int k = free_features[hashed_below(w.key, free_features.size())];
    std::vector<std::uint32_t> left, right;
    for (std::uint32_t i : w.idx) (data.column_negative(k, i) ? left : right).push_back(i);
    const int l = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes.push_back({});
    nodes[static_cast<std::size_t>(w.node)].feature = k;
    nodes[static_cast<std::size_t>(w.node)].left = l;
    nodes[static_cast<std::size_t>(w.node)].right = l + 1;
    const FeatureSet fixed = w.fixed.with(k);
    stack.push_back({l + 1, std::move(right), fixed, w.depth + 1, child_key(w.key, k, +1)});
    stack.push_back({l, std::move(left), fixed, w.depth + 1, child_key(w.key, k, -1)});
  }
  return TreeModel(dim, std::move(nodes));
}

}  // namespace cubetree
