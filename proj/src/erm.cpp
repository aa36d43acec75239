#include "cubetree/erm.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "cubetree/error.hpp"
#include "cubetree/rng.hpp"

namespace cubetree {

double erm_leaf_label(std::span<const double> y, std::span<const std::uint32_t> idx, double clip) {
  if (idx.empty()) return 0.0;
  double sum = 0.0;
  for (std::uint32_t i : idx) sum += y[i];
  return std::clamp(sum / static_cast<double>(idx.size()), -clip, clip);
}

double erm_leaf_sse(std::span<const double> y, std::span<const std::uint32_t> idx, double clip) {
  const double label = erm_leaf_label(y, idx, clip);
  double sse = 0.0;
  for (std::uint32_t i : idx) sse += (y[i] - label) * (y[i] - label);
  return sse;
}

std::size_t erm_state_estimate(int dim, int depth) {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  std::size_t total = 0;
  double binom = 1.0;  // C(dim, j) * 2^j, kept in double to detect overflow
  for (int j = 0; j <= depth; ++j) {
    if (j > 0) binom = binom * static_cast<double>(dim - j + 1) / j * 2.0;
    if (binom + static_cast<double>(total) >= 1.8e19) return kMax;
    total += static_cast<std::size_t>(binom + 0.5);
  }
  return total;
}

namespace {

void check_params(const Dataset& data, const ErmParams& p) {
  if (data.size() == 0) throw Error(ErrorKind::EmptyDataset, "cannot fit a tree to no samples");
  if (p.depth_budget < 0 || p.depth_budget > data.dim()) {
    throw Error(ErrorKind::InvalidArgument, "depth budget must be in 0..d");
  }
  if (!(p.clip > 0.0)) throw Error(ErrorKind::InvalidArgument, "clip bound must be positive");
  if (p.state_cap < 1) throw Error(ErrorKind::InvalidArgument, "state cap must be >= 1");
}

struct CellKey {
  std::uint64_t fixed, negative;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const { return mix64(k.fixed ^ mix64(k.negative)); }
};

struct Entry {
  double sse;
  int feature;  // 0 = leaf
};

class Solver {
 public:
  Solver(const Dataset& data, const ErmParams& p) : data_(data), p_(p), y_(data.responses()) {}

  double best(std::uint64_t fixed, std::uint64_t negative, const std::vector<std::uint32_t>& idx) {
    const CellKey key{fixed, negative};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second.sse;

    Entry e{erm_leaf_sse(y_, idx, p_.clip), 0};
    const int depth = std::popcount(fixed);
    if (depth < p_.depth_budget && e.sse > 0.0) {
      std::vector<std::uint32_t> left, right;
      for (int k = 1; k <= data_.dim(); ++k) {
        const std::uint64_t bit = std::uint64_t{1} << (k - 1);
        if (fixed & bit) continue;
        left.clear();
        right.clear();
        for (std::uint32_t i : idx) (data_.column_negative(k, i) ? left : right).push_back(i);
        if (left.empty() || right.empty()) continue;  // never better than this cell one level deeper
        const std::vector<std::uint32_t> l = left, r = right;
        const double cost = best(fixed | bit, negative | bit, l) + best(fixed | bit, negative, r);
        if (cost < e.sse) e = {cost, k};
      }
    }
    memo_.emplace(key, e);
    return e.sse;
  }

  TreeModel build(const std::vector<std::uint32_t>& root) {
    std::vector<TreeNode> nodes;
    grow(nodes, 0, 0, root);
    return TreeModel(data_.dim(), std::move(nodes));
  }

 private:
  int grow(std::vector<TreeNode>& nodes, std::uint64_t fixed, std::uint64_t negative,
           const std::vector<std::uint32_t>& idx) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const Entry& e = memo_.at({fixed, negative});
    nodes[static_cast<std::size_t>(id)].value = erm_leaf_label(y_, idx, p_.clip);
    if (e.feature == 0) return id;
    const int k = e.feature;
    const std::uint64_t bit = std::uint64_t{1} << (k - 1);
    std::vector<std::uint32_t> left, right;
    for (std::uint32_t i : idx) (data_.column_negative(k, i) ? left : right).push_back(i);
    const int l = grow(nodes, fixed | bit, negative | bit, left);
    const int r = grow(nodes, fixed | bit, negative, right);
    nodes[static_cast<std::size_t>(id)].feature = k;
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const Dataset& data_;
  const ErmParams& p_;
  std::span<const double> y_;
  std::unordered_map<CellKey, Entry, CellKeyHash> memo_;
};

}  // namespace

ErmFit fit_erm(const Dataset& data, const ErmParams& params) {
  check_params(data, params);
  const std::size_t states = erm_state_estimate(data.dim(), params.depth_budget);
  if (states > params.state_cap) {
    throw Error(ErrorKind::StateCapExceeded, "ERM needs up to " + std::to_string(states) +
                                                 " memo states, cap is " + std::to_string(params.state_cap));
  }
  std::vector<std::uint32_t> all(data.size());
  std::iota(all.begin(), all.end(), 0U);
  Solver solver(data, params);
  const double sse = solver.best(0, 0, all);
  return {solver.build(all), sse / static_cast<double>(data.size())};
}

namespace {

using Structure = std::vector<TreeNode>;

// All structures of depth <= h over the features not in `fixed`, node 0 the root.
std::vector<Structure> structures(int dim, std::uint64_t fixed, int h) {
  std::vector<Structure> out;
  out.push_back({TreeNode{}});
  if (h == 0) return out;
  for (int k = 1; k <= dim; ++k) {
    const std::uint64_t bit = std::uint64_t{1} << (k - 1);
    if (fixed & bit) continue;
    const std::vector<Structure> subs = structures(dim, fixed | bit, h - 1);
    for (const Structure& a : subs) {
      for (const Structure& b : subs) {
        Structure s;
        s.reserve(1 + a.size() + b.size());
        s.push_back({k, 1, static_cast<int>(1 + a.size()), 0.0});
        for (TreeNode n : a) {
          if (!n.is_leaf()) n.left += 1, n.right += 1;
          s.push_back(n);
        }
        for (TreeNode n : b) {
          if (!n.is_leaf()) n.left += static_cast<int>(1 + a.size()), n.right += static_cast<int>(1 + a.size());
          s.push_back(n);
        }
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

}  // namespace

double enumerate_erm_oracle(const Dataset& data, const ErmParams& params) {
  check_params(data, params);
  if (data.dim() > 6 || params.depth_budget > 3) {
    throw Error(ErrorKind::TooLarge, "brute-force ERM is limited to d <= 6 and depth <= 3");
  }
  const std::span<const double> y = data.responses();
  double best = std::numeric_limits<double>::infinity();
  for (Structure& s : structures(data.dim(), 0, params.depth_budget)) {
    const TreeModel tree(data.dim(), std::move(s));
    std::vector<std::vector<std::uint32_t>> at_leaf(tree.node_count());
    for (std::uint32_t i = 0; i < data.size(); ++i) {
      at_leaf[static_cast<std::size_t>(tree.leaf_of(data.row_mask(i)))].push_back(i);
    }
    const std::function<double(int)> cost = [&](int id) -> double {
      const TreeNode& nd = tree.node(id);
      if (nd.is_leaf()) return erm_leaf_sse(y, at_leaf[static_cast<std::size_t>(id)], params.clip);
      return cost(nd.left) + cost(nd.right);
    };
    best = std::min(best, cost(0));
  }
  return best / static_cast<double>(data.size());
}

}  // namespace cubetree
