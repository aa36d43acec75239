#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "cubetree/error.hpp"
#include "cubetree/fourier.hpp"
#include "cubetree/greedy.hpp"
#include "cubetree/sampling.hpp"
#include "cubetree/trees.hpp"
#include "oracles.hpp"

using namespace cubetree;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidArgument;
}

// Split x1, then x2 on both sides; leaves equal x1*x2.
TreeModel xor_tree(int d) {
  return TreeModel(d, {{1, 1, 4, 0},
                       {2, 2, 3, 0}, {0, -1, -1, 1}, {0, -1, -1, -1},
                       {2, 5, 6, 0}, {0, -1, -1, -1}, {0, -1, -1, 1}});
}

// Uniformly random structure of depth <= h with N(0,1) leaves.
TreeModel random_tree(std::mt19937_64& rng, int d, int h) {
  std::vector<TreeNode> nodes;
  std::normal_distribution<double> g;
  auto grow = [&](auto&& self, FeatureSet used, int depth) -> int {
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({0, -1, -1, g(rng)});
    if (depth == h || used.size() == d || rng() % 3 == 0) return id;
    std::vector<int> free = FeatureSet::all(d).minus(used).features();
    const int k = free[rng() % free.size()];
    const int l = self(self, used.with(k), depth + 1);
    const int r = self(self, used.with(k), depth + 1);
    nodes[static_cast<std::size_t>(id)] = {k, l, r, 0};
    return id;
  };
  grow(grow, FeatureSet{}, 0);
  return TreeModel(d, nodes);
}

}  // namespace

TEST_CASE("structure validation") {
  CHECK(kind_of([] { TreeModel(3, {{1, 1, 2, 0}, {1, 3, 4, 0}, {0, -1, -1, 0}, {0, -1, -1, 0}, {0, -1, -1, 0}}); }) ==
        ErrorKind::InvalidArgument);
  CHECK(kind_of([] { TreeModel(3, {{4, 1, 2, 0}, {0, -1, -1, 0}, {0, -1, -1, 0}}); }) == ErrorKind::IndexOutOfRange);
  CHECK(kind_of([] { TreeModel(3, {{1, 1, 1, 0}, {0, -1, -1, 0}}); }) == ErrorKind::InvalidArgument);
  const TreeModel t = xor_tree(3);
  CHECK(t.depth() == 2);
  CHECK(t.leaf_count() == 4);
  double measure = 0;
  t.for_each_leaf([&](int, const Cell& c) { measure += c.measure(); });
  CHECK(measure == 1.0);
}

TEST_CASE("predict") {
  const TreeModel leaf = TreeModel::leaf(4, 2.5);
  const TreeModel x = xor_tree(4);
  const Forest forest({x, TreeModel::leaf(4, 0.0)});
  for (std::uint64_t m = 0; m < 16; ++m) {
    const Point p(4, m);
    CHECK(predict(leaf, p) == 2.5);
    CHECK(predict(x, p) == p[1] * p[2]);
    CHECK(predict(forest, p) == p[1] * p[2] / 2.0);
  }
  CHECK(kind_of([&] { predict(x, Point(3, 0)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("exact risk examples") {
  const SparseFourier f = parse_function("x1*x2", 4);
  CHECK(exact_risk(TreeModel::leaf(4, 0.0), f) == 1.0);
  const TreeModel x1_only(4, {{1, 1, 2, 0}, {0, -1, -1, 0}, {0, -1, -1, 0}});
  CHECK(exact_risk(x1_only, f) == 1.0);
  CHECK(exact_risk(xor_tree(4), f) == 0.0);
}

TEST_CASE("exact risk against enumeration") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + static_cast<int>(rng() % 7);
    const TreeModel t = random_tree(rng, d, 4);
    std::vector<Term> terms;
    for (FeatureSet s : oracle::random_family(rng, d, std::min(6, (1 << d) - 1))) terms.push_back({s, 1.0 / (1 + rng() % 4)});
    const SparseFourier f(d, terms);
    CHECK(exact_risk(t, f) == doctest::Approx(oracle::risk(t, f, d)).epsilon(1e-10));
  }
}

TEST_CASE("exact risk against monte carlo") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 4 + static_cast<int>(rng() % 9);
    const TreeModel t = random_tree(rng, d, 5);
    const SparseFourier f = random_coefficients(oracle::random_family(rng, std::min(d, 6), 4), d, rng());
    const std::size_t n = 200000;
    std::uniform_int_distribution<std::uint64_t> pick(0, (std::uint64_t{1} << d) - 1);
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t m = pick(rng);
      const double e = predict_mask(t, m) - eval_mask(f, m);
      sum += e * e;
      sq += e * e * e * e;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    CHECK(std::abs(exact_risk(t, f) - mean) <= 3 * se + 1e-12);
  }
}

TEST_CASE("forest risk") {
  std::mt19937_64 rng(6);
  const int d = 6;
  const SparseFourier f = parse_function("x1*x2 + 0.5*x3", d);
  const Forest forest({random_tree(rng, d, 3), random_tree(rng, d, 3), random_tree(rng, d, 3)});
  double brute = 0;
  for (std::uint64_t m = 0; m < 64; ++m) brute += std::pow(predict_mask(forest, m) - eval_mask(f, m), 2);
  brute /= 64;
  const RiskReport exact = exact_risk(forest, f);
  CHECK(exact.method == RiskReport::Method::Exact);
  CHECK(exact.risk == doctest::Approx(brute).epsilon(1e-12));

  ForestRiskOptions small;
  small.refinement_cap = 2;
  small.mc_samples = 100000;
  const RiskReport mc = exact_risk(forest, f, small);
  CHECK(mc.method == RiskReport::Method::MonteCarlo);
  CHECK(mc.se > 0);
  CHECK(std::abs(mc.risk - brute) <= 4 * mc.se);
}

TEST_CASE("query paths and coverage") {
  CHECK(query_path(TreeModel::leaf(3, 0), Point(3, 0)).empty());
  for (std::uint64_t m = 0; m < 8; ++m) CHECK(query_path(xor_tree(3), Point(3, m)) == std::vector<int>{1, 2});

  // Root x3, right child splits x5.
  const TreeModel t(6, {{3, 1, 2, 0}, {0, -1, -1, 0}, {5, 3, 4, 0}, {0, -1, -1, 0}, {0, -1, -1, 0}});
  CHECK(query_path(t, Point::from_signs(std::vector<int>{1, 1, 1, 1, 1, 1})) == std::vector<int>{3, 5});

  const TreeModel c(3, {{1, 1, 2, 0}, {0, -1, -1, 0}, {2, 3, 4, 0}, {0, -1, -1, 0}, {0, -1, -1, 0}});
  CHECK(coverage(c, 1) == 1.0);
  CHECK(coverage(c, 2) == 0.5);
  CHECK(coverage(c, 3) == 0.0);
  for (int k = 1; k <= 3; ++k) CHECK(coverage(TreeModel::leaf(3, 1), k) == 0.0);
  CHECK(kind_of([&] { coverage(c, 4); }) == ErrorKind::IndexOutOfRange);
  CHECK(selection_probability(c, FeatureSet{2, 3}) == 0.5);
  CHECK(selection_probability(c, FeatureSet{1}) == 1.0);
}

TEST_CASE("coverage against query-path frequency") {
  std::mt19937_64 rng(12);
  const int d = 10;
  const TreeModel t = random_tree(rng, d, 6);
  const std::size_t n = 100000;
  std::uniform_int_distribution<std::uint64_t> pick(0, (std::uint64_t{1} << d) - 1);
  std::vector<double> hits(d + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k : query_path(t, Point(d, pick(rng)))) hits[static_cast<std::size_t>(k)] += 1;
  }
  double total = 0;
  for (int k = 1; k <= d; ++k) {
    const double p = coverage(t, k);
    total += p;
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
    CHECK(std::abs(hits[static_cast<std::size_t>(k)] / n - p) <= 3 * se + 1e-12);
  }
  CHECK(total == doctest::Approx(expected_path_length(t)).epsilon(1e-12));
}

TEST_CASE("serialization") {
  std::mt19937_64 rng(2);
  const TreeModel t = random_tree(rng, 7, 4);
  CHECK(tree_from_json(to_json(t)) == t);
  const Forest f({t, random_tree(rng, 7, 3)});
  CHECK(forest_from_json(to_json(f)) == f);
  CHECK(to_json(xor_tree(2)).find("\"schema\"") != std::string::npos);
  CHECK(kind_of([] { tree_from_json("{\"schema\": \"other\"}"); }) == ErrorKind::ParseError);
}
