#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "cubetree/error.hpp"
#include "cubetree/fourier.hpp"
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

SparseFourier fn(const char* text, int d) { return parse_function(text, d); }

SparseFourier random_function(std::mt19937_64& rng, int s, int dim, int max_terms) {
  std::uniform_int_distribution<int> count(1, max_terms);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::vector<Term> terms;
  for (FeatureSet v : oracle::random_family(rng, s, std::min(count(rng), (1 << s) - 1))) {
    terms.push_back({v, coef(rng)});
  }
  if (rng() % 2) terms.push_back({FeatureSet{}, coef(rng)});
  return SparseFourier(dim, terms);
}

}  // namespace

TEST_CASE("eval") {
  CHECK(eval(fn("x1*x2", 3), Point::from_signs(std::vector<int>{1, -1, 1})) == -1);
  CHECK(eval(fn("x1 + x2 + x1*x2*x3", 3), Point::from_signs(std::vector<int>{1, 1, 1})) == 3);
  const SparseFourier zero(4, {});
  for (std::uint64_t m = 0; m < 16; ++m) CHECK(eval_mask(zero, m) == 0);
  CHECK(kind_of([] { eval(fn("x1", 3), Point(2, 0)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("construction invariants") {
  const SparseFourier f(3, {{FeatureSet{1}, 0.0}, {FeatureSet{2}, 2.0}});
  CHECK(f.terms().size() == 1);
  CHECK(kind_of([] { SparseFourier(3, {{FeatureSet{1}, 1.0}, {FeatureSet{1}, 2.0}}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { SparseFourier(2, {{FeatureSet{3}, 1.0}}); }) == ErrorKind::SupportExceedsDimension);
  CHECK(fn("x1 + 2*x2*x3 - 0.5", 4).variance() == 5.0);
  CHECK(fn("x1 + 2*x2*x3 - 0.5", 4).mean() == -0.5);
}

TEST_CASE("wht examples") {
  const SparseFourier x = wht(std::vector<double>{1, -1, -1, 1});
  REQUIRE(x.terms().size() == 1);
  CHECK(x.terms()[0].subset == FeatureSet{1, 2});
  CHECK(x.terms()[0].coef == 1.0);

  const SparseFourier a = wht(std::vector<double>{1, 0, 0, 0});
  CHECK(a.terms().size() == 4);
  for (FeatureSet s : {FeatureSet{}, FeatureSet{1}, FeatureSet{2}, FeatureSet{1, 2}}) CHECK(a.coefficient(s) == 0.25);
  // Same values from direct inner products.
  const auto brute = oracle::coefficients({1, 0, 0, 0}, 2);
  for (std::size_t s = 0; s < 4; ++s) CHECK(brute[s] == 0.25);

  const SparseFourier c = wht(std::vector<double>(8, 2.5));
  REQUIRE(c.terms().size() == 1);
  CHECK(c.terms()[0].subset.empty());
  CHECK(c.terms()[0].coef == 2.5);

  CHECK(kind_of([] { wht(std::vector<double>{1, 2, 3}); }) == ErrorKind::NonPowerOfTwoLength);
}

TEST_CASE("wht against inner products and round trip") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int s = 1; s <= 7; ++s) {
    std::vector<double> table(std::size_t{1} << s);
    for (double& v : table) v = g(rng);
    const SparseFourier f = wht(table);
    const auto brute = oracle::coefficients(table, s);
    for (std::size_t S = 0; S < table.size(); ++S) {
      CHECK(f.coefficient(FeatureSet(S)) == doctest::Approx(brute[S]).epsilon(1e-12));
    }
    const auto back = inverse_wht(f);
    for (std::size_t i = 0; i < table.size(); ++i) CHECK(std::abs(back[i] - table[i]) <= 1e-12);
  }
}

TEST_CASE("restrict examples") {
  const SparseFourier f = fn("x1 + x2 + x1*x2 + x2*x3", 3);
  const SparseFourier r = restrict(f, split_cell(Cell(3), 1, -1));
  CHECK(r == fn("-1 + x2*x3", 3));
  CHECK(restrict(fn("x1*x2", 2), split_cell(Cell(2), 1, +1)) == fn("x2", 2));
  CHECK(restrict(f, Cell(3)) == f);
  CHECK(kind_of([&] { restrict(f, Cell(4)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("restrict agrees with pointwise evaluation") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int s = 1 + static_cast<int>(rng() % 8);
    const SparseFourier f = random_function(rng, s, s, 12);
    const std::uint64_t fixed = rng() & ((std::uint64_t{1} << s) - 1);
    const std::uint64_t neg = rng() & fixed;
    const SparseFourier r = restrict(f, FeatureSet(fixed), neg);
    for (int k : r.support().features()) CHECK_FALSE(((fixed >> (k - 1)) & 1U));
    const Cell cell(s, FeatureSet(fixed), neg);
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << s); ++m) {
      if (!cell.contains_mask(m)) continue;
      CHECK(eval_mask(r, m) == doctest::Approx(oracle::value(f, m)).epsilon(1e-12));
    }
    const CellMoments mom = restricted_moments(f, FeatureSet(fixed), neg);
    CHECK(mom.mean == doctest::Approx(r.mean()).epsilon(1e-12));
    CHECK(mom.variance == doctest::Approx(r.variance()).epsilon(1e-12));
  }
}

TEST_CASE("parseval") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const int s = 1 + static_cast<int>(rng() % 8);
    const SparseFourier f = random_function(rng, s, s, 10);
    CHECK(std::abs(f.variance() - oracle::variance(f, s)) <= 1e-10);
  }
}

TEST_CASE("msp closure examples") {
  const MspClosure x = msp_closure(fn("x1*x2", 2));
  CHECK_FALSE(x.is_msp);
  CHECK(x.reachable == std::vector<FeatureSet>{FeatureSet{}});
  CHECK(msp_closure(fn("x1 + x2 + x1*x2*x3", 3)).is_msp);
  const MspClosure m = msp_closure(fn("x1*x2 + 0.02*x1", 2));
  CHECK(m.is_msp);
  CHECK(m.covered == FeatureSet{1, 2});
  CHECK(oracle::msp_by_orderings({FeatureSet{1}, FeatureSet{1, 2}}));

  CHECK(msp_residual(fn("x1*x2", 2)) == fn("x1*x2", 2));
  CHECK(msp_residual(fn("x1 + x2 + x1*x2*x3", 3)).empty());
  CHECK(msp_residual(fn("x1 + x3*x4", 4)) == fn("x3*x4", 4));
}

TEST_CASE("msp closure against ordering search and absorption order") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const int s = 2 + static_cast<int>(rng() % 5);
    const int count = 1 + static_cast<int>(rng() % std::min(6, (1 << s) - 1));
    std::vector<FeatureSet> v = oracle::random_family(rng, s, count);
    const MspClosure c = msp_closure(v);
    CHECK(c.is_msp == oracle::msp_by_orderings(v));
    for (int r = 0; r < 5; ++r) {
      std::shuffle(v.begin(), v.end(), rng);
      const MspClosure again = msp_closure(v);
      CHECK(again.reachable == c.reachable);
      CHECK(again.covered == c.covered);
    }
  }
}

TEST_CASE("smsp and sid examples") {
  CHECK_FALSE(is_smsp(fn("x1 + x2 + x1*x2 + x2*x3", 3)));
  CHECK(is_smsp(and_function(2, 2)));
  CHECK_FALSE(is_smsp(fn("x1*x2", 2)));

  CHECK(sid_lambda(and_function(2, 2)) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(sid_lambda(fn("x1*x2", 2)) == 0.0);
  CHECK(sid_lambda(fn("x1", 1)) == doctest::Approx(1.0));
  CHECK(smsp_lambda(and_function(2, 2)) == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(smsp_lambda(fn("x1*x2", 2)) == 0.0);
  CHECK(smsp_lambda(fn("x1", 1)) == doctest::Approx(1.0));

  CHECK(kind_of([] { sid_lambda(SparseFourier(2, {{FeatureSet{}, 3.0}})); }) == ErrorKind::ConstantFunction);
  std::vector<Term> wide;
  for (int k = 1; k <= 17; ++k) wide.push_back({FeatureSet{k}, 1.0});
  CHECK(kind_of([&] { is_smsp(SparseFourier(17, wide)); }) == ErrorKind::SparsityCapExceeded);
}

TEST_CASE("support-cell enumeration matches all cells") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 3 + static_cast<int>(rng() % 4);
    const int s = 2 + static_cast<int>(rng() % (d - 1));
    const SparseFourier f = random_function(rng, s, d, 5);
    if (f.variance() == 0) continue;
    CHECK(sid_lambda(f) == doctest::Approx(oracle::sid_full(f, d)).epsilon(1e-9));
    CHECK(smsp_lambda(f) == doctest::Approx(oracle::smsp_full(f, d)).epsilon(1e-9));
  }
}

TEST_CASE("AND constants") {
  for (int s : {2, 3}) {
    const SparseFourier f = and_function(s, s);
    CHECK(std::abs(sid_lambda(f) - 1.0 / ((1 << s) - 1)) <= 1e-12);
    CHECK(std::abs(smsp_lambda(f) - std::ldexp(1.0, -2 * s)) <= 1e-12);
    // j features already fixed to +1; correlation with the next one.
    for (int j = 0; j < s; ++j) {
      FeatureSet fixed;
      for (int k = 1; k <= j; ++k) fixed = fixed.with(k);
      const SparseFourier r = restrict(f, fixed, 0);
      const double cov = r.coefficient(FeatureSet{j + 1});
      CHECK(std::abs(cov * cov / r.variance() - 1.0 / ((1 << (s - j)) - 1)) <= 1e-12);
    }
  }
}

TEST_CASE("genericity") {
  const std::vector<FeatureSet> msp{FeatureSet{1}, FeatureSet{1, 2}, FeatureSet{2, 3}, FeatureSet{1, 3, 4}};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SparseFourier f = random_coefficients(msp, 4, seed);
    CHECK(is_smsp(f));
    CHECK(sid_lambda(f) > 0);
  }
  const SparseFourier one = random_coefficients(std::vector<FeatureSet>{FeatureSet{1}}, 3, 4);
  REQUIRE(one.terms().size() == 1);
  CHECK(std::abs(one.terms()[0].coef) >= 0.5);
  CHECK(std::abs(one.terms()[0].coef) <= 1.5);
  CHECK(random_coefficients(msp, 4, 77) == random_coefficients(msp, 4, 77));
  CHECK_FALSE(random_coefficients(msp, 4, 77) == random_coefficients(msp, 4, 78));
}

TEST_CASE("smsp iff sid positive") {
  std::mt19937_64 rng(64);
  int smsp_count = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int s = 2 + static_cast<int>(rng() % 4);
    const auto family = oracle::random_family(rng, s, 1 + static_cast<int>(rng() % std::min(5, (1 << s) - 1)));
    const SparseFourier f = random_coefficients(family, s, rng());
    const bool smsp = is_smsp(f);
    smsp_count += smsp;
    CHECK(smsp == (sid_lambda(f) > 0));
  }
  CHECK(smsp_count > 0);
  CHECK(smsp_count < 100);
}

TEST_CASE("min traversal") {
  const Traversal a = min_traversal(std::vector<FeatureSet>{FeatureSet{1, 2}}, FeatureSet{});
  CHECK(a.set == FeatureSet{1, 2});
  CHECK(a.size == 2);
  const Traversal b = min_traversal(std::vector<FeatureSet>{FeatureSet{1, 2, 3}, FeatureSet{3, 4, 5}}, FeatureSet{});
  CHECK(b.size == 3);
  CHECK(b.set == FeatureSet{1, 3, 4});
  CHECK(kind_of([] { min_traversal(std::vector<FeatureSet>{FeatureSet{1, 2}}, FeatureSet{1}); }) ==
        ErrorKind::NoTraversal);
  std::vector<FeatureSet> many;
  for (int k = 0; k < 5; ++k) many.push_back(FeatureSet{2 * k + 1, 2 * k + 2});
  CHECK(kind_of([&] { min_traversal(many, FeatureSet{}, 8); }) == ErrorKind::SearchCapExceeded);
}

TEST_CASE("cut analysis") {
  const SparseFourier and2 = and_function(2, 2);
  const std::vector<FeatureSet> b{FeatureSet{1}, FeatureSet{2}};
  const CutAnalysis a = cut_analysis(and2, b);
  CHECK(a.disconnected == std::vector<FeatureSet>{FeatureSet{1, 2}});
  CHECK(a.cut_weight == doctest::Approx(0.125));

  const SparseFourier f = fn("x1*x2 + 0.02*x1", 2);
  const CutAnalysis c = cut_analysis(f, std::vector<FeatureSet>{FeatureSet{1}});
  CHECK(c.disconnected == std::vector<FeatureSet>{FeatureSet{1, 2}});
  CHECK(c.cut_weight == doctest::Approx(4e-4).epsilon(1e-12));
  CHECK(c.covered_size == 0);

  const CutAnalysis none = cut_analysis(fn("x1 + x3*x4", 4), {});
  const MspClosure cl = msp_closure(fn("x1 + x3*x4", 4));
  CHECK(none.disconnected == cl.unreached);
  CHECK(none.covered == cl.covered);
  CHECK(none.cut_weight == 0);
  CHECK(kind_of([&] { cut_analysis(f, std::vector<FeatureSet>{FeatureSet{2}}); }) == ErrorKind::UnknownVertex);
}

TEST_CASE("text and json formats") {
  const SparseFourier f = parse_function("1.0*x1*x2 + 0.02*x1", 5);
  CHECK(f.coefficient(FeatureSet{1, 2}) == 1.0);
  CHECK(f.coefficient(FeatureSet{1}) == 0.02);
  CHECK(parse_function(f.str(), 5) == f);
  CHECK(parse_function_json(function_to_json(f)) == f);
  CHECK(parse_function("-x1 - 2*x2 + 3", 2).coefficient(FeatureSet{1}) == -1);
  CHECK(parse_function("0*x1 + x2", 2, ParseOptions{true}) == parse_function("x2", 2));
  CHECK(kind_of([] { parse_function("x1 + 2*x1", 2); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { parse_function("0*x1", 2); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { parse_function("x1 +", 2); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { parse_function("x3", 2); }) == ErrorKind::SupportExceedsDimension);
  CHECK(f.hash() == parse_function("0.02*x1 + x1*x2", 9).hash());
  CHECK(f.hash() != parse_function("0.03*x1 + x1*x2", 5).hash());
}
