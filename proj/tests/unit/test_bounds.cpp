#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cubetree/bounds.hpp"
#include "cubetree/error.hpp"
#include "cubetree/fourier.hpp"

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

// a rounded to 6 significant digits equals b's rounding.
bool close6(double a, double b) {
  const double scale = std::pow(10.0, 5 - std::floor(std::log10(std::abs(b))));
  return std::round(a * scale) == std::round(b * scale);
}

SparseFourier fn(const char* text, int d = 64) { return parse_function(text, d); }

}  // namespace

TEST_CASE("xor bound") {
  const BoundReport r = xor_bound(50, 128, 1.0);
  CHECK(*r.delta == doctest::Approx(18.0 / 49).epsilon(1e-15));
  CHECK(r.bound == doctest::Approx(31.0 / 49).epsilon(1e-15));
  CHECK_FALSE(r.vacuous);
  CHECK(*r.ensemble_bound == doctest::Approx(13.0 / 49).epsilon(1e-14));
  CHECK(*r.get("kappa") == 2.0);

  CHECK(*xor_bound(31, 45).delta == doctest::Approx(0.499456873088645).epsilon(1e-12));
  CHECK(*xor_bound(31, std::exp2(5.5)).delta == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(xor_bound(31, std::exp2(5.5)).bound == doctest::Approx(0.5).epsilon(1e-15));

  const BoundReport edge = xor_bound(31, std::exp2(13));
  CHECK(*edge.delta == 1.0);
  CHECK(edge.vacuous);
  CHECK(edge.bound == 0.0);
  CHECK(kind_of([] { xor_bound(2, 10); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("nonmsp bound") {
  const BoundReport r = nonmsp_bound(fn("x1 + x3*x4"), 50, 512);
  CHECK(*r.get("s_msp") == 1);
  CHECK(*r.get("s_t") == 2);
  CHECK(*r.delta == doctest::Approx(22.0 / 48).epsilon(1e-15));
  CHECK(r.bound == doctest::Approx(26.0 / 48).epsilon(1e-15));
  CHECK(close6(r.bound, 0.541667));

  const BoundReport e = nonmsp_bound(fn("x1 + x3*x4"), 50, 512, 1.0);
  CHECK(*e.get("kappa") == doctest::Approx(2.0 / std::sqrt(2.0)));
  CHECK(kind_of([] { nonmsp_bound(fn("x1 + x1*x2"), 10, 100); }) == ErrorKind::FunctionIsMsp);

  for (int d : {5, 10, 30, 50}) {
    for (double n : {2.0, 100.0, 1e4, 1e9}) {
      const BoundReport a = nonmsp_bound(fn("x1*x2"), d, n, 1.5);
      const BoundReport b = xor_bound(d, n, 1.5);
      CHECK(*a.delta == doctest::Approx(*b.delta).epsilon(1e-15));
      CHECK(a.bound == doctest::Approx(b.bound).epsilon(1e-15));
      CHECK(a.vacuous == b.vacuous);
      CHECK(*a.ensemble_bound == doctest::Approx(*b.ensemble_bound).epsilon(1e-15));
    }
  }
}

TEST_CASE("robust bound") {
  const SparseFourier f = fn("x1*x2 + 0.02*x1");
  const std::vector<FeatureSet> cut{FeatureSet{1}};
  const BoundReport r = robust_bound(f, cut, 1000, 100, 1.0);
  CHECK(close6(*r.get("w_cut"), 4e-4));
  CHECK(close6(*r.get("delta_noise"), 0.282842712474619));
  CHECK(close6(*r.get("delta_sparsity"), 0.03464471418747384));
  CHECK(close6(*r.delta, 0.282842712474619));
  CHECK(close6(r.bound, 1 - 0.282842712474619));
  // Noise condition: n <= delta^2 sigma^2 / (2 w).
  CHECK(100 == doctest::Approx(*r.delta * *r.delta / 8e-4));

  const BoundReport msp = robust_bound(f, {}, 1000, 100, 1.0);
  CHECK(msp.bound == 0.0);
  CHECK_FALSE(msp.delta.has_value());

  CHECK(kind_of([&] { robust_bound(f, std::vector<FeatureSet>{FeatureSet{3}}, 100, 10, 1.0); }) ==
        ErrorKind::UnknownVertex);
  CHECK(kind_of([&] { robust_bound(f, cut, 100, 10, 0.0); }) == ErrorKind::InvalidArgument);

  const BoundReport best = best_robust_bound(f, 1000, 100, 1.0);
  CHECK(best.bound == doctest::Approx(r.bound).epsilon(1e-15));
}

TEST_CASE("robust bound with an empty cut") {
  for (const char* text : {"x1*x2", "x1 + x3*x4", "x1 + x2*x3*x4 + 0.5*x5*x6"}) {
    const SparseFourier f = fn(text);
    for (int d : {20, 60}) {
      for (double n : {4.0, 64.0, 1024.0}) {
        const BoundReport rb = robust_bound(f, {}, d, n, 1.0);
        const BoundReport nb = nonmsp_bound(f, d, n);
        CHECK(*rb.get("delta_noise") == 0.0);
        const double st = *nb.get("s_t");
        const double sm = *nb.get("s_msp");
        CHECK(*rb.delta == doctest::Approx(2 * st * (std::log2(n) + 2) / (d - sm - st)).epsilon(1e-14));
        // Same bound formula at equal delta.
        if (!rb.vacuous) CHECK(std::abs(rb.bound - (1 - *rb.delta) * *nb.get("var_r_msp")) <= 1e-12);
      }
    }
  }
}

TEST_CASE("monotonicity grids") {
  const SparseFourier nm = fn("x1 + x3*x4 + 0.3*x5*x6*x7");
  const SparseFourier rb = fn("x1*x2 + 0.02*x1 + 0.5*x3");
  const std::vector<FeatureSet> cut{FeatureSet{1}};
  const std::vector<int> ds{10, 20, 30, 40, 50, 80, 200};
  const std::vector<double> ns{2, 8, 32, 128, 512, 2048, 1 << 15, 1 << 20};
  auto check_grid = [&](auto bound) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = 0; j < ns.size(); ++j) {
        const double v = bound(ds[i], ns[j]);
        CHECK(v >= 0.0);
        if (j + 1 < ns.size()) CHECK(bound(ds[i], ns[j + 1]) <= v);
        if (i + 1 < ds.size()) CHECK(bound(ds[i + 1], ns[j]) >= v);
      }
    }
  };
  check_grid([](int d, double n) { return xor_bound(d, n).bound; });
  check_grid([](int d, double n) { return *xor_bound(d, n, 0.7).ensemble_bound; });
  check_grid([&](int d, double n) { return nonmsp_bound(nm, d, n).bound; });
  check_grid([&](int d, double n) { return robust_bound(rb, cut, d, n, 0.5).bound; });
  check_grid([&](int d, double n) { return best_robust_bound(rb, d, n, 0.5).bound; });
  for (int d : ds) CHECK(nonmsp_bound(nm, d, 2).bound <= nm.variance());
}

TEST_CASE("gamma window") {
  const GammaWindow w = gamma_window(1.0, 0.0, 2, 10, 1e6, 1.0 / 16);
  CHECK(close6(w.tau, 3435.322101762894));
  CHECK(close6(w.gamma_min, 0.003435322101762894));
  CHECK(close6(w.gamma_max, 0.013962984812731968));
  CHECK_FALSE(w.empty);

  const double n_edge = 8 * w.tau / (1.0 / 16);
  // tau depends on n through log(2dn); find the fixed point n = 8 tau(n) / lambda.
  double n = n_edge;
  for (int i = 0; i < 100; ++i) n = 8 * gamma_window(1.0, 0.0, 2, 10, n, 1.0 / 16).tau * 16;
  CHECK(gamma_window(1.0, 0.0, 2, 10, n, 1.0 / 16).empty);
  CHECK(gamma_window(1.0, 0.0, 2, 10, 1e4, 1.0 / 16).empty);
  CHECK(kind_of([] { gamma_window(1.0, 0.0, 2, 10, 1e6, 0.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("rates") {
  const RateValues r = rate_values(2, 50, 1e4, 1.0, 1.0);
  CHECK(close6(r.minimax, 0.0015648092021712584));
  CHECK(rate_values(2, 50, 2e4, 1.0, 1.0).minimax == doctest::Approx(r.minimax / 2).epsilon(1e-14));
  // The log n terms make the other rates fall slightly slower than 1/n.
  const RateValues r2 = rate_values(2, 50, 2e4, 1.0, 1.0);
  CHECK(r2.erm > r.erm / 2);
  CHECK(r2.erm < r.erm / 2 * (1 + std::log(2.0) / std::log(1e4)));
  CHECK(r2.cart_upper > r.cart_upper / 2);
  CHECK(r2.cart_upper < r.cart_upper / 2 * (1 + std::log(2.0) / std::log(1e4)));
  CHECK(rate_values(2, 50, 1e4, 0.0, 1.0).minimax == 0.0);
  CHECK(r.na_delta == doctest::Approx(2 * std::log2(1e4) / 50));
  CHECK(kind_of([] { rate_values(0, 50, 1e4, 1.0, 1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("selection probability bounds") {
  CHECK(selection_prob_bound(SelectionKind::Xor, {.d = 50, .n = 128}) == doctest::Approx(18.0 / 49).epsilon(1e-15));
  CHECK(selection_prob_bound(SelectionKind::Depth, {.n = 1024}) == 12.0);
  CHECK(selection_prob_bound(SelectionKind::NonAdaptive, {.d = 50, .n = 512, .s = 2}) ==
        doctest::Approx(0.36).epsilon(1e-15));
  CHECK(selection_prob_bound(SelectionKind::NonMsp, {.d = 50, .n = 512, .s_msp = 1, .s_t = 2}) ==
        doctest::Approx(22.0 / 48).epsilon(1e-15));
  CHECK(kind_of([] { selection_prob_bound(SelectionKind::NonMsp, {.d = 3, .n = 8, .s_msp = 2, .s_t = 2}); }) ==
        ErrorKind::InvalidArgument);
  CHECK(kind_of([] { selection_prob_bound(SelectionKind::Xor, {.d = 50, .n = 0.5}); }) == ErrorKind::InvalidArgument);
  CHECK(parse_selection_kind("nonadaptive") == SelectionKind::NonAdaptive);
}

TEST_CASE("report formats") {
  const BoundReport r = xor_bound(50, 128, 1.0);
  CHECK(r.to_text().find("delta = 0.36734693877551022") != std::string::npos);
  CHECK(r.to_json().find("\"tag\":\"xor\"") != std::string::npos);
  CHECK(xor_bound(31, 1 << 13).to_text().find("(vacuous)") != std::string::npos);
}
