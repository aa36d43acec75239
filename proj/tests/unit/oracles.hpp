#pragma once

// Brute-force reference computations used only by tests. They enumerate
// points of the cube directly and share no code with the library's fast paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "cubetree/boolcube.hpp"
#include "cubetree/fourier.hpp"
#include "cubetree/trees.hpp"

namespace oracle {

using cubetree::FeatureSet;
using cubetree::SparseFourier;

// x_k for the point encoded by mask (bit k-1 set means -1).
inline int coord(std::uint64_t mask, int k) { return ((mask >> (k - 1)) & 1U) ? -1 : 1; }

inline double chi(FeatureSet s, std::uint64_t mask) {
  double v = 1.0;
  for (int k : s.features()) v *= coord(mask, k);
  return v;
}

inline double value(const SparseFourier& f, std::uint64_t mask) {
  double v = 0.0;
  for (const auto& t : f.terms()) v += t.coef * chi(t.subset, mask);
  return v;
}

// alpha_S = 2^-s sum_x f(x) chi_S(x), quadratic time.
inline std::vector<double> coefficients(const std::vector<double>& table, int s) {
  const std::size_t n = std::size_t{1} << s;
  std::vector<double> out(n, 0.0);
  for (std::size_t S = 0; S < n; ++S) {
    for (std::size_t x = 0; x < n; ++x) out[S] += table[x] * chi(FeatureSet(S), x);
    out[S] /= static_cast<double>(n);
  }
  return out;
}

inline double variance(const SparseFourier& f, int d) {
  const std::size_t n = std::size_t{1} << d;
  double m = 0, m2 = 0;
  for (std::size_t x = 0; x < n; ++x) {
    const double v = value(f, x);
    m += v;
    m2 += v * v;
  }
  m /= static_cast<double>(n);
  return m2 / static_cast<double>(n) - m * m;
}

inline double risk(const cubetree::TreeModel& t, const SparseFourier& f, int d) {
  const std::size_t n = std::size_t{1} << d;
  double r = 0;
  for (std::size_t x = 0; x < n; ++x) {
    const double e = cubetree::predict(t, cubetree::Point(d, x)) - value(f, x);
    r += e * e;
  }
  return r / static_cast<double>(n);
}

// Does some ordering of all vertices add at most one new feature at a time?
inline bool msp_by_orderings(std::vector<FeatureSet> v) {
  std::sort(v.begin(), v.end());
  do {
    FeatureSet covered;
    bool ok = true;
    for (FeatureSet s : v) {
      if (s.minus(covered).size() > 1) {
        ok = false;
        break;
      }
      covered = covered | s;
    }
    if (ok) return true;
  } while (std::next_permutation(v.begin(), v.end()));
  return false;
}

struct CellStats {
  double variance;
  double max_cov2;  // max over unfixed k of Cov(f, x_k | C)^2
};

inline CellStats cell_stats(const SparseFourier& f, int d, std::uint64_t fixed, std::uint64_t neg) {
  double m = 0, m2 = 0, count = 0;
  std::vector<double> cov(static_cast<std::size_t>(d) + 1, 0.0);
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << d); ++x) {
    if (((x ^ neg) & fixed) != 0) continue;
    const double v = value(f, x);
    m += v;
    m2 += v * v;
    count += 1;
    for (int k = 1; k <= d; ++k) cov[static_cast<std::size_t>(k)] += v * coord(x, k);
  }
  m /= count;
  CellStats s{m2 / count - m * m, 0.0};
  for (int k = 1; k <= d; ++k) {
    if ((fixed >> (k - 1)) & 1U) continue;
    const double c = cov[static_cast<std::size_t>(k)] / count;  // E[x_k] = 0 on the cell
    s.max_cov2 = std::max(s.max_cov2, c * c);
  }
  return s;
}

// Every cell over all d coordinates: 3^d of them.
template <class Visit>
void for_each_cell(int d, Visit visit) {
  std::uint64_t total = 1;
  for (int i = 0; i < d; ++i) total *= 3;
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t fixed = 0, neg = 0, c = code;
    for (int k = 1; k <= d; ++k, c /= 3) {
      if (c % 3 == 1) fixed |= std::uint64_t{1} << (k - 1);
      if (c % 3 == 2) fixed |= std::uint64_t{1} << (k - 1), neg |= std::uint64_t{1} << (k - 1);
    }
    visit(fixed, neg);
  }
}

inline double sid_full(const SparseFourier& f, int d) {
  double best = INFINITY;
  for_each_cell(d, [&](std::uint64_t fixed, std::uint64_t neg) {
    const CellStats s = cell_stats(f, d, fixed, neg);
    if (s.variance > 1e-12) best = std::min(best, s.max_cov2 / s.variance);
  });
  return best;
}

inline double smsp_full(const SparseFourier& f, int d) {
  double best = INFINITY;
  for_each_cell(d, [&](std::uint64_t fixed, std::uint64_t neg) {
    const CellStats s = cell_stats(f, d, fixed, neg);
    const int j = std::popcount(fixed & f.support().bits());
    if (s.variance > 1e-12) best = std::min(best, std::ldexp(s.max_cov2, -j));
  });
  return best;
}

// Random family of distinct nonempty subsets of 1..s.
inline std::vector<FeatureSet> random_family(std::mt19937_64& rng, int s, int count) {
  std::uniform_int_distribution<std::uint64_t> pick(1, (std::uint64_t{1} << s) - 1);
  std::vector<FeatureSet> out;
  while (static_cast<int>(out.size()) < count) {
    const FeatureSet v(pick(rng));
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

}  // namespace oracle
