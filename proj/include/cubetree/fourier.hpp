#pragma once

// Sparse Fourier (Walsh) representation f = sum_S alpha_S chi_S on {-1,+1}^d and
// the structural analyses built on it: restriction to subcubes, the Fourier graph
// closure from the empty set (MSP), its stable variants, traversals and vertex cuts.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cubetree/boolcube.hpp"

namespace cubetree {

struct Term {
  FeatureSet subset;
  double coef = 0.0;
  bool operator==(const Term&) const = default;
};

class SparseFourier {
 public:
  SparseFourier() = default;
  /// Drops zero coefficients; throws on duplicate subsets or support beyond dim.
  SparseFourier(int dim, std::vector<Term> terms);

  int dim() const { return dim_; }
  /// Sorted by (|S|, mask).
  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  FeatureSet support() const { return support_; }
  int sparsity() const { return support_.size(); }
  double coefficient(FeatureSet s) const;
  double mean() const { return coefficient(FeatureSet{}); }
  /// Parseval: sum of alpha_S^2 over S != {}.
  double variance() const;
  double max_abs_coef() const;
  /// sup-norm by enumeration over the support (sparsity <= 24).
  double inf_norm() const;
  bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].subset.empty()); }
  std::vector<FeatureSet> subsets() const;

  /// Same terms, different ambient dimension.
  SparseFourier with_dim(int dim) const { return SparseFourier(dim, terms_); }
  SparseFourier without(std::span<const FeatureSet> removed) const;

  /// Canonical text, e.g. `1*x1*x2 + 0.02*x1`.
  std::string str() const;
  /// Stable 16-hex-digit digest of the canonical term list.
  std::string hash() const;

  bool operator==(const SparseFourier&) const = default;

 private:
  int dim_ = 0;
  std::vector<Term> terms_;
  FeatureSet support_;
};

double eval(const SparseFourier& f, const Point& x);
double eval_mask(const SparseFourier& f, std::uint64_t negative_mask);

/// Fast Walsh-Hadamard transform of a truth table of length 2^s. Index bit b
/// encodes x_{b+1}, bit value 0 meaning +1 and 1 meaning -1.
SparseFourier wht(std::span<const double> table);
std::vector<double> inverse_wht(const SparseFourier& f);

/// Restriction coefficients of f to a cell. Coefficients that cancel to within
/// kCancelTol * max|alpha| are dropped.
inline constexpr double kCancelTol = 1e-12;
SparseFourier restrict(const SparseFourier& f, const Cell& cell);
SparseFourier restrict(const SparseFourier& f, FeatureSet fixed, std::uint64_t negative);

/// Mean and variance of f on a cell without materializing the restriction.
struct CellMoments {
  double mean = 0.0;
  double variance = 0.0;
};
CellMoments restricted_moments(const SparseFourier& f, FeatureSet fixed, std::uint64_t negative);

struct MspClosure {
  std::vector<FeatureSet> reachable;   // always includes the empty set
  std::vector<FeatureSet> unreached;
  FeatureSet covered;
  bool is_msp = true;
};

/// Absorb any vertex with at most one uncovered feature until fixed point.
MspClosure msp_closure(std::span<const FeatureSet> vertices);
MspClosure msp_closure(const SparseFourier& f);

/// Sum of the terms outside the component of the empty set.
SparseFourier msp_residual(const SparseFourier& f);

inline constexpr int kDefaultSparsityCap = 16;
bool is_smsp(const SparseFourier& f, int sparsity_cap = kDefaultSparsityCap);
double sid_lambda(const SparseFourier& f, int sparsity_cap = kDefaultSparsityCap);
double smsp_lambda(const SparseFourier& f, int sparsity_cap = kDefaultSparsityCap);

struct Traversal {
  FeatureSet set;
  int size = 0;
};
inline constexpr int kDefaultTraversalCap = 8;
/// Smallest T disjoint from forbidden with |T cap S| >= 2 for every target;
/// lexicographically first among equal sizes.
Traversal min_traversal(std::span<const FeatureSet> targets, FeatureSet forbidden,
                        int size_cap = kDefaultTraversalCap);

struct CutAnalysis {
  std::vector<FeatureSet> cut;
  double cut_weight = 0.0;                 // w(B)
  std::vector<FeatureSet> msp_component;   // reachable from {} after removing B
  std::vector<FeatureSet> disconnected;
  FeatureSet covered;                      // union of msp_component
  int covered_size = 0;
  double disconnected_weight = 0.0;
};
CutAnalysis cut_analysis(const SparseFourier& f, std::span<const FeatureSet> cut);

/// Coefficients with magnitude uniform on [0.5, 1.5] and a random sign.
SparseFourier random_coefficients(std::span<const FeatureSet> supports, int dim, std::uint64_t seed);

/// AND of features 1..s: prod (1 + x_j) / 2.
SparseFourier and_function(int s, int dim);

struct ParseOptions {
  bool drop_zero_terms = false;  // otherwise a zero coefficient is a parse error
};
/// Grammar: terms joined by `+` (or `-`), each `coef*x<i>*x<j>...`, bare `coef`
/// for the constant; an omitted coefficient means 1.
SparseFourier parse_function(std::string_view text, int dim, ParseOptions options = {});
/// `{"dim": d, "terms": [{"subset": [..], "coef": c}, ...]}`
SparseFourier parse_function_json(std::string_view json_text);
std::string function_to_json(const SparseFourier& f);

}  // namespace cubetree
