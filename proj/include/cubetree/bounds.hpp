#pragma once

// Closed-form evaluators for the lower-bound theorems, the gamma window of the
// upper bound, the rate expressions and the selection-probability lemmas.
// Logarithms are base 2 in sample conditions and natural elsewhere.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cubetree/boolcube.hpp"
#include "cubetree/fourier.hpp"

namespace cubetree {

struct BoundReport {
  std::string tag;
  std::vector<std::pair<std::string, double>> inputs;
  std::vector<std::pair<std::string, double>> derived;
  std::optional<double> delta;  // smallest admissible delta; unset when the bound is trivially 0
  bool vacuous = false;         // no delta < 1 satisfies the sample condition
  double bound = 0.0;
  std::optional<double> ensemble_bound;
  std::string note;

  std::optional<double> get(const std::string& name) const;  // searches inputs then derived
  std::string to_text() const;
  std::string to_json() const;
};

/// Pure parity x_i x_j on d features.
BoundReport xor_bound(int d, double n, std::optional<double> M = std::nullopt);
/// Throws FunctionIsMsp.
BoundReport nonmsp_bound(const SparseFourier& f, int d, double n, std::optional<double> M = std::nullopt);
/// Cut B of Fourier vertices. The first condition's denominator is
/// d - s_{-B,MSP} - s_T (no +1), with the extra factor 2 on s_T.
BoundReport robust_bound(const SparseFourier& f, std::span<const FeatureSet> cut, int d, double n, double sigma);
/// Maximal robust bound over all cuts; TooLarge for more than 12 vertices.
BoundReport best_robust_bound(const SparseFourier& f, int d, double n, double sigma);

struct GammaWindow {
  double tau;
  double gamma_min;
  double gamma_max;
  bool empty;
};
/// Throws InvalidArgument unless lambda > 0.
GammaWindow gamma_window(double f_inf_norm, double sigma, int s, int d, double n, double lambda);

/// Order-of-magnitude guides; the universal constants are omitted.
struct RateValues {
  double minimax;
  double erm;
  double cart_upper;
  double na_delta;  // smallest delta with n <= 2^{delta d / s}
};
RateValues rate_values(int s, int d, double n, double sigma, double M);

enum class SelectionKind { Xor, NonMsp, NonAdaptive, Depth };
struct SelectionArgs {
  int d = 0;
  double n = 0;
  int s = 0;       // nonadaptive: sparsity
  int s_msp = 0;   // nonmsp
  int s_t = 0;     // nonmsp
};
/// Throws InvalidArgument for arguments outside a kind's domain.
double selection_prob_bound(SelectionKind kind, const SelectionArgs& args);
SelectionKind parse_selection_kind(const std::string& name);

}  // namespace cubetree
