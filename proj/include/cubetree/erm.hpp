#pragma once

// Exact empirical-risk-minimizing trees over the depth-bounded family, by
// memoized recursion on cells.

#include <cstddef>
#include <cstdint>
#include <span>

#include "cubetree/boolcube.hpp"
#include "cubetree/trees.hpp"

namespace cubetree {

struct ErmParams {
  int depth_budget = 2;
  double clip = 1.0;                          // |leaf label| <= clip
  std::size_t state_cap = std::size_t{1} << 24;  // max memo entries
};

struct ErmFit {
  TreeModel tree;
  double risk;  // (1/n) sum (Y_i - g(X_i))^2
};

/// Throws EmptyDataset, InvalidArgument for bad params, StateCapExceeded when
/// sum_{j <= depth} C(d, j) 2^j exceeds state_cap.
ErmFit fit_erm(const Dataset& data, const ErmParams& params);

/// Brute force over every tree structure of depth <= depth_budget. Only for
/// d <= 6 and depth <= 3, otherwise TooLarge.
double enumerate_erm_oracle(const Dataset& data, const ErmParams& params);

/// Clipped leaf label for the samples idx (ascending); 0 for an empty cell.
double erm_leaf_label(std::span<const double> y, std::span<const std::uint32_t> idx, double clip);
/// Sum of squared errors against erm_leaf_label, summed in idx order.
double erm_leaf_sse(std::span<const double> y, std::span<const std::uint32_t> idx, double clip);

/// sum_{j <= depth} C(dim, j) 2^j, saturating at SIZE_MAX.
std::size_t erm_state_estimate(int dim, int depth);

}  // namespace cubetree
