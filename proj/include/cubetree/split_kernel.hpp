#pragma once

// Per-feature sufficient statistics for a node: how many of the node's samples
// have x_k = -1 and the response sum over them. Both kernels sum each feature
// in the order of `idx`, so their outputs are bitwise identical.

#include <cstddef>
#include <cstdint>
#include <span>

#include "cubetree/boolcube.hpp"

namespace cubetree {

struct FeatureSplitStats {
  std::uint32_t neg_count = 0;
  double neg_sum = 0.0;
};

/// Serial reference implementation.
void scan_features_serial(const Dataset& data, std::span<const std::uint32_t> idx, std::span<const int> features,
                          std::span<FeatureSplitStats> out);

/// OpenMP over features; falls back to a single thread for small nodes.
void scan_features_parallel(const Dataset& data, std::span<const std::uint32_t> idx, std::span<const int> features,
                            std::span<FeatureSplitStats> out);

/// Work (samples x features) below which the parallel kernel stays serial.
inline constexpr std::size_t kParallelScanThreshold = std::size_t{1} << 15;

/// p(1-p)(Ybar_R - Ybar_L)^2 with p = N_R/N from node totals and the x_k = -1 side.
double impurity_decrease_from_stats(std::size_t node_count, double node_sum, const FeatureSplitStats& s);

}  // namespace cubetree
