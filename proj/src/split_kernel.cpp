#include "cubetree/split_kernel.hpp"

#include "cubetree/error.hpp"

namespace cubetree {

namespace {

FeatureSplitStats scan_one(const Dataset& data, std::span<const std::uint32_t> idx, int k) {
  const std::span<const std::uint64_t> col = data.column(k);
  const std::span<const double> y = data.responses();
  FeatureSplitStats s;
  for (std::uint32_t i : idx) {
    if ((col[i >> 6] >> (i & 63)) & 1U) {
      ++s.neg_count;
      s.neg_sum += y[i];
    }
  }
  return s;
}

void check_sizes(std::span<const int> features, std::span<FeatureSplitStats> out) {
  if (features.size() != out.size()) throw Error(ErrorKind::InvalidArgument, "scan output size mismatch");
}

}  // namespace

void scan_features_serial(const Dataset& data, std::span<const std::uint32_t> idx, std::span<const int> features,
                          std::span<FeatureSplitStats> out) {
  check_sizes(features, out);
  for (std::size_t j = 0; j < features.size(); ++j) out[j] = scan_one(data, idx, features[j]);
}

void scan_features_parallel(const Dataset& data, std::span<const std::uint32_t> idx, std::span<const int> features,
                            std::span<FeatureSplitStats> out) {
  check_sizes(features, out);
  const auto nf = static_cast<std::ptrdiff_t>(features.size());
  const bool big = idx.size() * features.size() >= kParallelScanThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t j = 0; j < nf; ++j) {
    out[static_cast<std::size_t>(j)] = scan_one(data, idx, features[static_cast<std::size_t>(j)]);
  }
}

double impurity_decrease_from_stats(std::size_t node_count, double node_sum, const FeatureSplitStats& s) {
  const std::size_t n_left = s.neg_count;
  const std::size_t n_right = node_count - n_left;
  if (n_left == 0 || n_right == 0) return 0.0;
  const double n = static_cast<double>(node_count);
  const double p = static_cast<double>(n_right) / n;
  const double mean_left = s.neg_sum / static_cast<double>(n_left);
  const double mean_right = (node_sum - s.neg_sum) / static_cast<double>(n_right);
  const double gap = mean_right - mean_left;
  return p * (1.0 - p) * gap * gap;
}

}  // namespace cubetree
