#pragma once

#include <cstddef>
#include <cstdint>

#include "cubetree/boolcube.hpp"
#include "cubetree/fourier.hpp"

namespace cubetree {

/// Y_i = f(X_i) + eps_i with X_i uniform on {-1,+1}^d. Deterministic in seed.
Dataset sample_dataset(const SparseFourier& f, int dim, std::size_t n, const NoiseModel& noise,
                       std::uint64_t seed);

}  // namespace cubetree
