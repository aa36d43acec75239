#include "cubetree/sampling.hpp"

#include <random>

#include "cubetree/error.hpp"
#include "cubetree/rng.hpp"

namespace cubetree {

Dataset sample_dataset(const SparseFourier& f, int dim, std::size_t n, const NoiseModel& noise,
                       std::uint64_t seed) {
  if (f.support().max_feature() > dim) {
    throw Error(ErrorKind::SupportExceedsDimension,
                "support " + f.support().str() + " exceeds dimension " + std::to_string(dim));
  }
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "sample count must be >= 1");
  if (dim < 1 || dim > kMaxDim) throw Error(ErrorKind::InvalidArgument, "dimension must be in 1..64");

  Rng covariates = make_rng(seed, "covariates");
  Rng eps = make_rng(seed, "noise");
  std::normal_distribution<double> normal(0.0, noise.kind == NoiseModel::Kind::Gaussian ? noise.sigma : 1.0);
  const std::uint64_t valid = FeatureSet::all(dim).bits();

  std::vector<std::uint64_t> rows(n);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i] = covariates() & valid;
    ys[i] = eval_mask(f, rows[i]);
    if (noise.kind == NoiseModel::Kind::Gaussian) ys[i] += normal(eps);
  }
  return Dataset(dim, std::move(rows), std::move(ys), Provenance{f.hash(), noise.sigma, seed});
}

}  // namespace cubetree
