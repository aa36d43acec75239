#pragma once

// Hypercube domain: feature sets, points, cells (subcubes) and datasets on {-1,+1}^d.
//
// Features are 1-based everywhere in the public surface. Internally a set of
// features is a 64-bit mask with feature k at bit k-1, which caps d at 64.
// A sign vector is stored as the mask of its -1 coordinates ("negative mask").

#include <bit>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cubetree {

inline constexpr int kMaxDim = 64;

class FeatureSet {
 public:
  constexpr FeatureSet() = default;
  constexpr explicit FeatureSet(std::uint64_t bits) : bits_(bits) {}
  FeatureSet(std::initializer_list<int> features);
  static FeatureSet from_features(std::span<const int> features);
  static constexpr FeatureSet all(int dim) {
    return FeatureSet(dim >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << dim) - 1);
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool contains(int k) const { return k >= 1 && k <= 64 && ((bits_ >> (k - 1)) & 1U); }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int max_feature() const { return 64 - std::countl_zero(bits_); }
  constexpr FeatureSet with(int k) const { return FeatureSet(bits_ | (std::uint64_t{1} << (k - 1))); }
  constexpr FeatureSet without(int k) const { return FeatureSet(bits_ & ~(std::uint64_t{1} << (k - 1))); }

  constexpr FeatureSet operator|(FeatureSet o) const { return FeatureSet(bits_ | o.bits_); }
  constexpr FeatureSet operator&(FeatureSet o) const { return FeatureSet(bits_ & o.bits_); }
  constexpr FeatureSet minus(FeatureSet o) const { return FeatureSet(bits_ & ~o.bits_); }
  constexpr bool subset_of(FeatureSet o) const { return (bits_ & ~o.bits_) == 0; }
  constexpr auto operator<=>(const FeatureSet&) const = default;

  /// Ascending 1-based feature list.
  std::vector<int> features() const;
  /// "{1,3}" style rendering.
  std::string str() const;

 private:
  std::uint64_t bits_ = 0;
};

/// A point of {-1,+1}^d.
class Point {
 public:
  Point(int dim, std::uint64_t negative_mask);
  static Point from_signs(std::span<const int> signs);

  int dim() const { return dim_; }
  int operator[](int k) const { return ((negative_ >> (k - 1)) & 1U) ? -1 : 1; }  // 1-based
  std::uint64_t negative_mask() const { return negative_; }

 private:
  int dim_;
  std::uint64_t negative_;
};

/// Subcube fixing the coordinates in J(C) to signs.
class Cell {
 public:
  explicit Cell(int dim);
  Cell(int dim, FeatureSet fixed, std::uint64_t negative);

  int dim() const { return dim_; }
  FeatureSet fixed() const { return fixed_; }
  /// Bits of fixed features whose sign is -1.
  std::uint64_t negative() const { return negative_; }
  int depth() const { return fixed_.size(); }
  double measure() const;

  bool is_fixed(int k) const { return fixed_.contains(k); }
  int sign(int k) const;
  std::vector<std::pair<int, int>> constraints() const;
  bool contains(const Point& x) const;
  bool contains_mask(std::uint64_t row_negative) const {
    return ((row_negative ^ negative_) & fixed_.bits()) == 0;
  }

  bool operator==(const Cell&) const = default;

 private:
  int dim_;
  FeatureSet fixed_;
  std::uint64_t negative_;
};

/// T_{k,z}(C): constrain feature k to sign z.
Cell split_cell(const Cell& cell, int k, int z);

struct NoiseModel {
  enum class Kind { None, Gaussian };
  Kind kind = Kind::None;
  double sigma = 0.0;

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma);
};

struct Provenance {
  std::string function_hash;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// n labelled points. Immutable; covariates are held both as one packed bit
/// column per feature (bit set = -1) for split scans and as one negative mask
/// per row for routing.
class Dataset {
 public:
  Dataset(int dim, std::vector<std::uint64_t> row_negative, std::vector<double> responses,
          Provenance provenance = {});

  int dim() const { return dim_; }
  std::size_t size() const { return responses_.size(); }
  int x(std::size_t i, int k) const { return ((rows_[i] >> (k - 1)) & 1U) ? -1 : 1; }
  std::uint64_t row_mask(std::size_t i) const { return rows_[i]; }
  std::span<const std::uint64_t> row_masks() const { return rows_; }
  /// Packed column for feature k (1-based); bit i%64 of word i/64 is set when X_ik = -1.
  std::span<const std::uint64_t> column(int k) const { return columns_[static_cast<std::size_t>(k - 1)]; }
  bool column_negative(int k, std::size_t i) const {
    return (columns_[static_cast<std::size_t>(k - 1)][i >> 6] >> (i & 63)) & 1U;
  }
  std::span<const double> responses() const { return responses_; }
  double y(std::size_t i) const { return responses_[i]; }
  Point point(std::size_t i) const { return Point(dim_, rows_[i]); }
  const Provenance& provenance() const { return provenance_; }

  /// Rows [begin, end) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t end) const;

 private:
  int dim_;
  std::vector<std::uint64_t> rows_;
  std::vector<std::vector<std::uint64_t>> columns_;
  std::vector<double> responses_;
  Provenance provenance_;
};

struct CellMembers {
  std::vector<std::size_t> indices;
  std::size_t count = 0;
  std::optional<double> mean;  // nullopt for an empty cell
};

CellMembers cell_members(const Cell& cell, const Dataset& data);

/// CSV with header `x1,...,xd,y`; signs as -1/1, responses with 17 significant digits.
void write_csv(std::ostream& out, const Dataset& data);
Dataset read_csv(std::istream& in);

std::string format_double(double v);  // %.17g

}  // namespace cubetree
