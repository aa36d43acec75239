#include "cubetree/boolcube.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "cubetree/error.hpp"

namespace cubetree {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::FeatureAlreadyFixed: return "FeatureAlreadyFixed";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SupportExceedsDimension: return "SupportExceedsDimension";
    case ErrorKind::NonPowerOfTwoLength: return "NonPowerOfTwoLength";
    case ErrorKind::SparsityCapExceeded: return "SparsityCapExceeded";
    case ErrorKind::ConstantFunction: return "ConstantFunction";
    case ErrorKind::NoTraversal: return "NoTraversal";
    case ErrorKind::SearchCapExceeded: return "SearchCapExceeded";
    case ErrorKind::UnknownVertex: return "UnknownVertex";
    case ErrorKind::RefinementCapExceeded: return "RefinementCapExceeded";
    case ErrorKind::EmptyCell: return "EmptyCell";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::StateCapExceeded: return "StateCapExceeded";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::FunctionIsMsp: return "FunctionIsMsp";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

void check_feature(int k, int dim) {
  if (k < 1 || k > dim) {
    throw Error(ErrorKind::IndexOutOfRange,
                "feature x" + std::to_string(k) + " outside 1.." + std::to_string(dim));
  }
}

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw Error(ErrorKind::InvalidArgument, "dimension must be in 1..64, got " + std::to_string(dim));
  }
}

}  // namespace

FeatureSet::FeatureSet(std::initializer_list<int> features) {
  for (int k : features) {
    if (k < 1 || k > kMaxDim) throw Error(ErrorKind::IndexOutOfRange, "feature index " + std::to_string(k));
    bits_ |= std::uint64_t{1} << (k - 1);
  }
}

FeatureSet FeatureSet::from_features(std::span<const int> features) {
  FeatureSet s;
  for (int k : features) {
    if (k < 1 || k > kMaxDim) throw Error(ErrorKind::IndexOutOfRange, "feature index " + std::to_string(k));
    s = s.with(k);
  }
  return s;
}

std::vector<int> FeatureSet::features() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b) + 1);
  return out;
}

std::string FeatureSet::str() const {
  std::string s = "{";
  bool first = true;
  for (int k : features()) {
    if (!first) s += ",";
    s += std::to_string(k);
    first = false;
  }
  return s + "}";
}

Point::Point(int dim, std::uint64_t negative_mask) : dim_(dim), negative_(negative_mask) {
  check_dim(dim);
  if ((negative_mask & ~FeatureSet::all(dim).bits()) != 0) {
    throw Error(ErrorKind::DimensionMismatch, "negative mask has bits beyond dimension");
  }
}

Point Point::from_signs(std::span<const int> signs) {
  std::uint64_t neg = 0;
  for (std::size_t j = 0; j < signs.size(); ++j) {
    if (signs[j] != 1 && signs[j] != -1) throw Error(ErrorKind::InvalidArgument, "point entries must be -1 or +1");
    if (signs[j] == -1) neg |= std::uint64_t{1} << j;
  }
  return Point(static_cast<int>(signs.size()), neg);
}

Cell::Cell(int dim) : dim_(dim), negative_(0) { check_dim(dim); }

Cell::Cell(int dim, FeatureSet fixed, std::uint64_t negative)
    : dim_(dim), fixed_(fixed), negative_(negative & fixed.bits()) {
  check_dim(dim);
  if (!fixed.subset_of(FeatureSet::all(dim))) {
    throw Error(ErrorKind::IndexOutOfRange, "cell constrains a feature beyond dimension " + std::to_string(dim));
  }
}

double Cell::measure() const { return std::ldexp(1.0, -depth()); }

int Cell::sign(int k) const {
  check_feature(k, dim_);
  if (!is_fixed(k)) return 0;
  return ((negative_ >> (k - 1)) & 1U) ? -1 : 1;
}

std::vector<std::pair<int, int>> Cell::constraints() const {
  std::vector<std::pair<int, int>> out;
  for (int k : fixed_.features()) out.emplace_back(k, sign(k));
  return out;
}

bool Cell::contains(const Point& x) const {
  if (x.dim() != dim_) throw Error(ErrorKind::DimensionMismatch, "point/cell dimension");
  return contains_mask(x.negative_mask());
}

Cell split_cell(const Cell& cell, int k, int z) {
  check_feature(k, cell.dim());
  if (z != 1 && z != -1) throw Error(ErrorKind::InvalidArgument, "split sign must be -1 or +1");
  if (cell.is_fixed(k)) throw Error(ErrorKind::FeatureAlreadyFixed, "x" + std::to_string(k) + " is already fixed");
  std::uint64_t neg = cell.negative();
  if (z == -1) neg |= std::uint64_t{1} << (k - 1);
  return Cell(cell.dim(), cell.fixed().with(k), neg);
}

NoiseModel NoiseModel::gaussian(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::InvalidArgument, "sigma must be >= 0");
  if (sigma == 0.0) return none();
  return {Kind::Gaussian, sigma};
}

Dataset::Dataset(int dim, std::vector<std::uint64_t> row_negative, std::vector<double> responses,
                 Provenance provenance)
    : dim_(dim), rows_(std::move(row_negative)), responses_(std::move(responses)),
      provenance_(std::move(provenance)) {
  check_dim(dim);
  if (rows_.size() != responses_.size()) throw Error(ErrorKind::InvalidArgument, "row/response count mismatch");
  const std::uint64_t valid = FeatureSet::all(dim).bits();
  for (std::uint64_t r : rows_) {
    if ((r & ~valid) != 0) throw Error(ErrorKind::DimensionMismatch, "row has bits beyond dimension");
  }
  for (double y : responses_) {
    if (!std::isfinite(y)) throw Error(ErrorKind::InvalidArgument, "responses must be finite");
  }
  const std::size_t words = (rows_.size() + 63) / 64;
  columns_.assign(static_cast<std::size_t>(dim), std::vector<std::uint64_t>(words, 0));
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (std::uint64_t b = rows_[i]; b != 0; b &= b - 1) {
      columns_[static_cast<std::size_t>(std::countr_zero(b))][i >> 6] |= std::uint64_t{1} << (i & 63);
    }
  }
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw Error(ErrorKind::IndexOutOfRange, "dataset slice");
  return Dataset(dim_, std::vector<std::uint64_t>(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                                  rows_.begin() + static_cast<std::ptrdiff_t>(end)),
                 std::vector<double>(responses_.begin() + static_cast<std::ptrdiff_t>(begin),
                                     responses_.begin() + static_cast<std::ptrdiff_t>(end)),
                 provenance_);
}

CellMembers cell_members(const Cell& cell, const Dataset& data) {
  if (cell.dim() != data.dim()) throw Error(ErrorKind::DimensionMismatch, "cell/dataset dimension");
  CellMembers m;
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (cell.contains_mask(data.row_mask(i))) {
      m.indices.push_back(i);
      sum += data.y(i);
    }
  }
  m.count = m.indices.size();
  if (m.count > 0) m.mean = sum / static_cast<double>(m.count);
  return m;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& out, const Dataset& data) {
  for (int k = 1; k <= data.dim(); ++k) out << 'x' << k << ',';
  out << "y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int k = 1; k <= data.dim(); ++k) out << data.x(i, k) << ',';
    out << format_double(data.y(i)) << '\n';
  }
}

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "empty CSV");
  int dim = 0;
  {
    std::stringstream header(line);
    std::string cell;
    std::vector<std::string> names;
    while (std::getline(header, cell, ',')) names.push_back(cell);
    if (names.empty() || names.back() != "y") throw Error(ErrorKind::ParseError, "last column must be y");
    dim = static_cast<int>(names.size()) - 1;
    for (int k = 1; k <= dim; ++k) {
      if (names[static_cast<std::size_t>(k - 1)] != "x" + std::to_string(k)) {
        throw Error(ErrorKind::ParseError, "expected header column x" + std::to_string(k));
      }
    }
  }
  std::vector<std::uint64_t> rows;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::uint64_t neg = 0;
    for (int k = 1; k <= dim; ++k) {
      if (!std::getline(ss, cell, ',')) throw Error(ErrorKind::ParseError, "short row at line " + std::to_string(line_no));
      if (cell == "-1") {
        neg |= std::uint64_t{1} << (k - 1);
      } else if (cell != "1") {
        throw Error(ErrorKind::ParseError, "sign must be -1 or 1 at line " + std::to_string(line_no));
      }
    }
    if (!std::getline(ss, cell, ',')) throw Error(ErrorKind::ParseError, "missing y at line " + std::to_string(line_no));
    try {
      std::size_t used = 0;
      ys.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError, "bad response '" + cell + "' at line " + std::to_string(line_no));
    }
    rows.push_back(neg);
  }
  return Dataset(dim, std::move(rows), std::move(ys));
}

}  // namespace cubetree
