#include "cubetree/fourier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numeric>

#include "json.hpp"

#include "cubetree/error.hpp"
#include "cubetree/rng.hpp"

namespace cubetree {

namespace {

bool term_less(const Term& a, const Term& b) {
  const int sa = a.subset.size();
  const int sb = b.subset.size();
  if (sa != sb) return sa < sb;
  return a.subset.bits() < b.subset.bits();
}

bool subset_less(FeatureSet a, FeatureSet b) { return term_less({a, 0.0}, {b, 0.0}); }

int parity_sign(std::uint64_t bits) { return (std::popcount(bits) & 1) ? -1 : 1; }

// Sorts, merges equal subsets (summing in input order) and drops cancelled terms.
std::vector<Term> merge_terms(std::vector<Term> terms, double zero_tol) {
  std::stable_sort(terms.begin(), terms.end(), term_less);
  std::vector<Term> out;
  out.reserve(terms.size());
  for (const Term& t : terms) {
    if (!out.empty() && out.back().subset == t.subset) {
      out.back().coef += t.coef;
    } else {
      out.push_back(t);
    }
  }
  std::erase_if(out, [zero_tol](const Term& t) { return std::abs(t.coef) <= zero_tol; });
  return out;
}

std::vector<Term> restrict_terms(const std::vector<Term>& terms, FeatureSet fixed, std::uint64_t negative,
                                 double zero_tol) {
  std::vector<Term> raw;
  raw.reserve(terms.size());
  const std::uint64_t neg = negative & fixed.bits();
  for (const Term& t : terms) {
    raw.push_back({t.subset.minus(fixed), parity_sign(t.subset.bits() & neg) * t.coef});
  }
  return merge_terms(std::move(raw), zero_tol);
}

std::string shortest_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace

SparseFourier::SparseFourier(int dim, std::vector<Term> terms) : dim_(dim) {
  if (dim < 0 || dim > kMaxDim) throw Error(ErrorKind::InvalidArgument, "dimension must be in 0..64");
  std::erase_if(terms, [](const Term& t) { return t.coef == 0.0; });
  std::stable_sort(terms.begin(), terms.end(), term_less);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (!std::isfinite(terms[i].coef)) throw Error(ErrorKind::InvalidArgument, "non-finite coefficient");
    if (i > 0 && terms[i].subset == terms[i - 1].subset) {
      throw Error(ErrorKind::InvalidArgument, "duplicate subset " + terms[i].subset.str());
    }
    support_ = support_ | terms[i].subset;
  }
  if (support_.max_feature() > dim) {
    throw Error(ErrorKind::SupportExceedsDimension,
                "support " + support_.str() + " exceeds dimension " + std::to_string(dim));
  }
  terms_ = std::move(terms);
}

double SparseFourier::coefficient(FeatureSet s) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), Term{s, 0.0}, term_less);
  return (it != terms_.end() && it->subset == s) ? it->coef : 0.0;
}

double SparseFourier::variance() const {
  double v = 0.0;
  for (const Term& t : terms_) {
    if (!t.subset.empty()) v += t.coef * t.coef;
  }
  return v;
}

double SparseFourier::max_abs_coef() const {
  double m = 0.0;
  for (const Term& t : terms_) m = std::max(m, std::abs(t.coef));
  return m;
}

double SparseFourier::inf_norm() const {
  const std::vector<int> feats = support_.features();
  if (feats.size() > 24) throw Error(ErrorKind::SparsityCapExceeded, "inf_norm enumerates 2^s points, s <= 24");
  double m = 0.0;
  const std::uint64_t count = std::uint64_t{1} << feats.size();
  for (std::uint64_t p = 0; p < count; ++p) {
    std::uint64_t neg = 0;
    for (std::size_t j = 0; j < feats.size(); ++j) {
      if ((p >> j) & 1U) neg |= std::uint64_t{1} << (feats[j] - 1);
    }
    m = std::max(m, std::abs(eval_mask(*this, neg)));
  }
  return m;
}

std::vector<FeatureSet> SparseFourier::subsets() const {
  std::vector<FeatureSet> out;
  out.reserve(terms_.size());
  for (const Term& t : terms_) out.push_back(t.subset);
  return out;
}

SparseFourier SparseFourier::without(std::span<const FeatureSet> removed) const {
  std::vector<Term> kept;
  for (const Term& t : terms_) {
    if (std::find(removed.begin(), removed.end(), t.subset) == removed.end()) kept.push_back(t);
  }
  return SparseFourier(dim_, std::move(kept));
}

std::string SparseFourier::str() const {
  if (terms_.empty()) return "0";
  std::string s;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0) s += " + ";
    s += shortest_double(terms_[i].coef);
    for (int k : terms_[i].subset.features()) s += "*x" + std::to_string(k);
  }
  return s;
}

std::string SparseFourier::hash() const {
  std::uint64_t h = hash_tag("sparse-fourier");
  for (const Term& t : terms_) {
    std::uint64_t coef_bits = 0;
    static_assert(sizeof coef_bits == sizeof t.coef);
    std::memcpy(&coef_bits, &t.coef, sizeof coef_bits);
    h = mix64(h ^ t.subset.bits());
    h = mix64(h ^ coef_bits);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double eval_mask(const SparseFourier& f, std::uint64_t negative_mask) {
  double v = 0.0;
  for (const Term& t : f.terms()) v += parity_sign(t.subset.bits() & negative_mask) * t.coef;
  return v;
}

double eval(const SparseFourier& f, const Point& x) {
  if (x.dim() != f.dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "point has dimension " + std::to_string(x.dim()) + ", function " + std::to_string(f.dim()));
  }
  return eval_mask(f, x.negative_mask());
}

namespace {

void fwht_in_place(std::vector<double>& a) {
  for (std::size_t h = 1; h < a.size(); h <<= 1) {
    for (std::size_t i = 0; i < a.size(); i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double u = a[j];
        const double v = a[j + h];
        a[j] = u + v;
        a[j + h] = u - v;
      }
    }
  }
}

}  // namespace

SparseFourier wht(std::span<const double> table) {
  const std::size_t len = table.size();
  if (len == 0 || (len & (len - 1)) != 0) {
    throw Error(ErrorKind::NonPowerOfTwoLength, "table length " + std::to_string(len));
  }
  const int s = std::countr_zero(len);
  if (s > 30) throw Error(ErrorKind::TooLarge, "truth table over more than 30 coordinates");
  std::vector<double> a(table.begin(), table.end());
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  fwht_in_place(a);
  std::vector<Term> terms;
  const double inv = std::ldexp(1.0, -s);
  for (std::size_t idx = 0; idx < len; ++idx) {
    const double c = a[idx] * inv;
    if (std::abs(c) > kCancelTol * scale) terms.push_back({FeatureSet(idx), c});
  }
  return SparseFourier(s, std::move(terms));
}

std::vector<double> inverse_wht(const SparseFourier& f) {
  if (f.dim() > 30) throw Error(ErrorKind::TooLarge, "dense table over more than 30 coordinates");
  std::vector<double> a(std::size_t{1} << f.dim(), 0.0);
  for (const Term& t : f.terms()) a[t.subset.bits()] = t.coef;
  fwht_in_place(a);
  return a;
}

SparseFourier restrict(const SparseFourier& f, FeatureSet fixed, std::uint64_t negative) {
  if (!fixed.subset_of(FeatureSet::all(f.dim()))) {
    throw Error(ErrorKind::DimensionMismatch, "cell constrains features beyond the function's dimension");
  }
  return SparseFourier(f.dim(), restrict_terms(f.terms(), fixed, negative, kCancelTol * f.max_abs_coef()));
}

SparseFourier restrict(const SparseFourier& f, const Cell& cell) {
  if (cell.dim() != f.dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "cell has dimension " + std::to_string(cell.dim()) + ", function " + std::to_string(f.dim()));
  }
  return restrict(f, cell.fixed(), cell.negative());
}

CellMoments restricted_moments(const SparseFourier& f, FeatureSet fixed, std::uint64_t negative) {
  CellMoments m;
  for (const Term& t : restrict_terms(f.terms(), fixed, negative, kCancelTol * f.max_abs_coef())) {
    if (t.subset.empty()) {
      m.mean = t.coef;
    } else {
      m.variance += t.coef * t.coef;
    }
  }
  return m;
}

MspClosure msp_closure(std::span<const FeatureSet> vertices) {
  std::vector<FeatureSet> pending(vertices.begin(), vertices.end());
  std::sort(pending.begin(), pending.end(), subset_less);
  pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
  std::erase_if(pending, [](FeatureSet s) { return s.empty(); });

  MspClosure out;
  out.reachable.push_back(FeatureSet{});
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = pending.begin(); it != pending.end();) {
      if (it->minus(out.covered).size() <= 1) {
        out.covered = out.covered | *it;
        out.reachable.push_back(*it);
        it = pending.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  std::sort(out.reachable.begin(), out.reachable.end(), subset_less);
  out.unreached = std::move(pending);
  out.is_msp = out.unreached.empty();
  return out;
}

MspClosure msp_closure(const SparseFourier& f) {
  const std::vector<FeatureSet> v = f.subsets();
  return msp_closure(v);
}

SparseFourier msp_residual(const SparseFourier& f) {
  const MspClosure c = msp_closure(f);
  std::vector<Term> kept;
  for (FeatureSet s : c.unreached) kept.push_back({s, f.coefficient(s)});
  return SparseFourier(f.dim(), std::move(kept));
}

namespace {

// Visits every cell whose constraints lie inside the support (3^s cells),
// passing its restricted terms. The visitor returns false to stop early.
// Constraining a feature outside the support leaves every restricted
// coefficient unchanged, so these cells cover all distinct restrictions.
using CellVisitor = std::function<bool(FeatureSet fixed, const std::vector<Term>& restricted)>;

void for_each_support_cell(const SparseFourier& f, int sparsity_cap, const CellVisitor& visit) {
  if (f.sparsity() > sparsity_cap) {
    throw Error(ErrorKind::SparsityCapExceeded,
                "sparsity " + std::to_string(f.sparsity()) + " exceeds cap " + std::to_string(sparsity_cap));
  }
  const std::vector<int> feats = f.support().features();
  const double tol = kCancelTol * f.max_abs_coef();
  bool stop = false;
  std::function<void(std::size_t, FeatureSet, const std::vector<Term>&)> rec =
      [&](std::size_t i, FeatureSet fixed, const std::vector<Term>& terms) {
        if (stop) return;
        if (i == feats.size()) {
          if (!visit(fixed, terms)) stop = true;
          return;
        }
        rec(i + 1, fixed, terms);
        const FeatureSet one(std::uint64_t{1} << (feats[i] - 1));
        rec(i + 1, fixed | one, restrict_terms(terms, one, 0, tol));
        rec(i + 1, fixed | one, restrict_terms(terms, one, one.bits(), tol));
      };
  rec(0, FeatureSet{}, f.terms());
}

struct CellSignal {
  bool constant = true;
  double variance = 0.0;
  double max_cov2 = 0.0;  // max_k alpha^C_{k}^2 over singletons
};

CellSignal cell_signal(const std::vector<Term>& terms) {
  CellSignal s;
  for (const Term& t : terms) {
    if (t.subset.empty()) continue;
    s.constant = false;
    s.variance += t.coef * t.coef;
    if (t.subset.size() == 1) s.max_cov2 = std::max(s.max_cov2, t.coef * t.coef);
  }
  return s;
}

}  // namespace

bool is_smsp(const SparseFourier& f, int sparsity_cap) {
  bool ok = true;
  for_each_support_cell(f, sparsity_cap, [&](FeatureSet, const std::vector<Term>& terms) {
    std::vector<FeatureSet> v;
    v.reserve(terms.size());
    for (const Term& t : terms) v.push_back(t.subset);
    ok = msp_closure(v).is_msp;
    return ok;
  });
  return ok;
}

double sid_lambda(const SparseFourier& f, int sparsity_cap) {
  double best = INFINITY;
  for_each_support_cell(f, sparsity_cap, [&](FeatureSet, const std::vector<Term>& terms) {
    const CellSignal s = cell_signal(terms);
    if (!s.constant) best = std::min(best, s.max_cov2 / s.variance);
    return true;
  });
  if (std::isinf(best)) throw Error(ErrorKind::ConstantFunction, "no cell with positive variance");
  return best;
}

double smsp_lambda(const SparseFourier& f, int sparsity_cap) {
  double best = INFINITY;
  for_each_support_cell(f, sparsity_cap, [&](FeatureSet fixed, const std::vector<Term>& terms) {
    const CellSignal s = cell_signal(terms);
    if (!s.constant) best = std::min(best, std::ldexp(s.max_cov2, -fixed.size()));
    return true;
  });
  if (std::isinf(best)) throw Error(ErrorKind::ConstantFunction, "no cell with positive variance");
  return best;
}

Traversal min_traversal(std::span<const FeatureSet> targets, FeatureSet forbidden, int size_cap) {
  FeatureSet universe;
  for (FeatureSet s : targets) {
    if (s.minus(forbidden).size() < 2) {
      throw Error(ErrorKind::NoTraversal,
                  "target " + s.str() + " has fewer than two features outside " + forbidden.str());
    }
    universe = universe | s.minus(forbidden);
  }
  if (targets.empty()) return {};
  const std::vector<int> pool = universe.features();
  auto feasible = [&](FeatureSet t) {
    return std::all_of(targets.begin(), targets.end(), [t](FeatureSet s) { return (s & t).size() >= 2; });
  };
  // Lexicographic combinations of the pool, smallest size first.
  for (int k = 2; k <= std::min<int>(size_cap, static_cast<int>(pool.size())); ++k) {
    std::vector<int> pick(static_cast<std::size_t>(k));
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      FeatureSet t;
      for (int p : pick) t = t.with(pool[static_cast<std::size_t>(p)]);
      if (feasible(t)) return {t, k};
      int i = k - 1;
      while (i >= 0 && pick[static_cast<std::size_t>(i)] == static_cast<int>(pool.size()) - k + i) --i;
      if (i < 0) break;
      ++pick[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  throw Error(ErrorKind::SearchCapExceeded, "no traversal of size <= " + std::to_string(size_cap));
}

CutAnalysis cut_analysis(const SparseFourier& f, std::span<const FeatureSet> cut) {
  CutAnalysis a;
  for (FeatureSet b : cut) {
    if (b.empty() || f.coefficient(b) == 0.0) {
      throw Error(ErrorKind::UnknownVertex, b.str() + " is not a non-empty vertex of the Fourier graph");
    }
    if (std::find(a.cut.begin(), a.cut.end(), b) != a.cut.end()) continue;
    a.cut.push_back(b);
    a.cut_weight += f.coefficient(b) * f.coefficient(b);
  }
  std::sort(a.cut.begin(), a.cut.end(), subset_less);
  std::vector<FeatureSet> remaining;
  for (FeatureSet s : f.subsets()) {
    if (std::find(a.cut.begin(), a.cut.end(), s) == a.cut.end()) remaining.push_back(s);
  }
  MspClosure c = msp_closure(remaining);
  a.msp_component = std::move(c.reachable);
  a.disconnected = std::move(c.unreached);
  a.covered = c.covered;
  a.covered_size = c.covered.size();
  for (FeatureSet s : a.disconnected) a.disconnected_weight += f.coefficient(s) * f.coefficient(s);
  return a;
}

SparseFourier random_coefficients(std::span<const FeatureSet> supports, int dim, std::uint64_t seed) {
  if (supports.empty()) throw Error(ErrorKind::InvalidArgument, "no supports given");
  Rng rng = make_rng(seed, "random-coefficients");
  std::uniform_real_distribution<double> magnitude(0.5, 1.5);
  std::bernoulli_distribution negative(0.5);
  std::vector<Term> terms;
  for (FeatureSet s : supports) {
    const double m = magnitude(rng);
    terms.push_back({s, negative(rng) ? -m : m});
  }
  return SparseFourier(dim, std::move(terms));
}

SparseFourier and_function(int s, int dim) {
  if (s < 0 || s > 20 || s > dim) throw Error(ErrorKind::InvalidArgument, "AND order must be in 0..min(20, dim)");
  std::vector<Term> terms;
  const double c = std::ldexp(1.0, -s);
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << s); ++m) terms.push_back({FeatureSet(m), c});
  return SparseFourier(dim, std::move(terms));
}

namespace {

class FunctionParser {
 public:
  FunctionParser(std::string_view text, ParseOptions options) : text_(text), options_(options) {}

  std::vector<Term> parse() {
    std::vector<Term> terms;
    skip_ws();
    double sign = 1.0;
    if (peek() == '+' || peek() == '-') sign = take() == '-' ? -1.0 : 1.0;
    while (true) {
      Term t = term();
      t.coef *= sign;
      for (const Term& prev : terms) {
        if (prev.subset == t.subset) fail("duplicate subset " + t.subset.str());
      }
      if (t.coef == 0.0) {
        if (!options_.drop_zero_terms) fail("zero coefficient for " + t.subset.str());
      } else {
        terms.push_back(t);
      }
      skip_ws();
      if (at_end()) break;
      const char c = take();
      if (c != '+' && c != '-') fail(std::string("expected '+' or '-' but found '") + c + "'");
      sign = c == '-' ? -1.0 : 1.0;
      skip_ws();
    }
    return terms;
  }

 private:
  Term term() {
    Term t{FeatureSet{}, 1.0};
    bool first = true;
    while (true) {
      skip_ws();
      if (!first) {
        if (peek() != '*') break;
        take();
        skip_ws();
      }
      first = false;
      if (peek() == 'x') {
        take();
        const std::size_t start = pos_;
        while (std::isdigit(static_cast<unsigned char>(peek()))) take();
        if (start == pos_) fail("expected feature index after 'x'");
        const int k = std::stoi(std::string(text_.substr(start, pos_ - start)));
        if (k < 1 || k > kMaxDim) fail("feature index out of range: x" + std::to_string(k));
        if (t.subset.contains(k)) fail("repeated feature x" + std::to_string(k) + " in a term");
        t.subset = t.subset.with(k);
      } else {
        const std::string rest(text_.substr(pos_));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) fail("expected a coefficient or x<i>");
        pos_ += static_cast<std::size_t>(end - rest.c_str());
        t.coef *= v;
      }
    }
    return t;
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  char take() { return text_[pos_++]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ParseError, msg + " at offset " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
  }

  std::string_view text_;
  ParseOptions options_;
  std::size_t pos_ = 0;
};

}  // namespace

SparseFourier parse_function(std::string_view text, int dim, ParseOptions options) {
  return SparseFourier(dim, FunctionParser(text, options).parse());
}

SparseFourier parse_function_json(std::string_view json_text) {
  try {
    const auto j = nlohmann::json::parse(json_text);
    const int dim = j.at("dim").get<int>();
    std::vector<Term> terms;
    for (const auto& rec : j.at("terms")) {
      const auto feats = rec.at("subset").get<std::vector<int>>();
      FeatureSet s = FeatureSet::from_features(feats);
      if (s.size() != static_cast<int>(feats.size())) throw Error(ErrorKind::ParseError, "repeated feature in subset");
      const double c = rec.at("coef").get<double>();
      if (c == 0.0) throw Error(ErrorKind::ParseError, "zero coefficient for " + s.str());
      for (const Term& t : terms) {
        if (t.subset == s) throw Error(ErrorKind::ParseError, "duplicate subset " + s.str());
      }
      terms.push_back({s, c});
    }
    return SparseFourier(dim, std::move(terms));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

std::string function_to_json(const SparseFourier& f) {
  nlohmann::json j;
  j["dim"] = f.dim();
  j["terms"] = nlohmann::json::array();
  for (const Term& t : f.terms()) j["terms"].push_back({{"subset", t.subset.features()}, {"coef", t.coef}});
  return j.dump();
}

}  // namespace cubetree
