#include "cubetree/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cubetree/error.hpp"
#include "json.hpp"

namespace cubetree {

std::optional<double> BoundReport::get(const std::string& name) const {
  for (const auto& [k, v] : inputs) {
    if (k == name) return v;
  }
  for (const auto& [k, v] : derived) {
    if (k == name) return v;
  }
  return std::nullopt;
}

std::string BoundReport::to_text() const {
  std::ostringstream out;
  out << tag << "\n";
  for (const auto& [k, v] : inputs) out << "  " << k << " = " << format_double(v) << "\n";
  for (const auto& [k, v] : derived) out << "  " << k << " = " << format_double(v) << "\n";
  out << "  delta = " << (delta ? format_double(*delta) : "n/a") << (vacuous ? " (vacuous)" : "") << "\n";
  out << "  bound = " << format_double(bound) << "\n";
  if (ensemble_bound) out << "  ensemble_bound = " << format_double(*ensemble_bound) << "\n";
  if (!note.empty()) out << "  note: " << note << "\n";
  return out.str();
}

std::string BoundReport::to_json() const {
  nlohmann::ordered_json j;
  j["tag"] = tag;
  j["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : inputs) j["inputs"][k] = v;
  j["derived"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : derived) j["derived"][k] = v;
  j["delta"] = delta ? nlohmann::ordered_json(*delta) : nlohmann::ordered_json(nullptr);
  j["vacuous"] = vacuous;
  j["bound"] = bound;
  j["ensemble_bound"] = ensemble_bound ? nlohmann::ordered_json(*ensemble_bound) : nlohmann::ordered_json(nullptr);
  if (!note.empty()) j["note"] = note;
  return j.dump();
}

namespace {

void check_n(double n) {
  if (!(n >= 1.0)) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
}

// Sets delta/vacuous/bound for a bound of the form (1 - delta) * scale.
void finish(BoundReport& r, double delta, double scale, std::optional<double> kappa) {
  r.delta = delta;
  r.vacuous = !(delta < 1.0);
  r.bound = r.vacuous ? 0.0 : (1.0 - delta) * scale;
  if (kappa) {
    r.derived.emplace_back("kappa", *kappa);
    const double kd = *kappa * delta;
    r.ensemble_bound = kd < 1.0 ? (1.0 - kd) * scale : 0.0;
  }
}

}  // namespace

BoundReport xor_bound(int d, double n, std::optional<double> M) {
  if (d < 3) throw Error(ErrorKind::InvalidArgument, "xor bound needs d >= 3");
  check_n(n);
  BoundReport r;
  r.tag = "xor";
  r.inputs = {{"d", d}, {"n", n}};
  if (M) r.inputs.emplace_back("M", *M);
  const double delta = 2.0 * (std::log2(n) + 2.0) / (d - 1);
  r.derived = {{"variance", 1.0}};
  finish(r, delta, 1.0, M ? std::optional<double>(2.0 * *M) : std::nullopt);
  return r;
}

BoundReport nonmsp_bound(const SparseFourier& f, int d, double n, std::optional<double> M) {
  check_n(n);
  if (f.support().max_feature() > d) {
    throw Error(ErrorKind::SupportExceedsDimension, "function support exceeds d");
  }
  const MspClosure closure = msp_closure(f);
  if (closure.is_msp) throw Error(ErrorKind::FunctionIsMsp, "function satisfies MSP: " + f.str());
  const Traversal t = min_traversal(closure.unreached, closure.covered);
  const double var_r = msp_residual(f).variance();
  const int s_msp = closure.covered.size();
  BoundReport r;
  r.tag = "nonmsp";
  r.inputs = {{"d", d}, {"n", n}};
  if (M) r.inputs.emplace_back("M", *M);
  r.derived = {{"s_msp", s_msp}, {"s_t", t.size}, {"var_r_msp", var_r}, {"var_f", f.variance()}};
  const int denom = d - s_msp - t.size + 1;
  const double delta = denom > 0 ? t.size * (std::log2(n) + 2.0) / denom : std::numeric_limits<double>::infinity();
  finish(r, delta, var_r, M ? std::optional<double>(2.0 * *M / std::sqrt(f.variance())) : std::nullopt);
  return r;
}

BoundReport robust_bound(const SparseFourier& f, std::span<const FeatureSet> cut, int d, double n, double sigma) {
  check_n(n);
  if (!(sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "robust bound needs sigma > 0");
  if (f.support().max_feature() > d) throw Error(ErrorKind::SupportExceedsDimension, "function support exceeds d");
  const CutAnalysis a = cut_analysis(f, cut);
  BoundReport r;
  r.tag = "robust";
  r.inputs = {{"d", d}, {"n", n}, {"sigma", sigma}, {"cut_size", static_cast<double>(a.cut.size())}};
  r.derived = {{"w_cut", a.cut_weight}, {"s_msp", a.covered_size}, {"w_disconnected", a.disconnected_weight}};
  if (a.disconnected.empty()) {
    r.note = "remainder after removing the cut is MSP; bound is 0";
    return r;
  }
  const Traversal t = min_traversal(a.disconnected, a.covered);
  r.derived.emplace_back("s_t", t.size);
  const int denom = d - a.covered_size - t.size;
  const double delta_sparse = denom > 0 ? 2.0 * t.size * (std::log2(n) + 2.0) / denom
                                        : std::numeric_limits<double>::infinity();
  const double delta_noise = std::sqrt(2.0 * n * a.cut_weight) / sigma;
  r.derived.emplace_back("delta_sparsity", delta_sparse);
  r.derived.emplace_back("delta_noise", delta_noise);
  finish(r, std::max(delta_sparse, delta_noise), a.disconnected_weight, std::nullopt);
  return r;
}

BoundReport best_robust_bound(const SparseFourier& f, int d, double n, double sigma) {
  std::vector<FeatureSet> vertices;
  for (const FeatureSet& s : f.subsets()) {
    if (!s.empty()) vertices.push_back(s);
  }
  if (vertices.size() > 12) throw Error(ErrorKind::TooLarge, "cut enumeration is limited to 12 vertices");
  std::optional<BoundReport> best;
  std::vector<FeatureSet> cut;
  for (std::uint32_t mask = 0; mask < (1U << vertices.size()); ++mask) {
    cut.clear();
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      if ((mask >> i) & 1U) cut.push_back(vertices[i]);
    }
    BoundReport r = robust_bound(f, cut, d, n, sigma);
    if (!best || r.bound > best->bound) best = std::move(r);
  }
  best->tag = "robust-best";
  return *best;
}

GammaWindow gamma_window(double f_inf_norm, double sigma, int s, int d, double n, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be > 0");
  check_n(n);
  const double tau = 18.0 * (9.0 * f_inf_norm * f_inf_norm + sigma * sigma) *
                     ((s + 2) * std::log(3.0) + std::log(2.0 * d * n));
  GammaWindow w{tau, tau / n, 0.0, true};
  const double gap = std::sqrt(lambda / 2.0) - std::sqrt(tau / n);
  w.gamma_max = gap > 0.0 ? gap * gap : 0.0;
  w.empty = n <= 8.0 * tau / lambda || !(w.gamma_min < w.gamma_max);
  return w;
}

RateValues rate_values(int s, int d, double n, double sigma, double M) {
  if (s < 1 || d < 1 || !(n > 0.0) || sigma < 0.0 || M < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "rate arguments must be positive");
  }
  const double two_s = std::ldexp(1.0, s);
  const double v = sigma * sigma;
  return {two_s * v * std::log(d) / n, (v + M * M) * (two_s * std::log(d) + std::log(n)) / n,
          two_s * (M * M + v) * (s + std::log(n)) / n, s * std::log2(n) / d};
}

double selection_prob_bound(SelectionKind kind, const SelectionArgs& a) {
  if (!(a.n >= 1.0)) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  const double l = std::log2(a.n);
  switch (kind) {
    case SelectionKind::Xor:
      if (a.d < 2) throw Error(ErrorKind::InvalidArgument, "xor selection needs d >= 2");
      return 2.0 * (l + 2.0) / (a.d - 1);
    case SelectionKind::NonMsp: {
      const int denom = a.d - a.s_msp - a.s_t + 1;
      if (a.s_t < 2 || a.s_msp < 0 || denom <= 0) throw Error(ErrorKind::InvalidArgument, "bad nonmsp selection args");
      return a.s_t * (l + 2.0) / denom;
    }
    case SelectionKind::NonAdaptive:
      if (a.d < 1 || a.s < 1) throw Error(ErrorKind::InvalidArgument, "nonadaptive selection needs s, d >= 1");
      return static_cast<double>(a.s) / a.d * l;
    case SelectionKind::Depth:
      return l + 2.0;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown selection kind");
}

SelectionKind parse_selection_kind(const std::string& name) {
  if (name == "xor") return SelectionKind::Xor;
  if (name == "nonmsp") return SelectionKind::NonMsp;
  if (name == "nonadaptive") return SelectionKind::NonAdaptive;
  if (name == "depth") return SelectionKind::Depth;
  throw Error(ErrorKind::InvalidArgument, "unknown selection kind '" + name + "'");
}

}  // namespace cubetree
