#include "evifuse/evidence.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evifuse/errors.hpp"

namespace evifuse::evidence {

namespace {

void require_same_frame(const FrameOfDiscernment& a, const FrameOfDiscernment& b,
                        const char* what) {
  if (!(a == b)) {
    throw InputError(std::string(what) + ": subset or mass belongs to a different frame");
  }
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// FrameOfDiscernment

FrameOfDiscernment::FrameOfDiscernment(std::vector<std::string> elements) {
  if (elements.empty()) throw InputError("frame of discernment needs at least one element");
  if (elements.size() > kMaxFrameSize) {
    throw InputError("frame of discernment supports at most 16 elements, got " +
                     std::to_string(elements.size()));
  }
  std::set<std::string> seen;
  for (const auto& e : elements) {
    if (e.empty() || e.find(',') != std::string::npos || trim(e) != e) {
      throw InputError("invalid hypothesis name '" + e + "'");
    }
    if (!seen.insert(e).second) throw InputError("duplicate hypothesis name '" + e + "'");
  }
  elements_ = std::make_shared<const std::vector<std::string>>(std::move(elements));
}

HypothesisSubset FrameOfDiscernment::empty() const { return HypothesisSubset(*this, 0); }

HypothesisSubset FrameOfDiscernment::universe() const {
  return HypothesisSubset(*this, static_cast<std::uint32_t>(power_set_size() - 1));
}

HypothesisSubset FrameOfDiscernment::singleton(std::size_t index) const {
  if (index >= size()) throw InputError("hypothesis index out of range");
  return HypothesisSubset(*this, std::uint32_t{1} << index);
}

HypothesisSubset FrameOfDiscernment::subset(std::uint32_t bits) const {
  if (bits >= power_set_size()) throw InputError("subset encoding exceeds the frame");
  return HypothesisSubset(*this, bits);
}

HypothesisSubset FrameOfDiscernment::subset(const std::vector<std::string>& names) const {
  std::uint32_t bits = 0;
  for (const auto& name : names) {
    auto it = std::find(elements_->begin(), elements_->end(), name);
    if (it == elements_->end()) throw InputError("unknown hypothesis '" + name + "'");
    bits |= std::uint32_t{1} << static_cast<unsigned>(it - elements_->begin());
  }
  return HypothesisSubset(*this, bits);
}

HypothesisSubset FrameOfDiscernment::parse_subset(std::string_view text) const {
  std::vector<std::string> names;
  text = trim(text);
  while (!text.empty()) {
    auto comma = text.find(',');
    auto token = trim(text.substr(0, comma));
    if (token.empty()) throw InputError("empty member in subset text");
    names.emplace_back(token);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
    if (trim(text).empty()) throw InputError("trailing ',' in subset text");
  }
  return subset(names);
}

// ---------------------------------------------------------------------------
// HypothesisSubset

std::size_t HypothesisSubset::cardinality() const {
  return static_cast<std::size_t>(std::popcount(bits_));
}

bool HypothesisSubset::is_subset_of(const HypothesisSubset& other) const {
  require_same_frame(frame_, other.frame_, "is_subset_of");
  return (bits_ & ~other.bits_) == 0;
}

HypothesisSubset HypothesisSubset::complement() const {
  return HypothesisSubset(frame_, frame_.universe().bits() & ~bits_);
}

HypothesisSubset HypothesisSubset::intersect(const HypothesisSubset& other) const {
  require_same_frame(frame_, other.frame_, "intersect");
  return HypothesisSubset(frame_, bits_ & other.bits_);
}

HypothesisSubset HypothesisSubset::unite(const HypothesisSubset& other) const {
  require_same_frame(frame_, other.frame_, "unite");
  return HypothesisSubset(frame_, bits_ | other.bits_);
}

std::vector<std::string> HypothesisSubset::member_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < frame_.size(); ++i) {
    if (contains(i)) out.push_back(frame_.element(i));
  }
  return out;
}

std::string HypothesisSubset::to_string() const {
  std::string out;
  for (const auto& name : member_names()) {
    if (!out.empty()) out += ',';
    out += name;
  }
  return out;
}

std::vector<HypothesisSubset> power_set(const FrameOfDiscernment& frame) {
  std::vector<HypothesisSubset> out;
  out.reserve(frame.power_set_size());
  for (std::uint32_t bits = 0; bits < frame.power_set_size(); ++bits) {
    out.push_back(frame.subset(bits));
  }
  return out;
}

// ---------------------------------------------------------------------------
// MassFunction

double MassFunction::operator()(const HypothesisSubset& x) const {
  require_same_frame(frame_, x.frame(), "mass lookup");
  return masses_[x.bits()];
}

std::vector<HypothesisSubset> MassFunction::focal_sets() const {
  std::vector<HypothesisSubset> out;
  for (std::uint32_t bits = 0; bits < masses_.size(); ++bits) {
    if (masses_[bits] != 0.0) out.push_back(frame_.subset(bits));
  }
  return out;
}

double MassFunction::total() const {
  double sum = 0.0;
  for (double v : masses_) sum += v;
  return sum;
}

MassFunction MassFunction::from_dense(FrameOfDiscernment frame, std::vector<double> masses) {
  if (masses.size() != frame.power_set_size()) {
    throw InputError("dense mass vector has the wrong length");
  }
  double sum = 0.0;
  for (double v : masses) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0 + kInternalSumTolerance) {
      throw ComputationError("mass value outside [0, 1]: " + format_double(v));
    }
    sum += v;
  }
  if (masses[0] != 0.0) throw ComputationError("mass assigned to the empty set");
  if (std::abs(sum - 1.0) > kInternalSumTolerance) {
    throw ComputationError("masses sum to " + format_double(sum) + ", expected 1");
  }
  for (double& v : masses) v = std::min(v, 1.0);
  return MassFunction(std::move(frame), std::move(masses));
}

MassFunction make_mass(const FrameOfDiscernment& frame,
                       const std::vector<MassAssignment>& assignments, bool normalize) {
  std::vector<double> dense(frame.power_set_size(), 0.0);
  for (const auto& [subset, value] : assignments) {
    require_same_frame(frame, subset.frame(), "make_mass");
    if (!std::isfinite(value)) throw InputError("mass value is not finite");
    if (value < 0.0) throw InputError("negative mass " + format_double(value));
    dense[subset.bits()] += value;
  }
  double sum = 0.0;
  for (double v : dense) sum += v;

  if (normalize) {
    if (!(sum > 0.0)) throw InputError("cannot normalize masses with zero total");
    if (dense[0] != 0.0) throw InputError("mass assigned to the empty set");
    for (double& v : dense) v /= sum;
  } else {
    if (dense[0] != 0.0) throw InputError("mass assigned to the empty set");
    if (std::abs(sum - 1.0) > kInputSumTolerance) {
      throw InputError("masses sum to " + format_double(sum) + ", expected 1");
    }
    // Rounded-percentage inputs are pulled onto the unit simplex so that the
    // stricter internal invariant holds; exact inputs are left untouched.
    if (std::abs(sum - 1.0) > kInternalSumTolerance) {
      for (double& v : dense) v /= sum;
    }
  }
  for (double v : dense) {
    if (v > 1.0) throw InputError("mass value above 1: " + format_double(v));
  }
  return MassFunction::from_dense(frame, std::move(dense));
}

MassFunction vacuous_mass(const FrameOfDiscernment& frame) {
  std::vector<double> dense(frame.power_set_size(), 0.0);
  dense.back() = 1.0;
  return MassFunction::from_dense(frame, std::move(dense));
}

// ---------------------------------------------------------------------------
// Belief functions

double belief(const MassFunction& m, const HypothesisSubset& x) {
  require_same_frame(m.frame(), x.frame(), "belief");
  const auto& dense = m.dense();
  const std::uint32_t target = x.bits();
  double sum = 0.0;
  // Walk every nonempty submask of the target.
  for (std::uint32_t y = target; y != 0; y = (y - 1) & target) sum += dense[y];
  return sum;
}

double plausibility(const MassFunction& m, const HypothesisSubset& x) {
  require_same_frame(m.frame(), x.frame(), "plausibility");
  const auto& dense = m.dense();
  const std::uint32_t target = x.bits();
  // Bel(X) plus the sets that straddle X, so Pls >= Bel holds exactly in
  // floating point rather than up to summation order.
  double straddling = 0.0;
  for (std::uint32_t y = 1; y < dense.size(); ++y) {
    if ((y & target) != 0 && (y & ~target) != 0) straddling += dense[y];
  }
  return belief(m, x) + straddling;
}

BeliefInterval confidence_interval(const MassFunction& m, const HypothesisSubset& x) {
  BeliefInterval ci{belief(m, x), plausibility(m, x)};
  ci.bel = std::min(ci.bel, 1.0);
  ci.pls = std::clamp(ci.pls, ci.bel, 1.0);
  return ci;
}

// ---------------------------------------------------------------------------
// Combination

namespace {

struct Focal {
  std::uint32_t bits;
  double mass;
};

std::vector<Focal> focal_list(const MassFunction& m) {
  std::vector<Focal> out;
  const auto& dense = m.dense();
  for (std::uint32_t bits = 1; bits < dense.size(); ++bits) {
    if (dense[bits] != 0.0) out.push_back({bits, dense[bits]});
  }
  return out;
}

}  // namespace

MassFunction combine_conjunctive(const MassFunction& m1, const MassFunction& m2) {
  require_same_frame(m1.frame(), m2.frame(), "combine_conjunctive");
  std::vector<double> acc(m1.frame().power_set_size(), 0.0);
  double conflict = 0.0;
  const auto f1 = focal_list(m1);
  const auto f2 = focal_list(m2);
  for (const auto& a : f1) {
    for (const auto& b : f2) {
      const double product = a.mass * b.mass;
      const std::uint32_t meet = a.bits & b.bits;
      if (meet == 0) {
        conflict += product;
      } else {
        acc[meet] += product;
      }
    }
  }
  if (conflict >= 1.0 - kTotalConflictTolerance) {
    throw ComputationError("total conflict between mass functions (K = 1); "
                           "Dempster combination is undefined");
  }
  const double scale = 1.0 - conflict;
  for (double& v : acc) v /= scale;
  return MassFunction::from_dense(m1.frame(), std::move(acc));
}

MassFunction combine_disjunctive(const MassFunction& m1, const MassFunction& m2) {
  require_same_frame(m1.frame(), m2.frame(), "combine_disjunctive");
  std::vector<double> acc(m1.frame().power_set_size(), 0.0);
  const auto f1 = focal_list(m1);
  const auto f2 = focal_list(m2);
  for (const auto& a : f1) {
    for (const auto& b : f2) acc[a.bits | b.bits] += a.mass * b.mass;
  }
  return MassFunction::from_dense(m1.frame(), std::move(acc));
}

HypothesisSubset argmax_subset(const MassFunction& m) {
  const auto& dense = m.dense();
  std::uint32_t best = 0;
  double best_mass = 0.0;
  for (std::uint32_t bits = 1; bits < dense.size(); ++bits) {
    const double v = dense[bits];
    if (v <= 0.0) continue;
    if (best == 0 || v > best_mass ||
        (v == best_mass && std::popcount(bits) < std::popcount(best))) {
      best = bits;
      best_mass = v;
    }
  }
  if (best == 0) throw ComputationError("argmax_subset: mass function has no focal set");
  return m.frame().subset(best);
}

// ---------------------------------------------------------------------------
// Text form

std::string to_text(const MassFunction& m) {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (const auto& subset : m.focal_sets()) {
    if (!first) out << ", ";
    first = false;
    out << '"' << subset.to_string() << "\": " << format_double(m(subset));
  }
  out << '}';
  return out.str();
}

MassFunction parse_mass(const FrameOfDiscernment& frame, std::string_view text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("mass text is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("mass text must be a JSON object");
  std::vector<MassAssignment> assignments;
  for (const auto& [key, value] : doc.items()) {
    if (!value.is_number()) throw InputError("mass for '" + key + "' is not a number");
    assignments.emplace_back(frame.parse_subset(key), value.get<double>());
  }
  return make_mass(frame, assignments, false);
}

}  // namespace evifuse::evidence
