#pragma once

// Dempster-Shafer evidence engine over small finite frames of discernment.
//
// A frame holds up to 16 named hypotheses. Subsets are encoded as inclusion
// bit vectors (bit i set <=> element i is a member), which also defines the
// canonical enumeration order of the power set. Mass functions are stored
// densely over all 2^n subsets; combination only iterates focal sets.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evifuse::evidence {

inline constexpr std::size_t kMaxFrameSize = 16;

// Tolerance on the mass sum of caller-supplied assignments.
inline constexpr double kInputSumTolerance = 1e-6;
// Tolerance on the mass sum of anything produced internally.
inline constexpr double kInternalSumTolerance = 1e-9;
// Conflict values this close to 1 make Dempster's rule undefined.
inline constexpr double kTotalConflictTolerance = 1e-12;

class HypothesisSubset;

class FrameOfDiscernment {
 public:
  // Element names must be unique, nonempty and free of ',' (the separator
  // used by the text serialization). Order is significant.
  explicit FrameOfDiscernment(std::vector<std::string> elements);

  std::size_t size() const { return elements_->size(); }
  const std::vector<std::string>& elements() const { return *elements_; }
  const std::string& element(std::size_t i) const { return elements_->at(i); }

  // Number of subsets, 2^n.
  std::size_t power_set_size() const { return std::size_t{1} << size(); }

  HypothesisSubset empty() const;
  HypothesisSubset universe() const;
  HypothesisSubset singleton(std::size_t index) const;
  HypothesisSubset subset(std::uint32_t bits) const;
  HypothesisSubset subset(const std::vector<std::string>& names) const;

  // Parses "V1,V3" (members comma-joined, any order, "" = empty set).
  HypothesisSubset parse_subset(std::string_view text) const;

  friend bool operator==(const FrameOfDiscernment& a, const FrameOfDiscernment& b) {
    return a.elements_ == b.elements_ || *a.elements_ == *b.elements_;
  }

 private:
  std::shared_ptr<const std::vector<std::string>> elements_;
};

// A subset of a particular frame. Carries its frame so that operations can
// reject subsets built against a different frame.
class HypothesisSubset {
 public:
  const FrameOfDiscernment& frame() const { return frame_; }
  std::uint32_t bits() const { return bits_; }

  bool is_empty() const { return bits_ == 0; }
  bool contains(std::size_t index) const { return (bits_ >> index) & 1u; }
  std::size_t cardinality() const;

  bool is_subset_of(const HypothesisSubset& other) const;
  HypothesisSubset complement() const;
  HypothesisSubset intersect(const HypothesisSubset& other) const;
  HypothesisSubset unite(const HypothesisSubset& other) const;

  // Member names comma-joined in frame order, e.g. "V2,V3".
  std::string to_string() const;
  std::vector<std::string> member_names() const;

  friend bool operator==(const HypothesisSubset& a, const HypothesisSubset& b) {
    return a.bits_ == b.bits_ && a.frame_ == b.frame_;
  }

 private:
  friend class FrameOfDiscernment;
  HypothesisSubset(FrameOfDiscernment frame, std::uint32_t bits)
      : frame_(std::move(frame)), bits_(bits) {}

  FrameOfDiscernment frame_;
  std::uint32_t bits_;
};

// All 2^n subsets, ascending by inclusion-vector value.
std::vector<HypothesisSubset> power_set(const FrameOfDiscernment& frame);

// Basic probability assignment. Immutable once built; every instance satisfies
// m(empty) = 0, m(X) in [0, 1] and sum = 1.
class MassFunction {
 public:
  const FrameOfDiscernment& frame() const { return frame_; }

  double operator()(const HypothesisSubset& x) const;
  double mass_at(std::uint32_t bits) const { return masses_.at(bits); }

  // Subsets with nonzero mass, ascending by encoding.
  std::vector<HypothesisSubset> focal_sets() const;
  double total() const;

  // Dense masses indexed by inclusion vector (size 2^n).
  const std::vector<double>& dense() const { return masses_; }

  // Builds a mass function from a dense vector produced by internal
  // arithmetic. Validated against kInternalSumTolerance.
  static MassFunction from_dense(FrameOfDiscernment frame, std::vector<double> masses);

 private:
  MassFunction(FrameOfDiscernment frame, std::vector<double> masses)
      : frame_(std::move(frame)), masses_(std::move(masses)) {}

  FrameOfDiscernment frame_;
  std::vector<double> masses_;
};

struct BeliefInterval {
  double bel = 0.0;
  double pls = 0.0;
};

using MassAssignment = std::pair<HypothesisSubset, double>;

// Repeated subsets accumulate. With normalize off the values must already sum
// to 1 within kInputSumTolerance; with it on they are divided by their sum.
MassFunction make_mass(const FrameOfDiscernment& frame,
                       const std::vector<MassAssignment>& assignments,
                       bool normalize = false);

// The vacuous mass m(U) = 1.
MassFunction vacuous_mass(const FrameOfDiscernment& frame);

double belief(const MassFunction& m, const HypothesisSubset& x);
double plausibility(const MassFunction& m, const HypothesisSubset& x);
BeliefInterval confidence_interval(const MassFunction& m, const HypothesisSubset& x);

// Dempster's rule: products land on A ∩ B, conflict K on empty intersections
// is renormalized away. Throws ComputationError on total conflict.
MassFunction combine_conjunctive(const MassFunction& m1, const MassFunction& m2);
// Conflict-free union rule: products land on A ∪ B.
MassFunction combine_disjunctive(const MassFunction& m1, const MassFunction& m2);

// Nonempty subset of maximal mass. Ties go to the smaller cardinality, then
// to the lower encoding.
HypothesisSubset argmax_subset(const MassFunction& m);

// {"V1": 0.3, "V2,V3": 0.7} with focal sets only, in encoding order. Values
// are printed in shortest round-trip form so parse_mass(to_text(m)) == m.
std::string to_text(const MassFunction& m);
MassFunction parse_mass(const FrameOfDiscernment& frame, std::string_view text);

}  // namespace evifuse::evidence
