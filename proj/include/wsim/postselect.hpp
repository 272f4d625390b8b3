#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wsim/fock.hpp"

namespace wsim {

// Per-spatial-mode detection constraint. Exact constraints may pin the H
// count, the V count, or both; OneAny means one photon of either
// polarization; Vacuum means no photons at all.
struct ModeConstraint {
  enum class Kind { OneAny, Vacuum, Exact, Unconstrained };
  Kind kind = Kind::Unconstrained;
  std::optional<int> exact_h;
  std::optional<int> exact_v;

  static ModeConstraint one_any() { return {Kind::OneAny, {}, {}}; }
  static ModeConstraint vacuum() { return {Kind::Vacuum, {}, {}}; }
  static ModeConstraint exact(std::optional<int> h, std::optional<int> v) {
    return {Kind::Exact, h, v};
  }
};

// Detection pattern over spatial modes. Modes not listed default to
// `unlisted` (vacuum for the scheme patterns, so loss/aux modes are
// automatically required to be empty).
struct DetectionPattern {
  std::map<std::string, ModeConstraint> constraints;
  ModeConstraint::Kind unlisted = ModeConstraint::Kind::Vacuum;

  // One photon per listed spatial mode, vacuum everywhere else.
  static DetectionPattern one_per_mode(const std::vector<std::string>& modes);

  // JSON object {"1":"one_any","2":"vacuum",...}; a trailing "p" in a key
  // is accepted as an alias for a prime (3p == 3').
  static DetectionPattern from_json(const std::string& text, const Registry& registry);
};

struct PostselectionResult {
  double probability = 0.0;
  // Absent when the pattern has zero probability.
  std::optional<FockState> conditional;

  bool is_zero() const { return !conditional.has_value(); }
};

struct DetectorModel {
  double efficiency = 1.0;
  bool photon_number_resolving = true;
};

enum class TriggerOutcome { D1V, D1H };

// Projects onto the detection pattern. Probability is the squared norm of
// the projected component; the conditional state is its renormalization.
PostselectionResult project(const FockState& state, const DetectionPattern& pattern);

// Measures the polarization of the single photon in `trigger_mode`,
// strips that mode (and any other mode outside `signal_modes`, all of
// which must be in vacuum), and optionally rotates every signal mode by
// 90 degrees on the D1H outcome. The returned probability is cumulative.
PostselectionResult trigger_select(const PostselectionResult& result,
                                   const std::string& trigger_mode,
                                   TriggerOutcome outcome, bool rotate_on_h,
                                   const std::vector<std::string>& signal_modes);

// Probability that detectors with efficiency `eta` report an outcome
// consistent with `pattern`. Loss is applied by unitary dilation into
// per-mode loss channels; lost photons are summed over exactly. Threshold
// (non-resolving) detectors read OneAny as "at least one detected photon".
double threshold_outcome_probability(const FockState& state,
                                     const DetectorModel& detectors,
                                     const DetectionPattern& pattern);

}  // namespace wsim
