#include "wsim/postselect.hpp"

#include <cmath>
#include <numbers>

#include "json.hpp"
#include "wsim/elements.hpp"

namespace wsim {

namespace {

const ModeConstraint kUnconstrained{};

bool counts_match(const ModeConstraint& c, int n_h, int n_v) {
  switch (c.kind) {
    case ModeConstraint::Kind::OneAny:
      return n_h + n_v == 1;
    case ModeConstraint::Kind::Vacuum:
      return n_h + n_v == 0;
    case ModeConstraint::Kind::Exact:
      if (c.exact_h && n_h != *c.exact_h) return false;
      if (c.exact_v && n_v != *c.exact_v) return false;
      return true;
    case ModeConstraint::Kind::Unconstrained:
      return true;
  }
  return true;
}

// Threshold (non-resolving) detectors only see "click or no click" per
// spatial mode; exact constraints still read detected counts.
bool detected_match(const ModeConstraint& c, bool resolving, int n_h, int n_v) {
  if (c.kind == ModeConstraint::Kind::OneAny && !resolving) {
    return n_h + n_v >= 1;
  }
  return counts_match(c, n_h, n_v);
}

ModeConstraint constraint_for(const DetectionPattern& pattern, const std::string& spatial) {
  auto it = pattern.constraints.find(spatial);
  if (it != pattern.constraints.end()) return it->second;
  ModeConstraint c;
  c.kind = pattern.unlisted;
  return c;
}

}  // namespace

DetectionPattern DetectionPattern::one_per_mode(const std::vector<std::string>& modes) {
  DetectionPattern pattern;
  for (const auto& m : modes) pattern.constraints[m] = ModeConstraint::one_any();
  pattern.unlisted = ModeConstraint::Kind::Vacuum;
  return pattern;
}

DetectionPattern DetectionPattern::from_json(const std::string& text,
                                             const Registry& registry) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid pattern JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw ParseError("pattern JSON must be an object of mode constraints");
  }
  DetectionPattern pattern;
  for (const auto& [key, value] : j.items()) {
    std::string spatial = key;
    if (!registry.has_spatial(spatial) && !spatial.empty() && spatial.back() == 'p') {
      std::string primed = spatial.substr(0, spatial.size() - 1) + "'";
      if (registry.has_spatial(primed)) spatial = primed;
    }
    if (!registry.has_spatial(spatial)) {
      throw ParseError("pattern refers to unknown mode '" + key + "'");
    }
    if (value.is_string()) {
      std::string s = value.get<std::string>();
      if (s == "one_any") {
        pattern.constraints[spatial] = ModeConstraint::one_any();
      } else if (s == "vacuum") {
        pattern.constraints[spatial] = ModeConstraint::vacuum();
      } else if (s == "unconstrained") {
        pattern.constraints[spatial] = ModeConstraint{};
      } else {
        throw ParseError("unknown constraint '" + s + "' for mode '" + key + "'");
      }
    } else if (value.is_object()) {
      std::optional<int> h, v;
      if (value.contains("H")) h = value["H"].get<int>();
      if (value.contains("V")) v = value["V"].get<int>();
      pattern.constraints[spatial] = ModeConstraint::exact(h, v);
    } else {
      throw ParseError("constraint for mode '" + key + "' must be a string or object");
    }
  }
  return pattern;
}

PostselectionResult project(const FockState& state, const DetectionPattern& pattern) {
  const Registry& reg = *state.registry();
  for (const auto& [spatial, c] : pattern.constraints) {
    (void)c;
    if (!reg.has_spatial(spatial)) {
      throw RegistryError("pattern refers to unknown mode '" + spatial + "'");
    }
  }

  std::vector<ModeConstraint> per_spatial;
  std::vector<std::pair<std::size_t, std::size_t>> hv_index;
  per_spatial.reserve(reg.spatial_count());
  for (const auto& s : reg.spatial_labels()) {
    per_spatial.push_back(constraint_for(pattern, s));
    hv_index.emplace_back(reg.index_of(s, Polarization::H),
                          reg.index_of(s, Polarization::V));
  }

  FockState kept(state.registry());
  double prob = 0.0;
  for (const auto& [occ, amp] : state.terms()) {
    bool ok = true;
    for (std::size_t s = 0; s < per_spatial.size(); ++s) {
      if (!counts_match(per_spatial[s], occ.n[hv_index[s].first],
                        occ.n[hv_index[s].second])) {
        ok = false;
        break;
      }
    }
    if (ok) {
      kept.set_amplitude(occ, amp);
      prob += std::norm(amp);
    }
  }

  PostselectionResult result;
  if (prob < 1e-30) {
    result.probability = 0.0;
    return result;
  }
  result.probability = prob;
  result.conditional = normalize(kept).first;
  return result;
}

PostselectionResult trigger_select(const PostselectionResult& result,
                                   const std::string& trigger_mode,
                                   TriggerOutcome outcome, bool rotate_on_h,
                                   const std::vector<std::string>& signal_modes) {
  if (result.is_zero()) {
    return PostselectionResult{};
  }
  const FockState& state = *result.conditional;
  const Registry& reg = *state.registry();
  if (!reg.has_spatial(trigger_mode)) {
    throw RegistryError("trigger mode '" + trigger_mode + "' is absent");
  }
  std::size_t th = reg.index_of(trigger_mode, Polarization::H);
  std::size_t tv = reg.index_of(trigger_mode, Polarization::V);
  std::size_t want = outcome == TriggerOutcome::D1V ? tv : th;
  std::size_t other = outcome == TriggerOutcome::D1V ? th : tv;

  FockState kept(state.registry());
  double branch = 0.0;
  for (const auto& [occ, amp] : state.terms()) {
    if (occ.n[want] == 1 && occ.n[other] == 0) {
      Occupation stripped = occ;
      stripped.n[want] = 0;
      kept.set_amplitude(stripped, amp);
      branch += std::norm(amp);
    }
  }

  PostselectionResult out;
  if (branch < 1e-30) {
    return out;
  }
  FockState conditional = normalize(kept).first;
  conditional = restrict_to(conditional, make_registry(signal_modes));
  if (outcome == TriggerOutcome::D1H && rotate_on_h) {
    for (const auto& m : signal_modes) {
      conditional = apply_rotator(conditional, RotatorSpec{m, std::numbers::pi / 2});
    }
  }
  out.probability = result.probability * branch;
  out.conditional = std::move(conditional);
  return out;
}

double threshold_outcome_probability(const FockState& state,
                                     const DetectorModel& detectors,
                                     const DetectionPattern& pattern) {
  if (!(detectors.efficiency >= 0.0 && detectors.efficiency <= 1.0)) {
    throw ElementError("detector efficiency must lie in [0, 1]");
  }
  const Registry& reg = *state.registry();
  const double eta = detectors.efficiency;

  // Spatial modes worth dilating: observed by the pattern and actually
  // holding photons in some term.
  std::vector<bool> occupied(reg.spatial_count(), false);
  for (const auto& [occ, amp] : state.terms()) {
    (void)amp;
    for (std::size_t s = 0; s < reg.spatial_count(); ++s) {
      const auto& label = reg.spatial_labels()[s];
      if (occ.n[reg.index_of(label, Polarization::H)] ||
          occ.n[reg.index_of(label, Polarization::V)]) {
        occupied[s] = true;
      }
    }
  }
  std::vector<std::string> lossy;
  for (std::size_t s = 0; s < reg.spatial_count(); ++s) {
    const auto& label = reg.spatial_labels()[s];
    if (occupied[s] && eta < 1.0 &&
        constraint_for(pattern, label).kind != ModeConstraint::Kind::Unconstrained) {
      lossy.push_back(label);
    }
  }

  FockState observed = state;
  if (!lossy.empty()) {
    std::vector<std::string> extended = reg.spatial_labels();
    for (const auto& label : lossy) extended.push_back("loss:" + label);
    RegistryPtr ext = make_registry(extended);
    ModeMap loss = ModeMap::identity(ext);
    double keep = std::sqrt(eta);
    double leak = std::sqrt(1.0 - eta);
    for (const auto& label : lossy) {
      for (Polarization pol : {Polarization::H, Polarization::V}) {
        std::size_t t = ext->index_of(label, pol);
        std::size_t x = ext->index_of("loss:" + label, pol);
        loss.set(t, t, {keep, 0.0});
        loss.set(x, t, {leak, 0.0});
        loss.set(t, x, {leak, 0.0});
        loss.set(x, x, {-keep, 0.0});
      }
    }
    observed = apply_mode_map(embed(state, ext), loss);
  }

  const Registry& obs_reg = *observed.registry();
  std::vector<ModeConstraint> per_spatial;
  std::vector<std::pair<std::size_t, std::size_t>> hv_index;
  for (const auto& s : reg.spatial_labels()) {
    per_spatial.push_back(constraint_for(pattern, s));
    hv_index.emplace_back(obs_reg.index_of(s, Polarization::H),
                          obs_reg.index_of(s, Polarization::V));
  }

  double prob = 0.0;
  for (const auto& [occ, amp] : observed.terms()) {
    bool ok = true;
    for (std::size_t s = 0; s < per_spatial.size(); ++s) {
      if (!detected_match(per_spatial[s], detectors.photon_number_resolving,
                          occ.n[hv_index[s].first], occ.n[hv_index[s].second])) {
        ok = false;
        break;
      }
    }
    if (ok) prob += std::norm(amp);
  }
  return prob;
}

}  // namespace wsim
