#include "wsim/schemes.hpp"

#include <cmath>

#include "json.hpp"

namespace wsim {

namespace {

using Json = nlohmann::ordered_json;

void check_r_sq(double r_sq) {
  if (!(r_sq >= 0.0 && r_sq <= 1.0)) {
    throw ElementError("reflectivity r^2 must lie in [0, 1]");
  }
}

struct EffectiveReflectivities {
  std::array<double, 3> h;
  std::array<double, 3> v;
};

EffectiveReflectivities effective_r_sq(const SchemeParams& params,
                                       const std::optional<PerturbationSpec>& perturbation) {
  EffectiveReflectivities eff{};
  for (int k = 0; k < 3; ++k) {
    if (perturbation) {
      eff.h[k] = perturbation->r_opt_sq[k] + perturbation->delta_h[k];
      eff.v[k] = perturbation->r_opt_sq[k] + perturbation->delta_v[k];
    } else {
      eff.h[k] = params.r_sq[k];
      eff.v[k] = params.r_sq[k];
    }
    check_r_sq(eff.h[k]);
    check_r_sq(eff.v[k]);
  }
  return eff;
}

}  // namespace

PerturbationSpec PerturbationSpec::for_scheme(SchemeKind kind) {
  PerturbationSpec spec;
  spec.r_opt_sq = optimal_r_sq(kind);
  return spec;
}

bool PerturbationSpec::is_zero() const {
  for (int k = 0; k < 3; ++k) {
    if (delta_h[k] != 0.0 || delta_v[k] != 0.0) return false;
  }
  return true;
}

std::array<double, 3> optimal_r_sq(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::I:
      return {0.25, 1.0 / 3.0, 0.5};
    case SchemeKind::II:
    case SchemeKind::SPS:
      return {0.5, 0.5, 0.5};
  }
  throw ElementError("unknown scheme");
}

FockState pdc_source() { return pdc_source_npairs(2); }

FockState pdc_source_npairs(int n) {
  if (n < 0) {
    throw ElementError("pair count must be nonnegative");
  }
  auto registry = make_registry({"0"});
  return make_number_state(registry, {n, n});
}

SpsSource sps_source() {
  // SPS1 and SPS2 each emit an H photon into s1 and s2; they interfere on
  // the symmetric BS_1 whose outputs are mode 0 and a dump port.
  auto registry = make_registry({"s1", "s2", "0", "d"});
  FockState in = make_number_state(registry, {1, 0, 1, 0, 0, 0, 0, 0});
  ModeMap hom = symmetric_two_input_bs(registry, "s1", "s2", "0", "d");
  FockState bunched = apply_mode_map(in, hom);

  auto hom_registry = make_registry({"0", "d"});
  SpsSource out;
  out.hom_output = restrict_to(bunched, hom_registry);

  // SPS3's V photon joins mode 0 after the interference.
  std::size_t v0 = registry->index_of("0", Polarization::V);
  FockState with_v(registry);
  for (const auto& [occ, amp] : bunched.terms()) {
    Occupation occ2 = occ;
    occ2.n[v0] = 1;
    with_v.set_amplitude(occ2, amp);
  }

  // Keep the component with both H photons in mode 0.
  std::size_t h0 = registry->index_of("0", Polarization::H);
  FockState kept(registry);
  for (const auto& [occ, amp] : with_v.terms()) {
    if (occ.n[h0] == 2) kept.set_amplitude(occ, amp);
  }
  auto [conditional, prob] = normalize(kept);
  out.state = restrict_to(conditional, make_registry({"0"}));
  out.probability = prob;
  return out;
}

Circuit build_scheme_I(const SchemeParams& params,
                       const std::optional<PerturbationSpec>& perturbation) {
  EffectiveReflectivities eff = effective_r_sq(params, perturbation);
  Circuit c;
  c.registry = make_registry({"0", "1", "1'", "2", "2'", "3", "3'"});
  c.source = embed(pdc_source(), c.registry);
  c.elements.push_back(BeamSplitterSpec::from_reflectivity_hv(
      "0", "1", "1'", eff.h[0], eff.v[0], params.phi[0], params.psi[0]));
  c.elements.push_back(BeamSplitterSpec::from_reflectivity_hv(
      "1'", "2", "2'", eff.h[1], eff.v[1], params.phi[1], params.psi[1]));
  c.elements.push_back(BeamSplitterSpec::from_reflectivity_hv(
      "2'", "3", "3'", eff.h[2], eff.v[2], params.phi[2], params.psi[2]));
  if (params.compensation == Compensation::Auto) {
    c.elements.push_back(
        PhaseShifterSpec{"2", -params.phi[1] + params.psi[1] + params.psi[2]});
    c.elements.push_back(PhaseShifterSpec{"3", -params.phi[2] + params.psi[2]});
  }
  c.trigger_mode = "1";
  c.signal_modes = {"2", "3", "3'"};
  return c;
}

Circuit build_scheme_II(const SchemeParams& params,
                        const std::optional<PerturbationSpec>& perturbation) {
  EffectiveReflectivities eff = effective_r_sq(params, perturbation);
  Circuit c;
  c.registry = make_registry({"0", "A", "B", "1", "2", "3", "3'"});
  c.source = embed(pdc_source(), c.registry);
  // Mode 2 is the reflected port of BS_2: the compensation below only
  // equalizes the W_V branch phases with that assignment.
  c.elements.push_back(BeamSplitterSpec::from_reflectivity_hv(
      "0", "A", "B", eff.h[0], eff.v[0], params.phi[0], params.psi[0]));
  c.elements.push_back(BeamSplitterSpec::from_reflectivity_hv(
      "A", "2", "1", eff.h[1], eff.v[1], params.phi[1], params.psi[1]));
  c.elements.push_back(BeamSplitterSpec::from_reflectivity_hv(
      "B", "3", "3'", eff.h[2], eff.v[2], params.phi[2], params.psi[2]));
  if (params.compensation == Compensation::Auto) {
    c.elements.push_back(PhaseShifterSpec{
        "2", -params.phi[0] - params.phi[1] + params.psi[0] + params.psi[2]});
    c.elements.push_back(PhaseShifterSpec{"3", -params.phi[2] + params.psi[2]});
  }
  c.trigger_mode = "1";
  c.signal_modes = {"2", "3", "3'"};
  return c;
}

Circuit build_sps_scheme(const SchemeParams& params,
                         const std::optional<PerturbationSpec>& perturbation) {
  EffectiveReflectivities eff = effective_r_sq(params, perturbation);
  SpsSource source = sps_source();
  Circuit c;
  c.registry = make_registry({"0", "2", "2'", "3", "3'"});
  c.source = embed(source.state, c.registry);
  c.source_probability = source.probability;
  c.elements.push_back(BeamSplitterSpec::from_reflectivity_hv(
      "0", "2", "2'", eff.h[1], eff.v[1], params.phi[1], params.psi[1]));
  c.elements.push_back(BeamSplitterSpec::from_reflectivity_hv(
      "2'", "3", "3'", eff.h[2], eff.v[2], params.phi[2], params.psi[2]));
  if (params.compensation == Compensation::Auto) {
    c.elements.push_back(
        PhaseShifterSpec{"2", -params.phi[1] + params.psi[1] + params.psi[2]});
    c.elements.push_back(PhaseShifterSpec{"3", -params.phi[2] + params.psi[2]});
  }
  c.signal_modes = {"2", "3", "3'"};
  return c;
}

Circuit build_scheme(SchemeKind kind, const SchemeParams& params,
                     const std::optional<PerturbationSpec>& perturbation) {
  switch (kind) {
    case SchemeKind::I:
      return build_scheme_I(params, perturbation);
    case SchemeKind::II:
      return build_scheme_II(params, perturbation);
    case SchemeKind::SPS:
      return build_sps_scheme(params, perturbation);
  }
  throw ElementError("unknown scheme");
}

FockState evolve(const Circuit& circuit) {
  FockState state = circuit.source;
  for (const Element& element : circuit.elements) {
    state = apply_element(state, element);
  }
  return state;
}

ModeMap composed_mode_map(const Circuit& circuit) {
  ModeMap total = ModeMap::identity(circuit.registry);
  for (const Element& element : circuit.elements) {
    total = compose(total, to_mode_map(element, circuit.registry));
  }
  return total;
}

namespace {

Json element_to_json(const Element& element) {
  Json j;
  if (const auto* bs = std::get_if<BeamSplitterSpec>(&element)) {
    j["type"] = "bs";
    j["in"] = bs->input;
    j["refl"] = bs->reflected;
    j["trans"] = bs->transmitted;
    j["r2_H"] = bs->r_h * bs->r_h;
    j["r2_V"] = bs->r_v * bs->r_v;
    j["phi"] = bs->phi;
    j["psi"] = bs->psi;
  } else if (const auto* bps = std::get_if<PhaseShifterSpec>(&element)) {
    j["type"] = "bps";
    j["mode"] = bps->target;
    j["theta"] = bps->theta_v;
  } else if (const auto* rot = std::get_if<RotatorSpec>(&element)) {
    j["type"] = "rot";
    j["mode"] = rot->target;
    j["angle"] = rot->angle;
  } else if (const auto* att = std::get_if<AttenuatorSpec>(&element)) {
    j["type"] = "att";
    j["mode"] = att->target;
    j["amp_H"] = att->amp_h;
    j["amp_V"] = att->amp_v;
    j["aux"] = att->aux;
  }
  return j;
}

double require_number(const Json& j, const std::string& field) {
  if (!j.contains(field) || !j[field].is_number()) {
    throw ParseError("circuit element is missing numeric field '" + field + "'");
  }
  return j[field].get<double>();
}

std::string require_string(const Json& j, const std::string& field) {
  if (!j.contains(field) || !j[field].is_string()) {
    throw ParseError("circuit element is missing string field '" + field + "'");
  }
  return j[field].get<std::string>();
}

Element element_from_json(const Json& j) {
  std::string type = require_string(j, "type");
  if (type == "bs") {
    return BeamSplitterSpec::from_reflectivity_hv(
        require_string(j, "in"), require_string(j, "refl"),
        require_string(j, "trans"), require_number(j, "r2_H"),
        require_number(j, "r2_V"), j.value("phi", 0.0), j.value("psi", 0.0));
  }
  if (type == "bps") {
    return PhaseShifterSpec{require_string(j, "mode"), require_number(j, "theta")};
  }
  if (type == "rot") {
    return RotatorSpec{require_string(j, "mode"), require_number(j, "angle")};
  }
  if (type == "att") {
    return AttenuatorSpec{require_string(j, "mode"), require_number(j, "amp_H"),
                          require_number(j, "amp_V"), require_string(j, "aux")};
  }
  throw ParseError("unknown circuit element type '" + type + "'");
}

}  // namespace

std::string circuit_to_json(const Circuit& circuit) {
  Json j;
  j["registry"] = circuit.registry->spatial_labels();
  Json terms = Json::array();
  for (const auto& [occ, amp] : circuit.source.terms()) {
    Json t;
    t["counts"] = counts_of(*circuit.registry, occ);
    t["re"] = amp.real();
    t["im"] = amp.imag();
    terms.push_back(t);
  }
  j["source"] = Json{{"type", "state"}, {"terms", terms}};
  j["source_probability"] = circuit.source_probability;
  Json elements = Json::array();
  for (const Element& e : circuit.elements) elements.push_back(element_to_json(e));
  j["elements"] = elements;
  j["trigger"] = circuit.trigger_mode ? Json(*circuit.trigger_mode) : Json(nullptr);
  j["signal"] = circuit.signal_modes;
  return j.dump(2);
}

Circuit circuit_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid circuit JSON: ") + e.what());
  }
  if (!j.contains("registry") || !j["registry"].is_array()) {
    throw ParseError("circuit JSON is missing the 'registry' array");
  }
  Circuit c;
  c.registry = make_registry(j["registry"].get<std::vector<std::string>>());

  if (!j.contains("source") || !j["source"].is_object()) {
    throw ParseError("circuit JSON is missing the 'source' object");
  }
  const Json& src = j["source"];
  std::string src_type = require_string(src, "type");
  if (src_type == "pdc") {
    c.source = embed(pdc_source_npairs(src.value("pairs", 2)), c.registry);
  } else if (src_type == "sps") {
    SpsSource s = sps_source();
    c.source = embed(s.state, c.registry);
    c.source_probability = s.probability;
  } else if (src_type == "state") {
    if (!src.contains("terms") || !src["terms"].is_array()) {
      throw ParseError("state source is missing the 'terms' array");
    }
    FockState state(c.registry);
    for (const Json& t : src["terms"]) {
      if (!t.contains("counts") || !t["counts"].is_array()) {
        throw ParseError("state source term is missing 'counts'");
      }
      Occupation occ =
          occupation_from_counts(*c.registry, t["counts"].get<std::vector<int>>());
      state.set_amplitude(occ, {require_number(t, "re"), t.value("im", 0.0)});
    }
    c.source = std::move(state);
  } else {
    throw ParseError("unknown source type '" + src_type + "'");
  }
  if (j.contains("source_probability")) {
    c.source_probability = require_number(j, "source_probability");
  }

  if (j.contains("elements")) {
    if (!j["elements"].is_array()) {
      throw ParseError("'elements' must be an array");
    }
    for (const Json& e : j["elements"]) {
      c.elements.push_back(element_from_json(e));
    }
  }
  if (j.contains("trigger") && !j["trigger"].is_null()) {
    c.trigger_mode = j["trigger"].get<std::string>();
    if (!c.registry->has_spatial(*c.trigger_mode)) {
      throw ParseError("trigger mode '" + *c.trigger_mode + "' is not in the registry");
    }
  }
  if (j.contains("signal")) {
    c.signal_modes = j["signal"].get<std::vector<std::string>>();
    for (const auto& m : c.signal_modes) {
      if (!c.registry->has_spatial(m)) {
        throw ParseError("signal mode '" + m + "' is not in the registry");
      }
    }
  }
  // Validate element labels against the registry up front.
  for (const Element& e : c.elements) {
    to_mode_map(e, c.registry);
  }
  return c;
}

}  // namespace wsim
