#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "wsim/elements.hpp"
#include "wsim/fock.hpp"

namespace wsim {

enum class SchemeKind { I, II, SPS };

enum class Compensation { Auto, None };

// Beam-splitter settings indexed by k = 1, 2, 3 (array slot k - 1).
// Reflectivities are intensities r_k^2; amplitudes are derived as the
// nonnegative square roots. Defaults are the Scheme I optimum.
struct SchemeParams {
  std::array<double, 3> r_sq{0.25, 1.0 / 3.0, 0.5};
  std::array<double, 3> phi{0.0, 0.0, 0.0};
  std::array<double, 3> psi{0.0, 0.0, 0.0};
  Compensation compensation = Compensation::Auto;
};

// Polarization-dependent reflectivity errors around a scheme's optimum:
// r_{kL}^2 = (r_k^opt)^2 + delta_{kL}.
struct PerturbationSpec {
  std::array<double, 3> delta_h{0.0, 0.0, 0.0};
  std::array<double, 3> delta_v{0.0, 0.0, 0.0};
  std::array<double, 3> r_opt_sq{0.25, 1.0 / 3.0, 0.5};

  static PerturbationSpec for_scheme(SchemeKind kind);
  bool is_zero() const;
};

// Scheme I optimum (1/4, 1/3, 1/2); Scheme II and SPS optimum all 1/2.
std::array<double, 3> optimal_r_sq(SchemeKind kind);

struct Circuit {
  RegistryPtr registry;
  FockState source;
  // Probability that the source state itself is prepared (1/2 for the
  // SPS source, 1 otherwise); multiplies all downstream probabilities.
  double source_probability = 1.0;
  std::vector<Element> elements;
  std::optional<std::string> trigger_mode;
  std::vector<std::string> signal_modes;
};

// |2>_0H |2>_0V, the four-photon type-II PDC emission.
FockState pdc_source();

// |n>_0H |n>_0V for the n-pair emission component.
FockState pdc_source_npairs(int n);

struct SpsSource {
  FockState state;        // |2>_0H |1>_0V on the {0} registry
  double probability;     // 1/2
  FockState hom_output;   // (|2,0> + |0,2>)/sqrt(2) on the {0, dump} registry
};

// Two H photons interfering on a symmetric beam splitter, with the
// two-H-photon output port kept and a third (V) photon joining mode 0.
SpsSource sps_source();

Circuit build_scheme_I(const SchemeParams& params,
                       const std::optional<PerturbationSpec>& perturbation = {});
Circuit build_scheme_II(const SchemeParams& params,
                        const std::optional<PerturbationSpec>& perturbation = {});
Circuit build_sps_scheme(const SchemeParams& params,
                         const std::optional<PerturbationSpec>& perturbation = {});

Circuit build_scheme(SchemeKind kind, const SchemeParams& params,
                     const std::optional<PerturbationSpec>& perturbation = {});

// Applies every element of the circuit to its source state.
FockState evolve(const Circuit& circuit);

// Single-photon matrix of the whole element chain (identity if empty).
ModeMap composed_mode_map(const Circuit& circuit);

// Circuit JSON interchange (ordered element array + source + mode roles).
std::string circuit_to_json(const Circuit& circuit);
Circuit circuit_from_json(const std::string& text);

}  // namespace wsim
