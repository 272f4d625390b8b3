#pragma once

#include <array>
#include <numbers>
#include <optional>
#include <vector>

#include "wsim/postselect.hpp"
#include "wsim/schemes.hpp"

namespace wsim {

// Amplitudes (c1, c2, c3) on the three W basis terms, in the order
// (2H 3H 3'V), (2H 3V 3'H), (2V 3H 3'H) for the V flavor; the H flavor
// swaps H and V in every ket.
struct WTarget {
  std::array<Complex, 3> c{Complex{1.0 / std::numbers::sqrt3, 0.0},
                           Complex{1.0 / std::numbers::sqrt3, 0.0},
                           Complex{1.0 / std::numbers::sqrt3, 0.0}};

  static WTarget equal_weight();
  // Normalizes arbitrary amplitudes; throws DegenerateStateError on zero norm.
  static WTarget normalized(Complex c1, Complex c2, Complex c3);

  void validate() const;  // |c1|^2+|c2|^2+|c3|^2 = 1 within 1e-12
};

enum class WFlavor { V, H };

// Target state on a registry that contains the spatial modes 2, 3, 3'.
FockState w_target_state(const WTarget& target, const RegistryPtr& registry,
                         WFlavor flavor = WFlavor::V);

// |<target|state>|^2; invariant under global phase of either argument.
double fidelity(const FockState& state, const WTarget& target,
                WFlavor flavor = WFlavor::V);

enum class TriggerPolicy { D1V, D1HRotated, Both };

struct TriggerBranch {
  double cumulative_probability = 0.0;  // source x pattern x branch
  std::optional<FockState> conditional;  // on the signal-mode registry
};

struct CircuitOutcome {
  double pattern_probability = 0.0;   // one-photon-per-mode projection
  double overall_probability = 0.0;   // x source_probability
  std::optional<FockState> postselected;        // full registry, normalized
  std::optional<FockState> conditional_signal;  // trigger-free circuits
  std::optional<TriggerBranch> d1v;
  std::optional<TriggerBranch> d1h;          // polarization projected only
  std::optional<TriggerBranch> d1h_rotated;  // plus 90-degree rotators
};

// Evolves the circuit, post-selects one photon per signal (+trigger) mode,
// and resolves both trigger branches when the circuit has a trigger.
CircuitOutcome simulate_circuit(const Circuit& circuit);

// The printed success-probability formulas, evaluated verbatim. Throws if
// called with a nonzero polarization perturbation.
double closed_form_probability(SchemeKind kind, const SchemeParams& params,
                               const std::optional<PerturbationSpec>& perturbation = {});

struct OptimizationResult {
  SchemeParams best_params;
  double best_value = 0.0;
  std::vector<std::pair<std::array<double, 3>, double>> trace;  // improvements
};

struct OptimizeOptions {
  int grid_resolution = 64;
  int jobs = 1;
  int max_refine_iterations = 600;
};

// Deterministic derivative-free maximization of the simulated overall
// probability: coarse grid scan followed by Nelder-Mead refinement.
OptimizationResult optimize_probability(
    SchemeKind kind,
    const std::array<std::array<double, 2>, 3>& bounds = {{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}},
    const OptimizeOptions& options = {});

// Fidelity of the post-selected conditional state to the equal-weight W
// target with reflectivities r_{kL}^2 = (r_k^opt)^2 + delta_{kL}.
double fidelity_at_delta(SchemeKind kind, const std::array<double, 3>& delta_h,
                         const std::array<double, 3>& delta_v,
                         TriggerPolicy policy = TriggerPolicy::D1V);

// Symmetric probe: delta_kH = +delta_k/2, delta_kV = -delta_k/2.
double fidelity_at_symmetric_delta(SchemeKind kind, const std::array<double, 3>& delta,
                                   TriggerPolicy policy = TriggerPolicy::D1V);

// Central finite-difference Hessian of the fidelity over (delta_1, delta_2,
// delta_3) at the scheme optimum. Steps below 1e-5 are rejected.
std::array<std::array<double, 3>, 3> fidelity_hessian(SchemeKind kind,
                                                      TriggerPolicy policy = TriggerPolicy::D1V,
                                                      double step = 1e-3);

// Least-squares quadratic fit of fidelity samples over (delta_2, delta_3):
// F = c0 + b2 d2 + b3 d3 + a22 d2^2 + a23 d2 d3 + a33 d3^2.
struct QuadraticFit {
  double c0 = 0.0, b2 = 0.0, b3 = 0.0;
  double a22 = 0.0, a23 = 0.0, a33 = 0.0;
};

struct ScanSample {
  double d2 = 0.0, d3 = 0.0;
  double fidelity = 0.0;
  bool feasible = true;
};

QuadraticFit fit_quadratic(const std::vector<ScanSample>& samples);

// Attenuator and phase settings that turn the Scheme I output into an
// arbitrary W-class target, with max attenuation 1 to maximize yield.
struct DesignResult {
  // Indexed by signal mode {2, 3, 3'} then polarization {H, V}.
  std::array<std::array<double, 2>, 3> attenuation;
  std::array<double, 3> bps_theta;  // extra V phase per signal mode
  double predicted_probability = 0.0;
  Circuit circuit;  // Scheme I plus the designed attenuators and shifters
};

DesignResult design_w_class(const WTarget& target);

struct YieldModel {
  double gamma = 1e-4;          // pair-generation rate per pulse
  double sps_rate = 0.4;        // single photons per pulse per SPS
  double stimulated_gain = 16.0;
  double ghz_reference = 3.0 / 8.0;
};

struct ContaminationReport {
  double signal_rate = 0.0;        // gamma^2 x two-pair acceptance
  double false_accept_rate = 0.0;  // gamma^3 x three-pair acceptance
  double ratio = 0.0;
  double generation_ratio = 0.0;   // three-pair vs two-pair weight = gamma
};

// Threshold-detection false accepts from three-pair emission, relative to
// the two-pair signal. PDC schemes only.
ContaminationReport contamination_estimate(SchemeKind kind, const YieldModel& model,
                                           const DetectorModel& detectors);

struct YieldReport {
  double w_per_two_pair = 0.0;         // 3/32
  double ghz_per_two_pair = 0.0;       // 3/8
  double ghz_ratio = 0.0;              // 1/4
  double stimulated_gain = 0.0;        // 16
  double sps_three_photon_rate = 0.0;  // 0.4^3
  double sps_w_rate = 0.0;             // x 3/32 (symmetric splitters)
  double sps_w_rate_best = 0.0;        // x the numerical optimum of the formula
};

YieldReport yield_report(const YieldModel& model);

}  // namespace wsim
