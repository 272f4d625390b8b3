#pragma once

#include <string>
#include <variant>
#include <vector>

#include "wsim/fock.hpp"

namespace wsim {

// Beam splitter with one fed input port. H photons pick up no phase; a
// reflected V photon picks up phi and a transmitted one psi. Coefficients
// are real amplitudes in [0, 1] with r^2 + t^2 = 1 per polarization.
struct BeamSplitterSpec {
  std::string input;
  std::string reflected;
  std::string transmitted;
  double r_h = 0.0;
  double t_h = 1.0;
  double r_v = 0.0;
  double t_v = 1.0;
  double phi = 0.0;
  double psi = 0.0;

  static BeamSplitterSpec from_reflectivity(std::string input, std::string reflected,
                                            std::string transmitted, double r_sq,
                                            double phi = 0.0, double psi = 0.0);
  static BeamSplitterSpec from_reflectivity_hv(std::string input, std::string reflected,
                                               std::string transmitted, double r_sq_h,
                                               double r_sq_v, double phi = 0.0,
                                               double psi = 0.0);
};

// Birefringent phase shifter: V photons in `target` pick up theta_v each,
// H photons are untouched.
struct PhaseShifterSpec {
  std::string target;
  double theta_v = 0.0;
};

// Polarization rotator on one spatial mode. angle = pi/2 swaps H and V up
// to the sign convention H -> cos*H + sin*V, V -> -sin*H + cos*V.
struct RotatorSpec {
  std::string target;
  double angle = 0.0;
};

// Polarization-dependent loss, dilated to a dedicated aux spatial mode so
// the mode map stays unitary; post-selection later demands vacuum there.
struct AttenuatorSpec {
  std::string target;
  double amp_h = 1.0;
  double amp_v = 1.0;
  std::string aux;
};

using Element = std::variant<BeamSplitterSpec, PhaseShifterSpec, RotatorSpec, AttenuatorSpec>;

// Linear map on creation operators over a registry: a_col^+ -> sum_row
// u(row, col) a_row^+. Always unitary for the elements built here.
class ModeMap {
 public:
  explicit ModeMap(RegistryPtr registry);

  static ModeMap identity(RegistryPtr registry);

  const RegistryPtr& registry() const { return registry_; }
  std::size_t dim() const { return dim_; }

  Complex at(std::size_t row, std::size_t col) const { return u_[col * dim_ + row]; }
  void set(std::size_t row, std::size_t col, Complex v) { u_[col * dim_ + row] = v; }

 private:
  RegistryPtr registry_;
  std::size_t dim_;
  std::vector<Complex> u_;  // column-major
};

ModeMap to_mode_map(const BeamSplitterSpec& spec, const RegistryPtr& registry);
ModeMap to_mode_map(const PhaseShifterSpec& spec, const RegistryPtr& registry);
ModeMap to_mode_map(const RotatorSpec& spec, const RegistryPtr& registry);
ModeMap to_mode_map(const AttenuatorSpec& spec, const RegistryPtr& registry);
ModeMap to_mode_map(const Element& element, const RegistryPtr& registry);

// Genuine two-input symmetric beam splitter (both ports fed), fixed so two
// identical photons bunch into (|2,0> + |0,2>)/sqrt(2) with no extra phase:
// a_in1^+ -> (a_out1^+ + i a_out2^+)/sqrt(2), a_in2^+ -> (a_out1^+ - i a_out2^+)/sqrt(2).
ModeMap symmetric_two_input_bs(const RegistryPtr& registry, const std::string& in1,
                               const std::string& in2, const std::string& out1,
                               const std::string& out2);

// Map equal to applying `first`, then `then`.
ModeMap compose(const ModeMap& first, const ModeMap& then);

bool is_unitary(const ModeMap& map, double tol = 1e-12);

// Exact multi-photon action: substitutes each creation operator in the
// monomial expansion of every basis term and re-expands with multinomial
// and sqrt(n!) factors.
FockState apply_mode_map(const FockState& state, const ModeMap& map);

FockState apply_phase(const FockState& state, const PhaseShifterSpec& spec);
FockState apply_rotator(const FockState& state, const RotatorSpec& spec);
FockState apply_element(const FockState& state, const Element& element);

}  // namespace wsim
