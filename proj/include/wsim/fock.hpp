#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wsim {

using Complex = std::complex<double>;

// Amplitudes below this magnitude are treated as double-precision noise
// and dropped from sparse state maps.
inline constexpr double kAmplitudeEpsilon = 1e-15;

// Hard cap on the number of polarization-resolved modes in one registry.
// Enough for all built-in schemes plus loss/attenuator dilation modes.
inline constexpr std::size_t kMaxModes = 24;

struct RegistryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateStateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ElementError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Polarization : std::uint8_t { H = 0, V = 1 };

inline char polarization_char(Polarization p) {
  return p == Polarization::H ? 'H' : 'V';
}

// One polarization-resolved optical mode: a spatial path plus H or V.
struct ModeLabel {
  std::string spatial;
  Polarization pol;

  friend bool operator==(const ModeLabel&, const ModeLabel&) = default;
};

// Ordered list of modes shared by all states of one circuit. Spatial labels
// are opaque strings (the schemes use the names 0, 1, 1', 2, 2', 3, 3');
// each spatial label contributes an H mode followed by a V mode.
class Registry {
 public:
  explicit Registry(std::vector<std::string> spatial_labels);

  std::size_t size() const { return modes_.size(); }
  std::size_t spatial_count() const { return spatials_.size(); }

  const ModeLabel& mode(std::size_t i) const { return modes_[i]; }
  const std::vector<std::string>& spatial_labels() const { return spatials_; }

  bool has_spatial(const std::string& spatial) const;
  // Index of (spatial, pol); throws RegistryError for unknown labels.
  std::size_t index_of(const std::string& spatial, Polarization pol) const;

  bool same_as(const Registry& other) const;

 private:
  std::vector<ModeLabel> modes_;
  std::vector<std::string> spatials_;
  std::map<std::string, std::size_t> base_;  // spatial -> index of its H mode
};

using RegistryPtr = std::shared_ptr<const Registry>;

RegistryPtr make_registry(std::vector<std::string> spatial_labels);

// Photon counts per registry mode, zero-padded to kMaxModes so that the
// default lexicographic ordering matches registry order.
struct Occupation {
  std::array<std::uint8_t, kMaxModes> n{};

  auto operator<=>(const Occupation&) const = default;

  int total() const {
    int t = 0;
    for (auto c : n) t += c;
    return t;
  }
};

Occupation occupation_from_counts(const Registry& registry,
                                  const std::vector<int>& counts);
std::vector<int> counts_of(const Registry& registry, const Occupation& occ);

// Sparse bosonic state: occupation vector -> complex amplitude. Basis kets
// are the pre-normalized number states |n>; all sqrt(n!) bookkeeping lives
// in element application, not in storage.
class FockState {
 public:
  using TermMap = std::map<Occupation, Complex>;

  FockState() = default;
  explicit FockState(RegistryPtr registry) : registry_(std::move(registry)) {}

  const RegistryPtr& registry() const { return registry_; }
  const TermMap& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  Complex amplitude(const Occupation& occ) const;
  double norm_sq() const;

  void set_amplitude(const Occupation& occ, Complex amp);
  void add_amplitude(const Occupation& occ, Complex amp);
  void prune(double eps = kAmplitudeEpsilon);

 private:
  RegistryPtr registry_;
  TermMap terms_;
};

// Single-term normalized number state with amplitude 1 on `counts`.
FockState make_number_state(RegistryPtr registry, const std::vector<int>& counts);

// <a|b>, conjugate-linear in `a`. Registries must match.
Complex inner_product(const FockState& a, const FockState& b);

// Linear combination sum_i c_i |psi_i>; prunes, does not normalize.
FockState scale_add(const std::vector<std::pair<Complex, FockState>>& parts);

// Returns the normalized state and the original squared norm.
std::pair<FockState, double> normalize(const FockState& state);

// Re-expresses `state` on a superset registry (missing modes -> vacuum).
FockState embed(const FockState& state, RegistryPtr target);

// Re-expresses `state` on a subset registry; every term must have zero
// photons in the dropped modes.
FockState restrict_to(const FockState& state, RegistryPtr target);

// One line per term: `<counts as comma list> <re> <im>`, lexicographic in
// the occupation vector, 17 significant digits.
void dump_state(const FockState& state, std::ostream& os);

// Round-trip-exact decimal formatting (17 significant digits).
std::string format_g17(double value);

}  // namespace wsim
