#include "wsim/elements.hpp"

#include <cmath>
#include <functional>

namespace wsim {

namespace {

constexpr int kMaxPhotonsPerMode = 34;

const double* sqrt_factorial_table() {
  static const auto table = [] {
    std::array<double, kMaxPhotonsPerMode + 1> t{};
    double f = 1.0;
    t[0] = 1.0;
    for (int i = 1; i <= kMaxPhotonsPerMode; ++i) {
      f *= i;
      t[i] = std::sqrt(f);
    }
    return t;
  }();
  return table.data();
}

double binomial(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

void check_amplitude_pair(double r, double t, const char* which) {
  if (r < 0.0 || r > 1.0 || t < 0.0 || t > 1.0) {
    throw ElementError(std::string("beam splitter ") + which +
                       " coefficients must lie in [0, 1]");
  }
  if (std::abs(r * r + t * t - 1.0) > 1e-12) {
    throw ElementError(std::string("beam splitter ") + which +
                       " coefficients violate r^2 + t^2 = 1");
  }
}

}  // namespace

BeamSplitterSpec BeamSplitterSpec::from_reflectivity(std::string input,
                                                     std::string reflected,
                                                     std::string transmitted,
                                                     double r_sq, double phi,
                                                     double psi) {
  return from_reflectivity_hv(std::move(input), std::move(reflected),
                              std::move(transmitted), r_sq, r_sq, phi, psi);
}

BeamSplitterSpec BeamSplitterSpec::from_reflectivity_hv(std::string input,
                                                        std::string reflected,
                                                        std::string transmitted,
                                                        double r_sq_h, double r_sq_v,
                                                        double phi, double psi) {
  if (r_sq_h < 0.0 || r_sq_h > 1.0 || r_sq_v < 0.0 || r_sq_v > 1.0) {
    throw ElementError("beam splitter reflectivity must lie in [0, 1]");
  }
  BeamSplitterSpec spec;
  spec.input = std::move(input);
  spec.reflected = std::move(reflected);
  spec.transmitted = std::move(transmitted);
  spec.r_h = std::sqrt(r_sq_h);
  spec.t_h = std::sqrt(1.0 - r_sq_h);
  spec.r_v = std::sqrt(r_sq_v);
  spec.t_v = std::sqrt(1.0 - r_sq_v);
  spec.phi = phi;
  spec.psi = psi;
  return spec;
}

ModeMap::ModeMap(RegistryPtr registry)
    : registry_(std::move(registry)), dim_(registry_->size()), u_(dim_ * dim_) {}

ModeMap ModeMap::identity(RegistryPtr registry) {
  ModeMap m(std::move(registry));
  for (std::size_t i = 0; i < m.dim(); ++i) m.set(i, i, {1.0, 0.0});
  return m;
}

ModeMap to_mode_map(const BeamSplitterSpec& spec, const RegistryPtr& registry) {
  check_amplitude_pair(spec.r_h, spec.t_h, "H");
  check_amplitude_pair(spec.r_v, spec.t_v, "V");
  if (!std::isfinite(spec.phi) || !std::isfinite(spec.psi)) {
    throw ElementError("beam splitter phases must be finite");
  }
  if (spec.reflected == spec.transmitted) {
    throw ElementError("beam splitter output ports must differ");
  }
  // Relabel input -> reflected, then mix (reflected, transmitted) with a
  // 2x2 unitary per polarization. The second column is a unitary
  // completion; its port is vacuum in every scheme, so only the paper's
  // column (the fed input) ever acts on photons.
  ModeMap perm = ModeMap::identity(registry);
  if (spec.input != spec.reflected) {
    std::size_t ih = registry->index_of(spec.input, Polarization::H);
    std::size_t iv = registry->index_of(spec.input, Polarization::V);
    std::size_t rh = registry->index_of(spec.reflected, Polarization::H);
    std::size_t rv = registry->index_of(spec.reflected, Polarization::V);
    perm.set(ih, ih, {0.0, 0.0});
    perm.set(rh, rh, {0.0, 0.0});
    perm.set(rh, ih, {1.0, 0.0});
    perm.set(ih, rh, {1.0, 0.0});
    perm.set(iv, iv, {0.0, 0.0});
    perm.set(rv, rv, {0.0, 0.0});
    perm.set(rv, iv, {1.0, 0.0});
    perm.set(iv, rv, {1.0, 0.0});
  }
  ModeMap mix = ModeMap::identity(registry);
  const Complex ph_r = std::polar(1.0, spec.phi);
  const Complex ph_t = std::polar(1.0, spec.psi);
  struct Block {
    Polarization pol;
    double r, t;
    Complex pr, pt;
  };
  const Block blocks[2] = {
      {Polarization::H, spec.r_h, spec.t_h, {1.0, 0.0}, {1.0, 0.0}},
      {Polarization::V, spec.r_v, spec.t_v, ph_r, ph_t},
  };
  for (const Block& b : blocks) {
    std::size_t r = registry->index_of(spec.reflected, b.pol);
    std::size_t t = registry->index_of(spec.transmitted, b.pol);
    mix.set(r, r, b.r * b.pr);
    mix.set(t, r, b.t * b.pt);
    mix.set(r, t, b.t * b.pr);
    mix.set(t, t, -b.r * b.pt);
  }
  return compose(perm, mix);
}

ModeMap to_mode_map(const PhaseShifterSpec& spec, const RegistryPtr& registry) {
  if (!std::isfinite(spec.theta_v)) {
    throw ElementError("phase shifter angle must be finite");
  }
  ModeMap m = ModeMap::identity(registry);
  std::size_t v = registry->index_of(spec.target, Polarization::V);
  m.set(v, v, std::polar(1.0, spec.theta_v));
  return m;
}

ModeMap to_mode_map(const RotatorSpec& spec, const RegistryPtr& registry) {
  if (!std::isfinite(spec.angle)) {
    throw ElementError("rotator angle must be finite");
  }
  ModeMap m = ModeMap::identity(registry);
  std::size_t h = registry->index_of(spec.target, Polarization::H);
  std::size_t v = registry->index_of(spec.target, Polarization::V);
  double c = std::cos(spec.angle);
  double s = std::sin(spec.angle);
  m.set(h, h, {c, 0.0});
  m.set(v, h, {s, 0.0});
  m.set(h, v, {-s, 0.0});
  m.set(v, v, {c, 0.0});
  return m;
}

ModeMap to_mode_map(const AttenuatorSpec& spec, const RegistryPtr& registry) {
  if (spec.amp_h < 0.0 || spec.amp_h > 1.0 || spec.amp_v < 0.0 || spec.amp_v > 1.0) {
    throw ElementError("attenuator amplitudes must lie in [0, 1]");
  }
  if (spec.aux == spec.target) {
    throw ElementError("attenuator aux mode must differ from its target");
  }
  ModeMap m = ModeMap::identity(registry);
  for (Polarization pol : {Polarization::H, Polarization::V}) {
    double a = pol == Polarization::H ? spec.amp_h : spec.amp_v;
    double s = std::sqrt(std::max(0.0, 1.0 - a * a));
    std::size_t t = registry->index_of(spec.target, pol);
    std::size_t x = registry->index_of(spec.aux, pol);
    m.set(t, t, {a, 0.0});
    m.set(x, t, {s, 0.0});
    m.set(t, x, {s, 0.0});
    m.set(x, x, {-a, 0.0});
  }
  return m;
}

ModeMap to_mode_map(const Element& element, const RegistryPtr& registry) {
  return std::visit([&](const auto& spec) { return to_mode_map(spec, registry); },
                    element);
}

ModeMap symmetric_two_input_bs(const RegistryPtr& registry, const std::string& in1,
                               const std::string& in2, const std::string& out1,
                               const std::string& out2) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  ModeMap m(registry);
  for (Polarization pol : {Polarization::H, Polarization::V}) {
    std::size_t a = registry->index_of(in1, pol);
    std::size_t b = registry->index_of(in2, pol);
    std::size_t p = registry->index_of(out1, pol);
    std::size_t q = registry->index_of(out2, pol);
    m.set(p, a, {inv_sqrt2, 0.0});
    m.set(q, a, {0.0, inv_sqrt2});
    m.set(p, b, {inv_sqrt2, 0.0});
    m.set(q, b, {0.0, -inv_sqrt2});
    // Unitary completion for the (vacuum) output labels used as inputs.
    m.set(a, p, {1.0, 0.0});
    m.set(b, q, {1.0, 0.0});
  }
  // Untouched modes stay identity.
  for (std::size_t i = 0; i < registry->size(); ++i) {
    const ModeLabel& mode = registry->mode(i);
    if (mode.spatial != in1 && mode.spatial != in2 && mode.spatial != out1 &&
        mode.spatial != out2) {
      m.set(i, i, {1.0, 0.0});
    }
  }
  return m;
}

ModeMap compose(const ModeMap& first, const ModeMap& then) {
  if (!first.registry()->same_as(*then.registry())) {
    throw RegistryError("composing mode maps over different registries");
  }
  std::size_t n = first.dim();
  ModeMap out(first.registry());
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t k = 0; k < n; ++k) {
      Complex f = first.at(k, c);
      if (f == Complex{0.0, 0.0}) continue;
      for (std::size_t r = 0; r < n; ++r) {
        Complex t = then.at(r, k);
        if (t == Complex{0.0, 0.0}) continue;
        out.set(r, c, out.at(r, c) + t * f);
      }
    }
  }
  return out;
}

bool is_unitary(const ModeMap& map, double tol) {
  std::size_t n = map.dim();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Complex dot{0.0, 0.0};
      for (std::size_t k = 0; k < n; ++k) {
        dot += std::conj(map.at(k, i)) * map.at(k, j);
      }
      Complex expect = i == j ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
      if (std::abs(dot - expect) > tol) return false;
    }
  }
  return true;
}

namespace {

struct ColumnEntry {
  std::uint8_t row;
  Complex u;
};

// Distributes `remaining` photons of one source mode over the nonzero
// column entries, accumulating multinomial coefficients and powers of u.
void distribute(const std::vector<ColumnEntry>& entries, std::size_t entry_idx,
                int remaining, Occupation& occ, Complex coeff,
                const std::function<void(const Occupation&, Complex)>& emit) {
  if (entry_idx + 1 == entries.size()) {
    const ColumnEntry& e = entries[entry_idx];
    Complex c = coeff;
    for (int i = 0; i < remaining; ++i) c *= e.u;
    occ.n[e.row] = static_cast<std::uint8_t>(occ.n[e.row] + remaining);
    emit(occ, c);
    occ.n[e.row] = static_cast<std::uint8_t>(occ.n[e.row] - remaining);
    return;
  }
  const ColumnEntry& e = entries[entry_idx];
  Complex upow{1.0, 0.0};
  for (int k = 0; k <= remaining; ++k) {
    Complex c = coeff * binomial(remaining, k) * upow;
    occ.n[e.row] = static_cast<std::uint8_t>(occ.n[e.row] + k);
    distribute(entries, entry_idx + 1, remaining - k, occ, c, emit);
    occ.n[e.row] = static_cast<std::uint8_t>(occ.n[e.row] - k);
    upow *= e.u;
  }
}

}  // namespace

FockState apply_mode_map(const FockState& state, const ModeMap& map) {
  if (!state.registry() || !state.registry()->same_as(*map.registry())) {
    throw RegistryError("mode map dimension does not match the state registry");
  }
  const std::size_t n = map.dim();
  const double* sf = sqrt_factorial_table();

  std::vector<std::vector<ColumnEntry>> cols(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      Complex u = map.at(r, c);
      if (std::abs(u) >= kAmplitudeEpsilon) {
        cols[c].push_back({static_cast<std::uint8_t>(r), u});
      }
    }
  }

  FockState out(state.registry());
  std::vector<std::pair<std::size_t, int>> occupied;
  for (const auto& [occ, amp] : state.terms()) {
    occupied.clear();
    double src_norm = 1.0;
    for (std::size_t m = 0; m < n; ++m) {
      if (occ.n[m] > 0) {
        if (occ.n[m] > kMaxPhotonsPerMode) {
          throw ElementError("photon count per mode exceeds the supported limit");
        }
        occupied.emplace_back(m, occ.n[m]);
        src_norm *= sf[occ.n[m]];
      }
    }

    // Expand mode by mode; finish each partial product with the target
    // sqrt(p!) factors once all source modes are placed.
    Occupation acc;
    std::function<void(std::size_t, Complex)> expand =
        [&](std::size_t idx, Complex coeff) {
          if (idx == occupied.size()) {
            double tgt_norm = 1.0;
            for (std::size_t m = 0; m < n; ++m) {
              if (acc.n[m] > 1) tgt_norm *= sf[acc.n[m]];
            }
            out.add_amplitude(acc, coeff * tgt_norm);
            return;
          }
          auto [mode, count] = occupied[idx];
          const auto& entries = cols[mode];
          if (entries.empty()) return;  // photon annihilated: zero column
          distribute(entries, 0, count, acc, coeff,
                     [&](const Occupation&, Complex c) { expand(idx + 1, c); });
        };
    expand(0, amp / src_norm);
  }
  out.prune();
  return out;
}

FockState apply_phase(const FockState& state, const PhaseShifterSpec& spec) {
  if (!std::isfinite(spec.theta_v)) {
    throw ElementError("phase shifter angle must be finite");
  }
  std::size_t v = state.registry()->index_of(spec.target, Polarization::V);
  FockState out(state.registry());
  for (const auto& [occ, amp] : state.terms()) {
    out.set_amplitude(occ, amp * std::polar(1.0, spec.theta_v * occ.n[v]));
  }
  return out;
}

FockState apply_rotator(const FockState& state, const RotatorSpec& spec) {
  return apply_mode_map(state, to_mode_map(spec, state.registry()));
}

FockState apply_element(const FockState& state, const Element& element) {
  if (const auto* bps = std::get_if<PhaseShifterSpec>(&element)) {
    return apply_phase(state, *bps);
  }
  return apply_mode_map(state, to_mode_map(element, state.registry()));
}

}  // namespace wsim
