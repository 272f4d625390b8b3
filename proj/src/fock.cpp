#include "wsim/fock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

namespace wsim {

Registry::Registry(std::vector<std::string> spatial_labels)
    : spatials_(std::move(spatial_labels)) {
  if (spatials_.empty()) {
    throw RegistryError("registry needs at least one spatial label");
  }
  std::set<std::string> seen;
  for (const auto& s : spatials_) {
    if (!seen.insert(s).second) {
      throw RegistryError("duplicate spatial label '" + s + "' in registry");
    }
  }
  if (2 * spatials_.size() > kMaxModes) {
    throw RegistryError("registry exceeds the supported mode count");
  }
  modes_.reserve(2 * spatials_.size());
  for (const auto& s : spatials_) {
    base_[s] = modes_.size();
    modes_.push_back({s, Polarization::H});
    modes_.push_back({s, Polarization::V});
  }
}

bool Registry::has_spatial(const std::string& spatial) const {
  return base_.count(spatial) != 0;
}

std::size_t Registry::index_of(const std::string& spatial, Polarization pol) const {
  auto it = base_.find(spatial);
  if (it == base_.end()) {
    throw RegistryError("unknown spatial label '" + spatial + "'");
  }
  return it->second + (pol == Polarization::V ? 1 : 0);
}

bool Registry::same_as(const Registry& other) const {
  return this == &other || modes_ == other.modes_;
}

RegistryPtr make_registry(std::vector<std::string> spatial_labels) {
  return std::make_shared<const Registry>(std::move(spatial_labels));
}

Occupation occupation_from_counts(const Registry& registry,
                                  const std::vector<int>& counts) {
  if (counts.size() != registry.size()) {
    throw RegistryError("occupation length does not match registry size");
  }
  Occupation occ;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0 || counts[i] > 255) {
      throw RegistryError("photon count out of range");
    }
    occ.n[i] = static_cast<std::uint8_t>(counts[i]);
  }
  return occ;
}

std::vector<int> counts_of(const Registry& registry, const Occupation& occ) {
  std::vector<int> counts(registry.size());
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = occ.n[i];
  return counts;
}

Complex FockState::amplitude(const Occupation& occ) const {
  auto it = terms_.find(occ);
  return it == terms_.end() ? Complex{0.0, 0.0} : it->second;
}

double FockState::norm_sq() const {
  double sum = 0.0;
  for (const auto& [occ, amp] : terms_) sum += std::norm(amp);
  return sum;
}

void FockState::set_amplitude(const Occupation& occ, Complex amp) {
  if (std::abs(amp) < kAmplitudeEpsilon) {
    terms_.erase(occ);
  } else {
    terms_[occ] = amp;
  }
}

void FockState::add_amplitude(const Occupation& occ, Complex amp) {
  auto [it, inserted] = terms_.try_emplace(occ, amp);
  if (!inserted) it->second += amp;
}

void FockState::prune(double eps) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) < eps) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
}

FockState make_number_state(RegistryPtr registry, const std::vector<int>& counts) {
  FockState state(registry);
  state.set_amplitude(occupation_from_counts(*registry, counts), {1.0, 0.0});
  return state;
}

namespace {

void require_same_registry(const FockState& a, const FockState& b) {
  if (!a.registry() || !b.registry() || !a.registry()->same_as(*b.registry())) {
    throw RegistryError("states use different registries");
  }
}

}  // namespace

Complex inner_product(const FockState& a, const FockState& b) {
  require_same_registry(a, b);
  // Iterate the smaller map.
  const FockState& lead = a.term_count() <= b.term_count() ? a : b;
  const FockState& other = &lead == &a ? b : a;
  Complex sum{0.0, 0.0};
  for (const auto& [occ, amp] : lead.terms()) {
    Complex o = other.amplitude(occ);
    if (o == Complex{0.0, 0.0}) continue;
    sum += (&lead == &a) ? std::conj(amp) * o : std::conj(o) * amp;
  }
  return sum;
}

FockState scale_add(const std::vector<std::pair<Complex, FockState>>& parts) {
  if (parts.empty()) {
    throw RegistryError("scale_add needs at least one state");
  }
  FockState out(parts.front().second.registry());
  for (const auto& [coeff, state] : parts) {
    require_same_registry(parts.front().second, state);
    for (const auto& [occ, amp] : state.terms()) {
      out.add_amplitude(occ, coeff * amp);
    }
  }
  out.prune();
  return out;
}

std::pair<FockState, double> normalize(const FockState& state) {
  double nsq = state.norm_sq();
  if (nsq < kAmplitudeEpsilon * kAmplitudeEpsilon) {
    throw DegenerateStateError("cannot normalize a zero-norm state");
  }
  double inv = 1.0 / std::sqrt(nsq);
  FockState out(state.registry());
  for (const auto& [occ, amp] : state.terms()) {
    out.set_amplitude(occ, amp * inv);
  }
  return {std::move(out), nsq};
}

FockState embed(const FockState& state, RegistryPtr target) {
  const Registry& src = *state.registry();
  std::vector<std::size_t> dest(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    dest[i] = target->index_of(src.mode(i).spatial, src.mode(i).pol);
  }
  FockState out(std::move(target));
  for (const auto& [occ, amp] : state.terms()) {
    Occupation mapped;
    for (std::size_t i = 0; i < src.size(); ++i) mapped.n[dest[i]] = occ.n[i];
    out.set_amplitude(mapped, amp);
  }
  return out;
}

FockState restrict_to(const FockState& state, RegistryPtr target) {
  const Registry& src = *state.registry();
  // -1 marks a dropped mode, which must be unoccupied in every term.
  std::vector<int> dest(src.size(), -1);
  for (std::size_t i = 0; i < src.size(); ++i) {
    const ModeLabel& m = src.mode(i);
    if (target->has_spatial(m.spatial)) {
      dest[i] = static_cast<int>(target->index_of(m.spatial, m.pol));
    }
  }
  FockState out(std::move(target));
  for (const auto& [occ, amp] : state.terms()) {
    Occupation mapped;
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (dest[i] >= 0) {
        mapped.n[dest[i]] = occ.n[i];
      } else if (occ.n[i] != 0) {
        throw RegistryError("restrict_to: photons present in a dropped mode");
      }
    }
    out.set_amplitude(mapped, amp);
  }
  return out;
}

std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void dump_state(const FockState& state, std::ostream& os) {
  const Registry& reg = *state.registry();
  for (const auto& [occ, amp] : state.terms()) {
    for (std::size_t i = 0; i < reg.size(); ++i) {
      if (i) os << ',';
      os << static_cast<int>(occ.n[i]);
    }
    os << ' ' << format_g17(amp.real()) << ' ' << format_g17(amp.imag()) << '\n';
  }
}

}  // namespace wsim
