#pragma once

#include <random>
#include <vector>

#include "wsim/fock.hpp"

namespace testutil {

// Random normalized state with `photons` photons spread over the registry.
inline wsim::FockState random_state(const wsim::RegistryPtr& registry, int photons,
                                    int terms, std::mt19937& rng) {
  std::uniform_int_distribution<int> mode(0, static_cast<int>(registry->size()) - 1);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  wsim::FockState state(registry);
  for (int t = 0; t < terms; ++t) {
    wsim::Occupation occ;
    for (int p = 0; p < photons; ++p) {
      ++occ.n[mode(rng)];
    }
    state.add_amplitude(occ, {coeff(rng), coeff(rng)});
  }
  if (state.empty()) {
    wsim::Occupation vac;
    state.set_amplitude(vac, {1.0, 0.0});
  }
  return normalize(state).first;
}

inline double uniform(std::mt19937& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace testutil
