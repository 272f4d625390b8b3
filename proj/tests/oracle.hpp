#pragma once

// Independent reference implementations used only by the tests. Amplitudes
// come from the classic permanent formula for linear-optical transitions,
//   <m|U_F|n> = perm(U[m, n]) / sqrt(prod m_i! prod n_j!),
// evaluated on the composed single-photon matrix of a whole circuit in one
// shot. None of this shares code with the sequential multi-photon
// expansion in the library.

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <vector>

#include "wsim/analysis.hpp"
#include "wsim/elements.hpp"
#include "wsim/postselect.hpp"
#include "wsim/schemes.hpp"

namespace oracle {

using wsim::Complex;
using wsim::Occupation;

using Matrix = std::vector<std::vector<Complex>>;  // [row][col]

inline Matrix identity_matrix(std::size_t n) {
  Matrix m(n, std::vector<Complex>(n));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = {1.0, 0.0};
  return m;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  std::size_t n = a.size();
  Matrix out(n, std::vector<Complex>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (a[i][k] == Complex{}) continue;
      for (std::size_t j = 0; j < n; ++j) out[i][j] += a[i][k] * b[k][j];
    }
  }
  return out;
}

// Single-photon matrix of one element, written down independently of the
// library's ModeMap construction (any unitary completion of the unfed
// ports gives the same amplitudes on scheme inputs).
inline Matrix element_matrix(const wsim::Element& element, const wsim::Registry& reg) {
  using wsim::Polarization;
  Matrix m = identity_matrix(reg.size());
  if (const auto* bs = std::get_if<wsim::BeamSplitterSpec>(&element)) {
    for (Polarization pol : {Polarization::H, Polarization::V}) {
      double r = pol == Polarization::H ? bs->r_h : bs->r_v;
      double t = pol == Polarization::H ? bs->t_h : bs->t_v;
      Complex pr = pol == Polarization::V ? std::polar(1.0, bs->phi) : Complex{1.0, 0.0};
      Complex pt = pol == Polarization::V ? std::polar(1.0, bs->psi) : Complex{1.0, 0.0};
      std::size_t in = reg.index_of(bs->input, pol);
      std::size_t re = reg.index_of(bs->reflected, pol);
      std::size_t tr = reg.index_of(bs->transmitted, pol);
      for (auto& row : m) {
        row[in] = {0.0, 0.0};
        row[re] = {0.0, 0.0};
        row[tr] = {0.0, 0.0};
      }
      m[re][in] = r * pr;
      m[tr][in] = t * pt;
      m[re][re] = t * pr;
      m[tr][re] = -r * pt;
      m[in][tr] = {1.0, 0.0};
    }
  } else if (const auto* bps = std::get_if<wsim::PhaseShifterSpec>(&element)) {
    std::size_t v = reg.index_of(bps->target, Polarization::V);
    m[v][v] = std::polar(1.0, bps->theta_v);
  } else if (const auto* rot = std::get_if<wsim::RotatorSpec>(&element)) {
    std::size_t h = reg.index_of(rot->target, Polarization::H);
    std::size_t v = reg.index_of(rot->target, Polarization::V);
    double c = std::cos(rot->angle), s = std::sin(rot->angle);
    m[h][h] = {c, 0.0};
    m[v][h] = {s, 0.0};
    m[h][v] = {-s, 0.0};
    m[v][v] = {c, 0.0};
  } else if (const auto* att = std::get_if<wsim::AttenuatorSpec>(&element)) {
    for (Polarization pol : {Polarization::H, Polarization::V}) {
      double a = pol == Polarization::H ? att->amp_h : att->amp_v;
      double s = std::sqrt(std::max(0.0, 1.0 - a * a));
      std::size_t t = reg.index_of(att->target, pol);
      std::size_t x = reg.index_of(att->aux, pol);
      m[t][t] = {a, 0.0};
      m[x][t] = {s, 0.0};
      m[t][x] = {s, 0.0};
      m[x][x] = {-a, 0.0};
    }
  }
  return m;
}

inline Matrix composed_matrix(const wsim::Circuit& circuit) {
  Matrix total = identity_matrix(circuit.registry->size());
  for (const wsim::Element& e : circuit.elements) {
    total = multiply(element_matrix(e, *circuit.registry), total);
  }
  return total;
}

// Ryser's formula; fine for the <= 8 photons used in these tests.
inline Complex permanent(const Matrix& a) {
  std::size_t n = a.size();
  if (n == 0) return {1.0, 0.0};
  Complex sum{0.0, 0.0};
  for (std::size_t mask = 1; mask < (1u << n); ++mask) {
    Complex prod{1.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      Complex row{0.0, 0.0};
      for (std::size_t j = 0; j < n; ++j) {
        if (mask & (1u << j)) row += a[i][j];
      }
      prod *= row;
    }
    int sign = ((n - std::popcount(mask)) % 2 == 0) ? 1 : -1;
    sum += static_cast<double>(sign) * prod;
  }
  return sum;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline void enumerate_occupations(std::size_t modes, int photons,
                                  const std::function<void(const std::vector<int>&)>& emit) {
  std::vector<int> counts(modes, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t mode, int left) {
    if (mode + 1 == modes) {
      counts[mode] = left;
      emit(counts);
      counts[mode] = 0;
      return;
    }
    for (int k = 0; k <= left; ++k) {
      counts[mode] = k;
      rec(mode + 1, left - k);
    }
    counts[mode] = 0;
  };
  if (modes > 0) rec(0, photons);
}

// Single-shot expansion of the composed matrix acting on `input`.
inline std::map<Occupation, Complex> apply_via_permanents(const wsim::FockState& input,
                                                          const Matrix& u) {
  const wsim::Registry& reg = *input.registry();
  std::map<Occupation, Complex> out;
  for (const auto& [occ_in, amp] : input.terms()) {
    std::vector<int> n = counts_of(reg, occ_in);
    int photons = 0;
    for (int c : n) photons += c;
    std::vector<std::size_t> col_modes;
    for (std::size_t j = 0; j < n.size(); ++j) {
      for (int rep = 0; rep < n[j]; ++rep) col_modes.push_back(j);
    }
    double n_fact = 1.0;
    for (int c : n) n_fact *= factorial(c);

    enumerate_occupations(reg.size(), photons, [&](const std::vector<int>& m) {
      std::vector<std::size_t> row_modes;
      for (std::size_t i = 0; i < m.size(); ++i) {
        for (int rep = 0; rep < m[i]; ++rep) row_modes.push_back(i);
      }
      Matrix sub(photons, std::vector<Complex>(photons));
      bool all_zero = true;
      for (int i = 0; i < photons; ++i) {
        for (int j = 0; j < photons; ++j) {
          sub[i][j] = u[row_modes[i]][col_modes[j]];
          if (sub[i][j] != Complex{}) all_zero = false;
        }
      }
      if (photons > 0 && all_zero) return;
      double m_fact = 1.0;
      for (int c : m) m_fact *= factorial(c);
      Complex a = amp * permanent(sub) / std::sqrt(m_fact * n_fact);
      if (std::abs(a) < 1e-300) return;
      out[occupation_from_counts(reg, m)] += a;
    });
  }
  for (auto it = out.begin(); it != out.end();) {
    it = std::abs(it->second) < 1e-14 ? out.erase(it) : std::next(it);
  }
  return out;
}

// Exhaustive-loss detector arithmetic: per spatial mode, detected counts
// follow binomial thinning of the photons actually present.
inline double click_probability(const wsim::FockState& state, double eta, bool resolving,
                                const wsim::DetectionPattern& pattern) {
  const wsim::Registry& reg = *state.registry();
  double total = 0.0;
  for (const auto& [occ, amp] : state.terms()) {
    double p_term = 1.0;
    for (const auto& s : reg.spatial_labels()) {
      int nh = occ.n[reg.index_of(s, wsim::Polarization::H)];
      int nv = occ.n[reg.index_of(s, wsim::Polarization::V)];
      wsim::ModeConstraint c;
      if (auto it = pattern.constraints.find(s); it != pattern.constraints.end()) {
        c = it->second;
      } else {
        c.kind = pattern.unlisted;
      }
      auto binom_pmf = [&](int n, int k) {
        if (k < 0 || k > n) return 0.0;
        double comb = 1.0;
        for (int i = 1; i <= k; ++i) comb = comb * (n - k + i) / i;
        return comb * std::pow(eta, k) * std::pow(1.0 - eta, n - k);
      };
      double p_mode = 1.0;
      switch (c.kind) {
        case wsim::ModeConstraint::Kind::OneAny:
          p_mode = resolving ? binom_pmf(nh + nv, 1)
                             : 1.0 - std::pow(1.0 - eta, nh + nv);
          break;
        case wsim::ModeConstraint::Kind::Vacuum:
          p_mode = std::pow(1.0 - eta, nh + nv);
          break;
        case wsim::ModeConstraint::Kind::Exact: {
          p_mode = 1.0;
          if (c.exact_h) p_mode *= binom_pmf(nh, *c.exact_h);
          if (c.exact_v) p_mode *= binom_pmf(nv, *c.exact_v);
          break;
        }
        case wsim::ModeConstraint::Kind::Unconstrained:
          p_mode = 1.0;
          break;
      }
      p_term *= p_mode;
    }
    total += std::norm(amp) * p_term;
  }
  return total;
}

// Dense per-axis scan; the printed formulas factor over the reflectivities.
inline double dense_axis_max(const std::function<double(double)>& f, int steps) {
  double best = 0.0;
  for (int i = 0; i <= steps; ++i) {
    best = std::max(best, f(static_cast<double>(i) / steps));
  }
  return best;
}

inline double dense_grid_maximum(wsim::SchemeKind kind, int steps = 200000) {
  switch (kind) {
    case wsim::SchemeKind::I:
      return 24.0 * dense_axis_max([](double x) { return x * std::pow(1 - x, 3); }, steps) *
             dense_axis_max([](double y) { return y * (1 - y) * (1 - y); }, steps) *
             dense_axis_max([](double z) { return z * (1 - z); }, steps);
    case wsim::SchemeKind::II:
      return 24.0 * dense_axis_max([](double x) { return x * x * (1 - x) * (1 - x); }, steps) *
             dense_axis_max([](double y) { return y * (1 - y); }, steps) *
             dense_axis_max([](double z) { return z * (1 - z); }, steps);
    case wsim::SchemeKind::SPS:
      return 3.0 * dense_axis_max([](double y) { return y * (1 - y) * (1 - y); }, steps) *
             dense_axis_max([](double z) { return z * (1 - z); }, steps);
  }
  return 0.0;
}

}  // namespace oracle
