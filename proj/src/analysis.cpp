#include "wsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace wsim {

WTarget WTarget::equal_weight() { return WTarget{}; }

WTarget WTarget::normalized(Complex c1, Complex c2, Complex c3) {
  double nsq = std::norm(c1) + std::norm(c2) + std::norm(c3);
  if (nsq < 1e-30) {
    throw DegenerateStateError("target amplitudes are not normalizable");
  }
  double inv = 1.0 / std::sqrt(nsq);
  WTarget t;
  t.c = {c1 * inv, c2 * inv, c3 * inv};
  return t;
}

void WTarget::validate() const {
  double nsq = std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2]);
  if (std::abs(nsq - 1.0) > 1e-12) {
    throw DegenerateStateError("W target amplitudes must be normalized");
  }
}

FockState w_target_state(const WTarget& target, const RegistryPtr& registry,
                         WFlavor flavor) {
  target.validate();
  auto pol = [&](Polarization p) {
    if (flavor == WFlavor::V) return p;
    return p == Polarization::H ? Polarization::V : Polarization::H;
  };
  const Registry& reg = *registry;
  // Basis kets: (2H 3H 3'V), (2H 3V 3'H), (2V 3H 3'H), H and V swapped
  // for the H flavor.
  const std::array<std::array<std::pair<const char*, Polarization>, 3>, 3> kets = {{
      {{{"2", Polarization::H}, {"3", Polarization::H}, {"3'", Polarization::V}}},
      {{{"2", Polarization::H}, {"3", Polarization::V}, {"3'", Polarization::H}}},
      {{{"2", Polarization::V}, {"3", Polarization::H}, {"3'", Polarization::H}}},
  }};
  FockState state(registry);
  for (int i = 0; i < 3; ++i) {
    Occupation occ;
    for (const auto& [spatial, p] : kets[i]) {
      occ.n[reg.index_of(spatial, pol(p))] = 1;
    }
    state.set_amplitude(occ, target.c[i]);
  }
  return state;
}

double fidelity(const FockState& state, const WTarget& target, WFlavor flavor) {
  FockState t = w_target_state(target, state.registry(), flavor);
  return std::norm(inner_product(t, state));
}

CircuitOutcome simulate_circuit(const Circuit& circuit) {
  CircuitOutcome out;
  FockState evolved = evolve(circuit);

  std::vector<std::string> observed = circuit.signal_modes;
  if (circuit.trigger_mode) observed.push_back(*circuit.trigger_mode);
  DetectionPattern pattern = DetectionPattern::one_per_mode(observed);

  PostselectionResult ps = project(evolved, pattern);
  out.pattern_probability = ps.probability;
  out.overall_probability = ps.probability * circuit.source_probability;
  if (ps.is_zero()) {
    return out;
  }
  out.postselected = ps.conditional;

  if (circuit.trigger_mode) {
    auto branch = [&](TriggerOutcome o, bool rotate) {
      PostselectionResult r = trigger_select(ps, *circuit.trigger_mode, o, rotate,
                                             circuit.signal_modes);
      TriggerBranch b;
      b.cumulative_probability = r.probability * circuit.source_probability;
      b.conditional = std::move(r.conditional);
      return b;
    };
    out.d1v = branch(TriggerOutcome::D1V, false);
    out.d1h = branch(TriggerOutcome::D1H, false);
    out.d1h_rotated = branch(TriggerOutcome::D1H, true);
  } else {
    out.conditional_signal =
        restrict_to(*ps.conditional, make_registry(circuit.signal_modes));
  }
  return out;
}

double closed_form_probability(SchemeKind kind, const SchemeParams& params,
                               const std::optional<PerturbationSpec>& perturbation) {
  if (perturbation && !perturbation->is_zero()) {
    throw ElementError("closed forms hold only for polarization-independent "
                       "splitters (delta = 0)");
  }
  std::array<double, 3> r{}, t{};
  for (int k = 0; k < 3; ++k) {
    if (!(params.r_sq[k] >= 0.0 && params.r_sq[k] <= 1.0)) {
      throw ElementError("reflectivity r^2 must lie in [0, 1]");
    }
    r[k] = std::sqrt(params.r_sq[k]);
    t[k] = std::sqrt(1.0 - params.r_sq[k]);
  }
  const double sqrt6 = std::sqrt(6.0);
  switch (kind) {
    case SchemeKind::I: {
      double a = 2.0 * sqrt6 * r[0] * t[0] * t[0] * t[0] * r[1] * t[1] * t[1] * r[2] * t[2];
      return a * a;
    }
    case SchemeKind::II: {
      double a = 2.0 * sqrt6 * r[0] * r[0] * t[0] * t[0] * r[1] * t[1] * r[2] * t[2];
      return a * a;
    }
    case SchemeKind::SPS: {
      double a = sqrt6 * r[1] * t[1] * t[1] * r[2] * t[2];
      return 0.5 * a * a;
    }
  }
  throw ElementError("unknown scheme");
}

namespace {

std::vector<int> active_dims(SchemeKind kind) {
  if (kind == SchemeKind::SPS) return {1, 2};
  return {0, 1, 2};
}

double objective_probability(SchemeKind kind, const std::array<double, 3>& r_sq) {
  SchemeParams params;
  params.r_sq = r_sq;
  try {
    return simulate_circuit(build_scheme(kind, params)).overall_probability;
  } catch (const ElementError&) {
    return -1.0;
  }
}

struct Vertex {
  std::array<double, 3> x{};
  double f = -1.0;
};

bool lex_less(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  for (int i = 0; i < 3; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

// Higher value wins; ties break toward lexicographically smaller params.
bool better(const Vertex& a, const Vertex& b) {
  if (a.f != b.f) return a.f > b.f;
  return lex_less(a.x, b.x);
}

}  // namespace

OptimizationResult optimize_probability(SchemeKind kind,
                                        const std::array<std::array<double, 2>, 3>& bounds,
                                        const OptimizeOptions& options) {
  const std::vector<int> dims = active_dims(kind);
  const int grid = std::max(1, options.grid_resolution);
  for (int d : dims) {
    if (!(bounds[d][0] <= bounds[d][1])) {
      throw ElementError("empty optimization bounds");
    }
  }

  std::array<double, 3> base = optimal_r_sq(kind);
  auto point_at = [&](const std::vector<int>& steps) {
    std::array<double, 3> x = base;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      int d = dims[i];
      x[d] = bounds[d][0] + (bounds[d][1] - bounds[d][0]) * steps[i] / grid;
    }
    return x;
  };

  // Coarse grid scan, parallelizable across the flattened index space with
  // a deterministic merge.
  const long total = [&] {
    long t = 1;
    for (std::size_t i = 0; i < dims.size(); ++i) t *= grid + 1;
    return t;
  }();
  auto eval_range = [&](long begin, long end, Vertex& local_best) {
    for (long idx = begin; idx < end; ++idx) {
      std::vector<int> steps(dims.size());
      long rest = idx;
      for (std::size_t i = 0; i < dims.size(); ++i) {
        steps[i] = static_cast<int>(rest % (grid + 1));
        rest /= grid + 1;
      }
      Vertex v;
      v.x = point_at(steps);
      v.f = objective_probability(kind, v.x);
      if (better(v, local_best)) local_best = v;
    }
  };

  Vertex grid_best;
  int jobs = std::max(1, options.jobs);
  if (jobs == 1 || total < 256) {
    eval_range(0, total, grid_best);
  } else {
    std::vector<Vertex> local(jobs);
    std::vector<std::thread> workers;
    long chunk = (total + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
      long begin = w * chunk;
      long end = std::min(total, begin + chunk);
      workers.emplace_back([&, begin, end, w] { eval_range(begin, end, local[w]); });
    }
    for (auto& t : workers) t.join();
    for (const Vertex& v : local) {
      if (better(v, grid_best)) grid_best = v;
    }
  }

  OptimizationResult result;
  result.trace.emplace_back(grid_best.x, grid_best.f);

  // Nelder-Mead refinement from the best grid point.
  const std::size_t n = dims.size();
  std::vector<Vertex> simplex(n + 1);
  simplex[0] = grid_best;
  for (std::size_t i = 0; i < n; ++i) {
    int d = dims[i];
    double step = (bounds[d][1] - bounds[d][0]) / grid;
    Vertex v = grid_best;
    v.x[d] += (v.x[d] + step <= bounds[d][1]) ? step : -step;
    v.f = objective_probability(kind, v.x);
    simplex[i + 1] = v;
  }

  auto inside = [&](const std::array<double, 3>& x) {
    for (int d : dims) {
      if (x[d] < bounds[d][0] || x[d] > bounds[d][1]) return false;
    }
    return true;
  };
  auto eval = [&](std::array<double, 3> x) {
    Vertex v;
    v.x = x;
    v.f = inside(x) ? objective_probability(kind, x) : -1.0;
    return v;
  };

  double best_seen = grid_best.f;
  for (int iter = 0; iter < options.max_refine_iterations; ++iter) {
    std::sort(simplex.begin(), simplex.end(), better);
    if (simplex.front().f > best_seen + 1e-15) {
      best_seen = simplex.front().f;
      result.trace.emplace_back(simplex.front().x, simplex.front().f);
    }

    double spread = simplex.front().f - simplex.back().f;
    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (int d : dims) {
        diameter = std::max(diameter, std::abs(simplex[i].x[d] - simplex[0].x[d]));
      }
    }
    if (spread <= 1e-15 && diameter <= 1e-9) break;

    std::array<double, 3> centroid = simplex[0].x;
    for (int d : dims) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += simplex[i].x[d];
      centroid[d] = sum / static_cast<double>(n);
    }
    const Vertex& worst = simplex[n];

    auto blend = [&](double coeff) {
      std::array<double, 3> x = centroid;
      for (int d : dims) x[d] = centroid[d] + coeff * (worst.x[d] - centroid[d]);
      return x;
    };

    Vertex reflected = eval(blend(-1.0));
    if (better(reflected, simplex[0])) {
      Vertex expanded = eval(blend(-2.0));
      simplex[n] = better(expanded, reflected) ? expanded : reflected;
    } else if (better(reflected, simplex[n - 1])) {
      simplex[n] = reflected;
    } else {
      Vertex contracted = eval(blend(0.5));
      if (better(contracted, worst)) {
        simplex[n] = contracted;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          std::array<double, 3> x = simplex[i].x;
          for (int d : dims) x[d] = simplex[0].x[d] + 0.5 * (x[d] - simplex[0].x[d]);
          simplex[i] = eval(x);
        }
      }
    }
  }
  std::sort(simplex.begin(), simplex.end(), better);

  Vertex final_best = better(simplex[0], grid_best) ? simplex[0] : grid_best;
  if (final_best.f > best_seen) {
    result.trace.emplace_back(final_best.x, final_best.f);
  }
  result.best_params.r_sq = final_best.x;
  result.best_value = final_best.f;
  return result;
}

double fidelity_at_delta(SchemeKind kind, const std::array<double, 3>& delta_h,
                         const std::array<double, 3>& delta_v, TriggerPolicy policy) {
  PerturbationSpec perturbation = PerturbationSpec::for_scheme(kind);
  perturbation.delta_h = delta_h;
  perturbation.delta_v = delta_v;
  SchemeParams params;
  params.r_sq = perturbation.r_opt_sq;

  CircuitOutcome out = simulate_circuit(build_scheme(kind, params, perturbation));
  WTarget target = WTarget::equal_weight();
  if (!out.postselected) return 0.0;
  if (!out.d1v) {
    // Trigger-free circuit (SPS): the conditional state itself.
    return out.conditional_signal ? fidelity(*out.conditional_signal, target) : 0.0;
  }
  double fv = out.d1v->conditional ? fidelity(*out.d1v->conditional, target) : 0.0;
  double fh = out.d1h_rotated && out.d1h_rotated->conditional
                  ? fidelity(*out.d1h_rotated->conditional, target)
                  : 0.0;
  switch (policy) {
    case TriggerPolicy::D1V:
      return fv;
    case TriggerPolicy::D1HRotated:
      return fh;
    case TriggerPolicy::Both: {
      double pv = out.d1v->cumulative_probability;
      double ph = out.d1h_rotated ? out.d1h_rotated->cumulative_probability : 0.0;
      double total = pv + ph;
      return total > 0.0 ? (pv * fv + ph * fh) / total : 0.0;
    }
  }
  return fv;
}

double fidelity_at_symmetric_delta(SchemeKind kind, const std::array<double, 3>& delta,
                                   TriggerPolicy policy) {
  std::array<double, 3> dh{}, dv{};
  for (int k = 0; k < 3; ++k) {
    dh[k] = 0.5 * delta[k];
    dv[k] = -0.5 * delta[k];
  }
  return fidelity_at_delta(kind, dh, dv, policy);
}

std::array<std::array<double, 3>, 3> fidelity_hessian(SchemeKind kind,
                                                      TriggerPolicy policy,
                                                      double step) {
  if (kind == SchemeKind::SPS) {
    throw ElementError("the fidelity Hessian is defined for schemes I and II");
  }
  if (!(step >= 1e-5)) {
    throw ElementError("finite-difference step below 1e-5 would be dominated by "
                       "cancellation noise");
  }
  auto f = [&](double d1, double d2, double d3) {
    return fidelity_at_symmetric_delta(kind, {d1, d2, d3}, policy);
  };
  const double f0 = f(0.0, 0.0, 0.0);
  const double h = step;
  std::array<std::array<double, 3>, 3> hess{};
  for (int k = 0; k < 3; ++k) {
    std::array<double, 3> plus{}, minus{};
    plus[k] = h;
    minus[k] = -h;
    hess[k][k] = (f(plus[0], plus[1], plus[2]) - 2.0 * f0 +
                  f(minus[0], minus[1], minus[2])) /
                 (h * h);
  }
  for (int j = 0; j < 3; ++j) {
    for (int k = j + 1; k < 3; ++k) {
      std::array<double, 3> d{};
      auto at = [&](double sj, double sk) {
        d = {0.0, 0.0, 0.0};
        d[j] = sj * h;
        d[k] = sk * h;
        return f(d[0], d[1], d[2]);
      };
      double mixed = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
      hess[j][k] = mixed;
      hess[k][j] = mixed;
    }
  }
  return hess;
}

QuadraticFit fit_quadratic(const std::vector<ScanSample>& samples) {
  // Least squares over the full bivariate quartic basis so third- and
  // fourth-order terms of the fidelity surface do not bias the reported
  // quadratic coefficients.
  constexpr int kN = 15;
  auto basis = [](const ScanSample& s) {
    const double d2 = s.d2, d3 = s.d3;
    return std::array<double, kN>{
        1.0,          d2,           d3,           d2 * d2,           d2 * d3,
        d3 * d3,      d2 * d2 * d2, d2 * d2 * d3, d2 * d3 * d3,      d3 * d3 * d3,
        d2 * d2 * d2 * d2, d2 * d2 * d2 * d3, d2 * d2 * d3 * d3,
        d2 * d3 * d3 * d3, d3 * d3 * d3 * d3};
  };

  // Column scaling keeps the normal equations well conditioned for small
  // delta ranges; near-zero pivots mark directions the sample set does not
  // constrain (left at zero, e.g. zero-range scans).
  std::array<double, kN> scale{};
  for (const ScanSample& s : samples) {
    if (!s.feasible || !std::isfinite(s.fidelity)) continue;
    auto row = basis(s);
    for (int i = 0; i < kN; ++i) scale[i] = std::max(scale[i], std::abs(row[i]));
  }
  for (double& v : scale) {
    if (v == 0.0) v = 1.0;
  }

  std::array<std::array<double, kN + 1>, kN> m{};
  for (const ScanSample& s : samples) {
    if (!s.feasible || !std::isfinite(s.fidelity)) continue;
    auto row = basis(s);
    for (int i = 0; i < kN; ++i) row[i] /= scale[i];
    for (int i = 0; i < kN; ++i) {
      for (int j = 0; j < kN; ++j) m[i][j] += row[i] * row[j];
      m[i][kN] += row[i] * s.fidelity;
    }
  }

  std::array<double, kN> x{};
  std::array<int, kN> pivot_of{};
  pivot_of.fill(-1);
  for (int col = 0; col < kN; ++col) {
    int pivot = -1;
    double best = 1e-10;
    for (int row = col; row < kN; ++row) {
      if (std::abs(m[row][col]) > best) {
        best = std::abs(m[row][col]);
        pivot = row;
      }
    }
    if (pivot < 0) continue;
    std::swap(m[col], m[pivot]);
    pivot_of[col] = col;
    for (int row = 0; row < kN; ++row) {
      if (row == col || m[row][col] == 0.0) continue;
      double factor = m[row][col] / m[col][col];
      for (int j = col; j <= kN; ++j) m[row][j] -= factor * m[col][j];
    }
  }
  for (int i = 0; i < kN; ++i) {
    if (pivot_of[i] >= 0 && std::abs(m[i][i]) > 1e-10) {
      x[i] = m[i][kN] / m[i][i] / scale[i];
    }
  }
  return {x[0], x[1], x[2], x[3], x[4], x[5]};
}

DesignResult design_w_class(const WTarget& target) {
  target.validate();
  std::array<double, 3> mag = {std::abs(target.c[0]), std::abs(target.c[1]),
                               std::abs(target.c[2])};
  double peak = std::max({mag[0], mag[1], mag[2]});
  if (peak < 1e-15) {
    throw DegenerateStateError("target amplitudes are not normalizable");
  }

  DesignResult result;
  // Each basis term carries exactly one V photon, in mode 3', 3, 2 for
  // terms 1, 2, 3 respectively, so V attenuations alone set the weights.
  std::array<double, 3> scale = {mag[0] / peak, mag[1] / peak, mag[2] / peak};
  result.attenuation = {{{1.0, scale[2]}, {1.0, scale[1]}, {1.0, scale[0]}}};
  result.bps_theta = {
      mag[2] > 0.0 ? std::arg(target.c[2]) : 0.0,
      mag[1] > 0.0 ? std::arg(target.c[1]) : 0.0,
      mag[0] > 0.0 ? std::arg(target.c[0]) : 0.0,
  };

  SchemeParams params;  // Scheme I optimum
  Circuit base = build_scheme_I(params);
  Circuit designed;
  std::vector<std::string> spatials = base.registry->spatial_labels();
  const std::array<std::string, 3> signal = {"2", "3", "3'"};
  for (const auto& m : signal) spatials.push_back("aux" + m);
  designed.registry = make_registry(spatials);
  designed.source = embed(base.source, designed.registry);
  designed.source_probability = base.source_probability;
  designed.elements = base.elements;
  designed.trigger_mode = base.trigger_mode;
  designed.signal_modes = base.signal_modes;
  for (int i = 0; i < 3; ++i) {
    designed.elements.push_back(AttenuatorSpec{signal[i], result.attenuation[i][0],
                                               result.attenuation[i][1],
                                               "aux" + signal[i]});
  }
  for (int i = 0; i < 3; ++i) {
    if (result.bps_theta[i] != 0.0) {
      designed.elements.push_back(PhaseShifterSpec{signal[i], result.bps_theta[i]});
    }
  }
  result.circuit = std::move(designed);

  double p_ideal = closed_form_probability(SchemeKind::I, params);
  result.predicted_probability =
      p_ideal / 6.0 * (scale[0] * scale[0] + scale[1] * scale[1] + scale[2] * scale[2]);
  return result;
}

ContaminationReport contamination_estimate(SchemeKind kind, const YieldModel& model,
                                           const DetectorModel& detectors) {
  if (kind == SchemeKind::SPS) {
    throw ElementError("contamination analysis applies to the PDC schemes");
  }
  if (!(model.gamma > 0.0 && model.gamma <= 0.1)) {
    throw ElementError("pair-generation rate gamma must lie in (0, 0.1]");
  }
  if (!(detectors.efficiency > 0.0 && detectors.efficiency <= 1.0)) {
    throw ElementError("detector efficiency must lie in (0, 1]");
  }

  SchemeParams params;
  params.r_sq = optimal_r_sq(kind);
  Circuit circuit = build_scheme(kind, params);
  std::vector<std::string> observed = circuit.signal_modes;
  if (circuit.trigger_mode) observed.push_back(*circuit.trigger_mode);
  DetectionPattern pattern = DetectionPattern::one_per_mode(observed);

  double accept2 =
      threshold_outcome_probability(evolve(circuit), detectors, pattern);
  Circuit three_pair = circuit;
  three_pair.source = embed(pdc_source_npairs(3), circuit.registry);
  double accept3 =
      threshold_outcome_probability(evolve(three_pair), detectors, pattern);

  ContaminationReport report;
  const double g = model.gamma;
  report.signal_rate = g * g * accept2;
  report.false_accept_rate = g * g * g * accept3;
  report.ratio = report.signal_rate > 0.0
                     ? report.false_accept_rate / report.signal_rate
                     : 0.0;
  report.generation_ratio = g;
  return report;
}

YieldReport yield_report(const YieldModel& model) {
  if (!(model.gamma >= 0.0 && model.gamma <= 1.0) ||
      !(model.sps_rate >= 0.0 && model.sps_rate <= 1.0) ||
      !(model.ghz_reference > 0.0 && model.ghz_reference <= 1.0)) {
    throw ElementError("yield model rates must lie in [0, 1]");
  }
  if (!(model.stimulated_gain >= 1.0)) {
    throw ElementError("stimulated gain must be at least 1");
  }
  YieldReport report;
  report.w_per_two_pair = 3.0 / 32.0;
  report.ghz_per_two_pair = model.ghz_reference;
  report.ghz_ratio = report.w_per_two_pair / model.ghz_reference;
  report.stimulated_gain = model.stimulated_gain;
  report.sps_three_photon_rate = model.sps_rate * model.sps_rate * model.sps_rate;
  SchemeParams symmetric;
  symmetric.r_sq = {0.5, 0.5, 0.5};
  report.sps_w_rate = report.sps_three_photon_rate *
                      closed_form_probability(SchemeKind::SPS, symmetric);
  SchemeParams best;
  best.r_sq = {0.5, 1.0 / 3.0, 0.5};
  report.sps_w_rate_best = report.sps_three_photon_rate *
                           closed_form_probability(SchemeKind::SPS, best);
  return report;
}

}  // namespace wsim
