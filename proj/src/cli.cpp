#include "wsim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wsim/analysis.hpp"

namespace wsim {

namespace {

using Json = nlohmann::ordered_json;

SchemeKind parse_scheme(const std::string& name, bool allow_sps = true) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "i" || s == "1") return SchemeKind::I;
  if (s == "ii" || s == "2") return SchemeKind::II;
  if (allow_sps && s == "sps") return SchemeKind::SPS;
  throw ParseError("unknown scheme '" + name + "' (expected I, II" +
                   (allow_sps ? ", or sps" : "") + ")");
}

const char* scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::I:
      return "I";
    case SchemeKind::II:
      return "II";
    case SchemeKind::SPS:
      return "sps";
  }
  return "?";
}

TriggerPolicy parse_trigger(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "d1v") return TriggerPolicy::D1V;
  if (s == "d1h") return TriggerPolicy::D1HRotated;
  if (s == "both") return TriggerPolicy::Both;
  throw ParseError("unknown trigger '" + name + "' (expected d1v, d1h, or both)");
}

Compensation parse_compensation(const std::string& name) {
  if (name == "auto") return Compensation::Auto;
  if (name == "none") return Compensation::None;
  throw ParseError("unknown compensation mode '" + name + "' (expected auto or none)");
}

// Config files override flags: each known field replaces the flag value.
using FieldHandlers = std::map<std::string, std::function<void(const Json&)>>;

void apply_config(const std::string& path, const FieldHandlers& handlers) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open config file '" + path + "'");
  }
  Json config;
  try {
    in >> config;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!config.is_object()) {
    throw ParseError("config file '" + path + "' must hold a JSON object");
  }
  for (const auto& [key, value] : config.items()) {
    auto it = handlers.find(key);
    if (it == handlers.end()) {
      throw ParseError("unknown config field '" + key + "'");
    }
    it->second(value);
  }
}

double config_number(const Json& value, const std::string& field) {
  if (!value.is_number()) {
    throw ParseError("config field '" + field + "' must be a number");
  }
  return value.get<double>();
}

std::string config_string(const Json& value, const std::string& field) {
  if (!value.is_string()) {
    throw ParseError("config field '" + field + "' must be a string");
  }
  return value.get<std::string>();
}

Json double_or_null(std::optional<double> v) {
  return v ? Json(*v) : Json(nullptr);
}

std::vector<double> parse_range(const std::string& text, const std::string& field) {
  // "lo:hi:count" or a single value.
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  try {
    if (parts.size() == 1) {
      return {std::stod(parts[0])};
    }
    if (parts.size() == 3) {
      double lo = std::stod(parts[0]);
      double hi = std::stod(parts[1]);
      long count = std::stol(parts[2]);
      if (count < 1 || count > 100000) {
        throw ParseError("field '" + field + "': count must lie in [1, 100000]");
      }
      std::vector<double> out;
      for (long i = 0; i < count; ++i) {
        out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
      }
      return out;
    }
  } catch (const std::invalid_argument&) {
  } catch (const std::out_of_range&) {
  }
  throw ParseError("field '" + field + "' must be a value or lo:hi:count range");
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::string scheme = "I";
  std::string circuit_file;
  std::string pattern_json;
  double r1sq = 0.25;
  double r2sq = 1.0 / 3.0;
  double r3sq = 0.5;
  std::vector<double> phi{0.0, 0.0, 0.0};
  std::vector<double> psi{0.0, 0.0, 0.0};
  std::string compensation = "auto";
  std::vector<double> delta_h{0.0, 0.0, 0.0};
  std::vector<double> delta_v{0.0, 0.0, 0.0};
  std::string trigger = "both";
  std::string dump_path;
  std::string emit_circuit;
  std::string config_file;

  bool has_perturbation() const {
    for (int k = 0; k < 3; ++k) {
      if (delta_h[k] != 0.0 || delta_v[k] != 0.0) return true;
    }
    return false;
  }
};

SchemeParams scheme_params(const SimulateOpts& o) {
  SchemeParams p;
  p.r_sq = {o.r1sq, o.r2sq, o.r3sq};
  const char* names[3] = {"r1sq", "r2sq", "r3sq"};
  for (int k = 0; k < 3; ++k) {
    if (!(p.r_sq[k] >= 0.0 && p.r_sq[k] <= 1.0)) {
      throw ParseError(std::string("field '") + names[k] + "' must lie in [0, 1]");
    }
    p.phi[k] = o.phi[k];
    p.psi[k] = o.psi[k];
  }
  p.compensation = parse_compensation(o.compensation);
  return p;
}

Json params_json(const SchemeParams& p) {
  Json j;
  j["r_sq"] = {p.r_sq[0], p.r_sq[1], p.r_sq[2]};
  j["phi"] = {p.phi[0], p.phi[1], p.phi[2]};
  j["psi"] = {p.psi[0], p.psi[1], p.psi[2]};
  j["compensation"] = p.compensation == Compensation::Auto ? "auto" : "none";
  return j;
}

int cmd_simulate(const SimulateOpts& opts, std::ostream& out) {
  const bool custom = !opts.circuit_file.empty();
  TriggerPolicy policy = parse_trigger(opts.trigger);

  Circuit circuit;
  std::optional<SchemeKind> kind;
  std::optional<SchemeParams> params;
  std::optional<PerturbationSpec> perturbation;
  if (custom) {
    std::ifstream in(opts.circuit_file);
    if (!in) {
      throw ParseError("cannot open circuit file '" + opts.circuit_file + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    circuit = circuit_from_json(buffer.str());
  } else {
    kind = parse_scheme(opts.scheme);
    params = scheme_params(opts);
    if (opts.has_perturbation()) {
      if (*kind == SchemeKind::SPS) {
        throw ParseError("perturbations apply to schemes I and II only");
      }
      PerturbationSpec spec = PerturbationSpec::for_scheme(*kind);
      for (int k = 0; k < 3; ++k) {
        spec.delta_h[k] = opts.delta_h[k];
        spec.delta_v[k] = opts.delta_v[k];
      }
      perturbation = spec;
    }
    circuit = build_scheme(*kind, *params, perturbation);
  }

  if (!opts.emit_circuit.empty()) {
    std::ofstream circuit_out(opts.emit_circuit);
    if (!circuit_out) {
      throw ParseError("cannot open circuit output file '" + opts.emit_circuit + "'");
    }
    circuit_out << circuit_to_json(circuit) << "\n";
  }

  Json report;
  report["command"] = "simulate";
  report["scheme"] = custom ? Json("custom") : Json(scheme_name(*kind));
  if (params) report["params"] = params_json(*params);
  if (perturbation) {
    Json p;
    p["delta_h"] = perturbation->delta_h;
    p["delta_v"] = perturbation->delta_v;
    p["r_opt_sq"] = perturbation->r_opt_sq;
    report["perturbation"] = p;
  } else {
    report["perturbation"] = nullptr;
  }

  if (!opts.pattern_json.empty()) {
    // Raw pattern run: project the evolved state, no trigger logic.
    DetectionPattern pattern =
        DetectionPattern::from_json(opts.pattern_json, *circuit.registry);
    FockState evolved = evolve(circuit);
    PostselectionResult result = project(evolved, pattern);
    report["probability"] = result.probability * circuit.source_probability;
    report["pattern"] = Json::parse(opts.pattern_json);
    if (!opts.dump_path.empty()) {
      std::ofstream dump(opts.dump_path);
      if (!dump) throw ParseError("cannot open dump file '" + opts.dump_path + "'");
      dump_state(evolved, dump);
    }
    out << report.dump(2) << "\n";
    return 0;
  }

  CircuitOutcome outcome = simulate_circuit(circuit);
  report["probability"] = outcome.overall_probability;

  std::optional<double> closed;
  if (kind && !perturbation) {
    closed = closed_form_probability(*kind, *params);
  }
  report["closed_form"] = double_or_null(closed);
  report["matches_closed_form"] =
      closed ? Json(std::abs(*closed - outcome.overall_probability) < 1e-10)
             : Json(nullptr);

  WTarget target = WTarget::equal_weight();
  std::optional<double> headline;
  if (circuit.trigger_mode) {
    if (outcome.d1v) {
      Json trig;
      double fv = outcome.d1v->conditional ? fidelity(*outcome.d1v->conditional, target)
                                           : 0.0;
      trig["d1v"] = Json{{"probability", outcome.d1v->cumulative_probability},
                         {"fidelity_wv", fv}};
      double fh_raw = outcome.d1h->conditional
                          ? fidelity(*outcome.d1h->conditional, target, WFlavor::H)
                          : 0.0;
      double fh_rot = outcome.d1h_rotated->conditional
                          ? fidelity(*outcome.d1h_rotated->conditional, target)
                          : 0.0;
      trig["d1h"] = Json{{"probability", outcome.d1h->cumulative_probability},
                         {"fidelity_wh", fh_raw},
                         {"fidelity_wv_rotated", fh_rot}};
      switch (policy) {
        case TriggerPolicy::D1V:
          headline = fv;
          break;
        case TriggerPolicy::D1HRotated:
          headline = fh_rot;
          break;
        case TriggerPolicy::Both: {
          double pv = outcome.d1v->cumulative_probability;
          double ph = outcome.d1h_rotated->cumulative_probability;
          if (pv + ph > 0.0) headline = (pv * fv + ph * fh_rot) / (pv + ph);
          break;
        }
      }
      report["trigger"] = trig;
    } else {
      report["trigger"] = nullptr;
    }
  } else {
    report["trigger"] = nullptr;
    if (outcome.conditional_signal) {
      headline = fidelity(*outcome.conditional_signal, target);
    }
  }
  report["conditional_fidelity_wv"] = double_or_null(headline);

  if (!opts.dump_path.empty()) {
    std::ofstream dump(opts.dump_path);
    if (!dump) throw ParseError("cannot open dump file '" + opts.dump_path + "'");
    dump_state(evolve(circuit), dump);
  }

  out << report.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// optimize

struct OptimizeOpts {
  std::string scheme = "I";
  int grid = 64;
  int jobs = 1;
  double lo = 0.0;
  double hi = 1.0;
  std::string config_file;
};

int cmd_optimize(const OptimizeOpts& opts, std::ostream& out) {
  SchemeKind kind = parse_scheme(opts.scheme);
  if (!(opts.lo >= 0.0 && opts.hi <= 1.0 && opts.lo <= opts.hi)) {
    throw ParseError("field 'min'/'max' must satisfy 0 <= min <= max <= 1");
  }
  if (opts.grid < 1 || opts.grid > 4096) {
    throw ParseError("field 'grid' must lie in [1, 4096]");
  }
  if (opts.jobs < 1 || opts.jobs > 64) {
    throw ParseError("field 'jobs' must lie in [1, 64]");
  }
  OptimizeOptions options;
  options.grid_resolution = opts.grid;
  options.jobs = opts.jobs;
  std::array<std::array<double, 2>, 3> bounds = {
      {{opts.lo, opts.hi}, {opts.lo, opts.hi}, {opts.lo, opts.hi}}};
  OptimizationResult result = optimize_probability(kind, bounds, options);

  const double claim_value = 3.0 / 32.0;
  std::array<double, 3> claim_r = optimal_r_sq(kind);
  bool matches = std::abs(result.best_value - claim_value) <= 1e-6;

  Json report;
  report["command"] = "optimize";
  report["scheme"] = scheme_name(kind);
  Json best;
  best["r1_sq"] =
      kind == SchemeKind::SPS ? Json(nullptr) : Json(result.best_params.r_sq[0]);
  best["r2_sq"] = result.best_params.r_sq[1];
  best["r3_sq"] = result.best_params.r_sq[2];
  report["best"] = best;
  report["best_value"] = result.best_value;
  Json claim;
  claim["value"] = claim_value;
  claim["r1_sq"] = kind == SchemeKind::SPS ? Json(nullptr) : Json(claim_r[0]);
  claim["r2_sq"] = claim_r[1];
  claim["r3_sq"] = claim_r[2];
  report["paper_claim"] = claim;
  report["matches_paper"] = matches;
  if (!matches) {
    report["note"] =
        "numerical optimum differs from the published claim; compare best_value "
        "with paper_claim.value";
  }
  Json trace = Json::array();
  for (const auto& [r_sq, value] : result.trace) {
    trace.push_back(Json{{"r_sq", {r_sq[0], r_sq[1], r_sq[2]}}, {"value", value}});
  }
  report["trace"] = trace;
  out << report.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// scan-fidelity

struct ScanOpts {
  std::string scheme = "I";
  std::string trigger = "d1v";
  std::string d1 = "0";
  std::string d2 = "-0.05:0.05:11";
  std::string d3 = "0";
  std::string output = "csv";
  std::string config_file;
};

int cmd_scan(const ScanOpts& opts, std::ostream& out) {
  SchemeKind kind = parse_scheme(opts.scheme, /*allow_sps=*/false);
  TriggerPolicy policy = parse_trigger(opts.trigger);
  std::vector<double> r1 = parse_range(opts.d1, "d1");
  std::vector<double> r2 = parse_range(opts.d2, "d2");
  std::vector<double> r3 = parse_range(opts.d3, "d3");
  if (opts.output != "csv" && opts.output != "json") {
    throw ParseError("field 'output' must be csv or json");
  }

  struct Row {
    double d1, d2, d3, fidelity;
    bool feasible;
  };
  std::vector<Row> rows;
  for (double a : r1) {
    for (double b : r2) {
      for (double c : r3) {
        Row row{a, b, c, std::numeric_limits<double>::quiet_NaN(), false};
        try {
          row.fidelity = fidelity_at_symmetric_delta(kind, {a, b, c}, policy);
          row.feasible = true;
        } catch (const ElementError&) {
          // reflectivity pushed outside [0, 1]: marked nan
        }
        rows.push_back(row);
      }
    }
  }

  std::vector<ScanSample> samples;
  if (r1.size() == 1) {
    for (const Row& row : rows) {
      samples.push_back({row.d2, row.d3, row.fidelity, row.feasible});
    }
  }
  QuadraticFit fit = fit_quadratic(samples);

  // Printed second-order references at delta_1 = 0.
  const double ref22 = kind == SchemeKind::I ? -27.0 / 24 : -2.0 / 9;
  const double ref33 = kind == SchemeKind::I ? -16.0 / 24 : -2.0 / 3;

  if (opts.output == "json") {
    Json report;
    report["command"] = "scan-fidelity";
    report["scheme"] = scheme_name(kind);
    Json jrows = Json::array();
    for (const Row& row : rows) {
      jrows.push_back(Json{{"delta1", row.d1},
                           {"delta2", row.d2},
                           {"delta3", row.d3},
                           {"fidelity", row.feasible ? Json(row.fidelity) : Json(nullptr)}});
    }
    report["rows"] = jrows;
    if (r1.size() == 1) {
      report["fit"] = Json{{"c0", fit.c0},
                           {"b2", fit.b2},
                           {"b3", fit.b3},
                           {"a22", fit.a22},
                           {"a23", fit.a23},
                           {"a33", fit.a33},
                           {"reference_a22", ref22},
                           {"reference_a33", ref33}};
    }
    out << report.dump(2) << "\n";
    return 0;
  }

  const bool emit_d1 = r1.size() > 1;
  if (!emit_d1 && r1[0] != 0.0) {
    out << "# delta1 = " << format_g17(r1[0]) << "\n";
  }
  out << (emit_d1 ? "delta1,delta2,delta3,fidelity" : "delta2,delta3,fidelity") << "\n";
  for (const Row& row : rows) {
    if (emit_d1) out << format_g17(row.d1) << ",";
    out << format_g17(row.d2) << "," << format_g17(row.d3) << ",";
    out << (row.feasible ? format_g17(row.fidelity) : "nan") << "\n";
  }
  if (r1.size() == 1) {
    out << "# fit F ~ c0 + b2 d2 + b3 d3 + a22 d2^2 + a23 d2 d3 + a33 d3^2\n";
    out << "# c0 = " << format_g17(fit.c0) << "\n";
    out << "# a22 = " << format_g17(fit.a22) << " (reference " << format_g17(ref22)
        << ")\n";
    out << "# a23 = " << format_g17(fit.a23) << " (reference 0)\n";
    out << "# a33 = " << format_g17(fit.a33) << " (reference " << format_g17(ref33)
        << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// design

struct DesignOpts {
  std::string target;
  std::string config_file;
};

int cmd_design(const DesignOpts& opts, std::ostream& out) {
  std::vector<double> values;
  std::stringstream ss(opts.target);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ParseError("field 'target' must hold comma-separated numbers");
    }
  }
  WTarget target;
  if (values.size() == 3) {
    target = WTarget::normalized({values[0], 0.0}, {values[1], 0.0}, {values[2], 0.0});
  } else if (values.size() == 6) {
    target = WTarget::normalized({values[0], values[1]}, {values[2], values[3]},
                                 {values[4], values[5]});
  } else {
    throw ParseError("field 'target' needs 3 real or 6 re,im amplitudes");
  }

  DesignResult design = design_w_class(target);
  CircuitOutcome outcome = simulate_circuit(design.circuit);
  double verified = outcome.d1v && outcome.d1v->conditional
                        ? fidelity(*outcome.d1v->conditional, target)
                        : 0.0;

  Json report;
  report["command"] = "design";
  Json jt = Json::array();
  for (const Complex& c : target.c) jt.push_back(Json::array({c.real(), c.imag()}));
  report["target"] = jt;
  const std::array<std::string, 3> modes = {"2", "3", "3'"};
  Json att, bps;
  for (int m = 0; m < 3; ++m) {
    att[modes[m]] =
        Json{{"H", design.attenuation[m][0]}, {"V", design.attenuation[m][1]}};
    bps[modes[m]] = design.bps_theta[m];
  }
  report["attenuation"] = att;
  report["bps_theta_v"] = bps;
  report["predicted_probability"] = design.predicted_probability;
  report["verified_probability"] =
      outcome.d1v ? Json(outcome.d1v->cumulative_probability) : Json(nullptr);
  report["verified_fidelity"] = verified;
  report["fidelity_ok"] = verified >= 1.0 - 1e-9;
  out << report.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// yield / contamination

struct YieldOpts {
  double gamma = 1e-4;
  double sps_rate = 0.4;
  double stimulated_gain = 16.0;
  double ghz_reference = 3.0 / 8.0;
  std::string config_file;
};

int cmd_yield(const YieldOpts& opts, std::ostream& out) {
  YieldModel model{opts.gamma, opts.sps_rate, opts.stimulated_gain, opts.ghz_reference};
  YieldReport r = yield_report(model);
  Json report;
  report["command"] = "yield";
  report["model"] = Json{{"gamma", model.gamma},
                         {"sps_rate", model.sps_rate},
                         {"stimulated_gain", model.stimulated_gain},
                         {"ghz_reference", model.ghz_reference}};
  report["w_per_two_pair"] = r.w_per_two_pair;
  report["ghz_per_two_pair"] = r.ghz_per_two_pair;
  report["ghz_ratio"] = r.ghz_ratio;
  report["stimulated_gain"] = r.stimulated_gain;
  report["sps_three_photon_rate"] = r.sps_three_photon_rate;
  report["sps_w_rate"] = r.sps_w_rate;
  report["sps_w_rate_best"] = r.sps_w_rate_best;
  out << report.dump(2) << "\n";
  return 0;
}

struct ContaminationOpts {
  std::string scheme = "I";
  double gamma = 1e-4;
  double eta = 1.0;
  std::string detectors = "resolving";
  std::string config_file;
};

int cmd_contamination(const ContaminationOpts& opts, std::ostream& out) {
  SchemeKind kind = parse_scheme(opts.scheme, /*allow_sps=*/false);
  bool resolving;
  if (opts.detectors == "resolving") {
    resolving = true;
  } else if (opts.detectors == "threshold") {
    resolving = false;
  } else {
    throw ParseError("field 'detectors' must be resolving or threshold");
  }
  YieldModel model;
  model.gamma = opts.gamma;
  ContaminationReport r =
      contamination_estimate(kind, model, DetectorModel{opts.eta, resolving});
  Json report;
  report["command"] = "contamination";
  report["scheme"] = scheme_name(kind);
  report["gamma"] = opts.gamma;
  report["eta"] = opts.eta;
  report["detectors"] = opts.detectors;
  report["signal_rate"] = r.signal_rate;
  report["false_accept_rate"] = r.false_accept_rate;
  report["ratio"] = r.ratio;
  report["generation_ratio"] = r.generation_ratio;
  out << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact simulator and design tool for post-selected linear-optical "
               "W-state preparation"};
  app.require_subcommand(1);

  SimulateOpts sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Evolve a scheme or circuit and post-select one photon per mode");
  simulate->add_option("--scheme", sim.scheme, "Scheme: I, II, or sps");
  simulate->add_option("--circuit", sim.circuit_file,
                       "Circuit JSON file (overrides --scheme)");
  simulate->add_option("--pattern", sim.pattern_json,
                       "Detection pattern JSON (projection only, skips trigger logic)");
  simulate->add_option("--r1sq", sim.r1sq, "Reflectivity r1^2");
  simulate->add_option("--r2sq", sim.r2sq, "Reflectivity r2^2");
  simulate->add_option("--r3sq", sim.r3sq, "Reflectivity r3^2");
  simulate->add_option("--phi1", sim.phi[0], "Reflected V phase of BS1");
  simulate->add_option("--phi2", sim.phi[1], "Reflected V phase of BS2");
  simulate->add_option("--phi3", sim.phi[2], "Reflected V phase of BS3");
  simulate->add_option("--psi1", sim.psi[0], "Transmitted V phase of BS1");
  simulate->add_option("--psi2", sim.psi[1], "Transmitted V phase of BS2");
  simulate->add_option("--psi3", sim.psi[2], "Transmitted V phase of BS3");
  simulate->add_option("--compensation", sim.compensation,
                       "Phase compensation: auto or none");
  simulate->add_option("--delta1h", sim.delta_h[0], "Reflectivity error delta_1H");
  simulate->add_option("--delta1v", sim.delta_v[0], "Reflectivity error delta_1V");
  simulate->add_option("--delta2h", sim.delta_h[1], "Reflectivity error delta_2H");
  simulate->add_option("--delta2v", sim.delta_v[1], "Reflectivity error delta_2V");
  simulate->add_option("--delta3h", sim.delta_h[2], "Reflectivity error delta_3H");
  simulate->add_option("--delta3v", sim.delta_v[2], "Reflectivity error delta_3V");
  simulate->add_option("--trigger", sim.trigger,
                       "Headline fidelity branch: d1v, d1h, or both");
  simulate->add_option("--dump-state", sim.dump_path,
                       "Write the evolved (pre-selection) state to this file");
  simulate->add_option("--emit-circuit", sim.emit_circuit, "Write the circuit JSON here");
  simulate->add_option("--config", sim.config_file, "JSON config overriding the flags");

  OptimizeOpts opt;
  CLI::App* optimize = app.add_subcommand(
      "optimize", "Maximize the simulated success probability over reflectivities");
  optimize->add_option("--scheme", opt.scheme, "Scheme: I, II, or sps");
  optimize->add_option("--grid", opt.grid, "Coarse scan resolution (default 64)");
  optimize->add_option("--jobs", opt.jobs, "Worker threads for the grid scan");
  optimize->add_option("--min", opt.lo, "Lower bound on every r_k^2");
  optimize->add_option("--max", opt.hi, "Upper bound on every r_k^2");
  optimize->add_option("--config", opt.config_file, "JSON config overriding the flags");

  ScanOpts scan;
  CLI::App* scan_cmd = app.add_subcommand(
      "scan-fidelity", "Tabulate heralded fidelity against reflectivity errors");
  scan_cmd->add_option("--scheme", scan.scheme, "Scheme: I or II");
  scan_cmd->add_option("--trigger", scan.trigger, "Branch: d1v, d1h, or both");
  scan_cmd->add_option("--d1", scan.d1, "delta_1 value or lo:hi:count");
  scan_cmd->add_option("--d2", scan.d2, "delta_2 value or lo:hi:count");
  scan_cmd->add_option("--d3", scan.d3, "delta_3 value or lo:hi:count");
  scan_cmd->add_option("--output", scan.output, "csv (default) or json");
  scan_cmd->add_option("--config", scan.config_file, "JSON config overriding the flags");

  DesignOpts design;
  CLI::App* design_cmd = app.add_subcommand(
      "design", "Attenuator and phase settings for a W-class target state");
  design_cmd
      ->add_option("--target", design.target,
                   "Target amplitudes c1,c2,c3 (or re,im interleaved)")
      ->required();
  design_cmd->add_option("--config", design.config_file,
                         "JSON config overriding the flags");

  YieldOpts yield;
  CLI::App* yield_cmd =
      app.add_subcommand("yield", "Rate comparisons between the schemes and references");
  yield_cmd->add_option("--gamma", yield.gamma, "PDC pair rate per pulse");
  yield_cmd->add_option("--sps-rate", yield.sps_rate, "Single photons per pulse per SPS");
  yield_cmd->add_option("--stimulated-gain", yield.stimulated_gain,
                        "Stimulated PDC gain factor");
  yield_cmd->add_option("--ghz-reference", yield.ghz_reference,
                        "Reference GHZ probability per two-pair event");
  yield_cmd->add_option("--config", yield.config_file, "JSON config overriding the flags");

  ContaminationOpts contamination;
  CLI::App* contamination_cmd = app.add_subcommand(
      "contamination", "Three-pair false accepts relative to the two-pair signal");
  contamination_cmd->add_option("--scheme", contamination.scheme, "Scheme: I or II");
  contamination_cmd->add_option("--gamma", contamination.gamma, "PDC pair rate per pulse");
  contamination_cmd->add_option("--eta", contamination.eta, "Detector efficiency");
  contamination_cmd->add_option("--detectors", contamination.detectors,
                                "resolving or threshold");
  contamination_cmd->add_option("--config", contamination.config_file,
                                "JSON config overriding the flags");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      if (!sim.config_file.empty()) {
        apply_config(
            sim.config_file,
            {{"scheme", [&](const Json& v) { sim.scheme = config_string(v, "scheme"); }},
             {"circuit",
              [&](const Json& v) { sim.circuit_file = config_string(v, "circuit"); }},
             {"pattern",
              [&](const Json& v) {
                sim.pattern_json = v.is_string() ? v.get<std::string>() : v.dump();
              }},
             {"r1sq", [&](const Json& v) { sim.r1sq = config_number(v, "r1sq"); }},
             {"r2sq", [&](const Json& v) { sim.r2sq = config_number(v, "r2sq"); }},
             {"r3sq", [&](const Json& v) { sim.r3sq = config_number(v, "r3sq"); }},
             {"phi1", [&](const Json& v) { sim.phi[0] = config_number(v, "phi1"); }},
             {"phi2", [&](const Json& v) { sim.phi[1] = config_number(v, "phi2"); }},
             {"phi3", [&](const Json& v) { sim.phi[2] = config_number(v, "phi3"); }},
             {"psi1", [&](const Json& v) { sim.psi[0] = config_number(v, "psi1"); }},
             {"psi2", [&](const Json& v) { sim.psi[1] = config_number(v, "psi2"); }},
             {"psi3", [&](const Json& v) { sim.psi[2] = config_number(v, "psi3"); }},
             {"compensation",
              [&](const Json& v) { sim.compensation = config_string(v, "compensation"); }},
             {"delta1h", [&](const Json& v) { sim.delta_h[0] = config_number(v, "delta1h"); }},
             {"delta1v", [&](const Json& v) { sim.delta_v[0] = config_number(v, "delta1v"); }},
             {"delta2h", [&](const Json& v) { sim.delta_h[1] = config_number(v, "delta2h"); }},
             {"delta2v", [&](const Json& v) { sim.delta_v[1] = config_number(v, "delta2v"); }},
             {"delta3h", [&](const Json& v) { sim.delta_h[2] = config_number(v, "delta3h"); }},
             {"delta3v", [&](const Json& v) { sim.delta_v[2] = config_number(v, "delta3v"); }},
             {"trigger", [&](const Json& v) { sim.trigger = config_string(v, "trigger"); }},
             {"dump-state",
              [&](const Json& v) { sim.dump_path = config_string(v, "dump-state"); }},
             {"emit-circuit",
              [&](const Json& v) { sim.emit_circuit = config_string(v, "emit-circuit"); }}});
      }
      return cmd_simulate(sim, out);
    }
    if (optimize->parsed()) {
      if (!opt.config_file.empty()) {
        apply_config(
            opt.config_file,
            {{"scheme", [&](const Json& v) { opt.scheme = config_string(v, "scheme"); }},
             {"grid",
              [&](const Json& v) { opt.grid = static_cast<int>(config_number(v, "grid")); }},
             {"jobs",
              [&](const Json& v) { opt.jobs = static_cast<int>(config_number(v, "jobs")); }},
             {"min", [&](const Json& v) { opt.lo = config_number(v, "min"); }},
             {"max", [&](const Json& v) { opt.hi = config_number(v, "max"); }}});
      }
      return cmd_optimize(opt, out);
    }
    if (scan_cmd->parsed()) {
      if (!scan.config_file.empty()) {
        apply_config(
            scan.config_file,
            {{"scheme", [&](const Json& v) { scan.scheme = config_string(v, "scheme"); }},
             {"trigger", [&](const Json& v) { scan.trigger = config_string(v, "trigger"); }},
             {"d1", [&](const Json& v) { scan.d1 = config_string(v, "d1"); }},
             {"d2", [&](const Json& v) { scan.d2 = config_string(v, "d2"); }},
             {"d3", [&](const Json& v) { scan.d3 = config_string(v, "d3"); }},
             {"output", [&](const Json& v) { scan.output = config_string(v, "output"); }}});
      }
      return cmd_scan(scan, out);
    }
    if (design_cmd->parsed()) {
      if (!design.config_file.empty()) {
        apply_config(design.config_file, {{"target", [&](const Json& v) {
                       design.target = config_string(v, "target");
                     }}});
      }
      return cmd_design(design, out);
    }
    if (yield_cmd->parsed()) {
      if (!yield.config_file.empty()) {
        apply_config(
            yield.config_file,
            {{"gamma", [&](const Json& v) { yield.gamma = config_number(v, "gamma"); }},
             {"sps-rate",
              [&](const Json& v) { yield.sps_rate = config_number(v, "sps-rate"); }},
             {"stimulated-gain",
              [&](const Json& v) {
                yield.stimulated_gain = config_number(v, "stimulated-gain");
              }},
             {"ghz-reference", [&](const Json& v) {
                yield.ghz_reference = config_number(v, "ghz-reference");
              }}});
      }
      return cmd_yield(yield, out);
    }
    if (contamination_cmd->parsed()) {
      if (!contamination.config_file.empty()) {
        apply_config(
            contamination.config_file,
            {{"scheme",
              [&](const Json& v) { contamination.scheme = config_string(v, "scheme"); }},
             {"gamma",
              [&](const Json& v) { contamination.gamma = config_number(v, "gamma"); }},
             {"eta", [&](const Json& v) { contamination.eta = config_number(v, "eta"); }},
             {"detectors", [&](const Json& v) {
                contamination.detectors = config_string(v, "detectors");
              }}});
      }
      return cmd_contamination(contamination, out);
    }
    err << "error: no command selected\n";
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ElementError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateStateError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const RegistryError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace wsim
