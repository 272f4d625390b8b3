#include <cmath>

#include "doctest.h"
#include "oracle.hpp"
#include "util.hpp"
#include "wsim/analysis.hpp"
#include "wsim/postselect.hpp"

using namespace wsim;

TEST_CASE("project") {
  SUBCASE("scheme I at the optimum keeps 3/32") {
    Circuit circuit = build_scheme_I(SchemeParams{});
    FockState evolved = evolve(circuit);
    DetectionPattern pattern = DetectionPattern::one_per_mode({"1", "2", "3", "3'"});
    PostselectionResult result = project(evolved, pattern);
    CHECK(result.probability == doctest::Approx(3.0 / 32).epsilon(1e-12));
    CHECK(result.conditional->norm_sq() == doctest::Approx(1.0).epsilon(1e-13));
  }

  SUBCASE("vacuum pattern on the vacuum state") {
    auto reg = make_registry({"a", "b"});
    FockState vac = make_number_state(reg, {0, 0, 0, 0});
    DetectionPattern pattern;
    pattern.constraints["a"] = ModeConstraint::vacuum();
    pattern.constraints["b"] = ModeConstraint::vacuum();
    PostselectionResult result = project(vac, pattern);
    CHECK(result.probability == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(inner_product(*result.conditional, vac) - Complex{1.0, 0.0}) < 1e-14);
  }

  SUBCASE("blocked circuit yields a tagged zero result, not an exception") {
    SchemeParams params;
    params.r_sq = {0.0, 1.0 / 3.0, 0.5};
    FockState evolved = evolve(build_scheme_I(params));
    PostselectionResult result =
        project(evolved, DetectionPattern::one_per_mode({"1", "2", "3", "3'"}));
    CHECK(result.probability == 0.0);
    CHECK(result.is_zero());
  }

  SUBCASE("projection is idempotent") {
    FockState evolved = evolve(build_scheme_I(SchemeParams{}));
    DetectionPattern pattern = DetectionPattern::one_per_mode({"1", "2", "3", "3'"});
    PostselectionResult once = project(evolved, pattern);
    PostselectionResult twice = project(*once.conditional, pattern);
    CHECK(twice.probability == doctest::Approx(1.0).epsilon(1e-13));
    FockState diff = scale_add(
        {{{1.0, 0.0}, *once.conditional}, {{-1.0, 0.0}, *twice.conditional}});
    CHECK(diff.norm_sq() < 1e-24);
  }

  SUBCASE("unknown pattern mode is a registry error") {
    FockState evolved = evolve(build_scheme_I(SchemeParams{}));
    CHECK_THROWS_AS(project(evolved, DetectionPattern::one_per_mode({"nope"})),
                    RegistryError);
  }
}

TEST_CASE("exhaustive exact patterns sum to one") {
  auto reg = make_registry({"a", "b", "c"});
  std::mt19937 rng(73);
  for (int trial = 0; trial < 10; ++trial) {
    FockState state = testutil::random_state(reg, 4, 8, rng);
    double total = 0.0;
    oracle::enumerate_occupations(6, 4, [&](const std::vector<int>& counts) {
      DetectionPattern pattern;
      pattern.constraints["a"] = ModeConstraint::exact(counts[0], counts[1]);
      pattern.constraints["b"] = ModeConstraint::exact(counts[2], counts[3]);
      pattern.constraints["c"] = ModeConstraint::exact(counts[4], counts[5]);
      total += project(state, pattern).probability;
    });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("trigger selection") {
  Circuit circuit = build_scheme_I(SchemeParams{});
  DetectionPattern pattern = DetectionPattern::one_per_mode({"1", "2", "3", "3'"});
  PostselectionResult selected = project(evolve(circuit), pattern);

  SUBCASE("D1V heralds W_V with cumulative probability 3/64") {
    PostselectionResult branch =
        trigger_select(selected, "1", TriggerOutcome::D1V, false, {"2", "3", "3'"});
    CHECK(branch.probability == doctest::Approx(3.0 / 64).epsilon(1e-12));
    CHECK(fidelity(*branch.conditional, WTarget::equal_weight()) ==
          doctest::Approx(1.0).epsilon(1e-13));
  }

  SUBCASE("D1H plus rotation also heralds W_V") {
    PostselectionResult branch =
        trigger_select(selected, "1", TriggerOutcome::D1H, true, {"2", "3", "3'"});
    CHECK(branch.probability == doctest::Approx(3.0 / 64).epsilon(1e-12));
    CHECK(fidelity(*branch.conditional, WTarget::equal_weight()) ==
          doctest::Approx(1.0).epsilon(1e-13));
  }

  SUBCASE("D1H without rotation is W_H, orthogonal to W_V") {
    PostselectionResult branch =
        trigger_select(selected, "1", TriggerOutcome::D1H, false, {"2", "3", "3'"});
    CHECK(fidelity(*branch.conditional, WTarget::equal_weight()) ==
          doctest::Approx(0.0).epsilon(1e-13));
    CHECK(fidelity(*branch.conditional, WTarget::equal_weight(), WFlavor::H) ==
          doctest::Approx(1.0).epsilon(1e-13));
  }

  SUBCASE("the two trigger branches partition the pattern probability") {
    std::mt19937 rng(79);
    for (int trial = 0; trial < 10; ++trial) {
      SchemeParams params;
      for (int k = 0; k < 3; ++k) {
        params.r_sq[k] = testutil::uniform(rng, 0.1, 0.9);
        params.phi[k] = testutil::uniform(rng, -3, 3);
        params.psi[k] = testutil::uniform(rng, -3, 3);
      }
      PostselectionResult sel = project(evolve(build_scheme_I(params)), pattern);
      double pv =
          trigger_select(sel, "1", TriggerOutcome::D1V, false, {"2", "3", "3'"}).probability;
      double ph =
          trigger_select(sel, "1", TriggerOutcome::D1H, false, {"2", "3", "3'"}).probability;
      CHECK(pv + ph == doctest::Approx(sel.probability).epsilon(1e-12));
    }
  }

  SUBCASE("absent trigger mode throws") {
    CHECK_THROWS_AS(
        trigger_select(selected, "9", TriggerOutcome::D1V, false, {"2", "3", "3'"}),
        RegistryError);
  }
}

TEST_CASE("polarization-dependent BS_1 never hurts the heralded fidelity") {
  // delta_1 only rescales the two branch amplitudes of the output state;
  // the D1V conditional stays exactly W_V.
  for (double delta1 : {-0.2, -0.05, 0.02, 0.1, 0.24}) {
    PerturbationSpec perturbation = PerturbationSpec::for_scheme(SchemeKind::I);
    perturbation.delta_h[0] = delta1 / 2;
    perturbation.delta_v[0] = -delta1 / 2;
    CircuitOutcome out =
        simulate_circuit(build_scheme_I(SchemeParams{}, perturbation));
    CHECK(fidelity(*out.d1v->conditional, WTarget::equal_weight()) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("threshold detection") {
  Circuit circuit = build_scheme_I(SchemeParams{});
  DetectionPattern pattern = DetectionPattern::one_per_mode({"1", "2", "3", "3'"});
  FockState two_pair_out = evolve(circuit);

  Circuit three_pair = circuit;
  three_pair.source = embed(pdc_source_npairs(3), circuit.registry);
  FockState three_pair_out = evolve(three_pair);

  SUBCASE("ideal resolving detectors reproduce the projection probability") {
    DetectorModel ideal{1.0, true};
    CHECK(threshold_outcome_probability(two_pair_out, ideal, pattern) ==
          doctest::Approx(project(two_pair_out, pattern).probability).epsilon(1e-12));
  }

  SUBCASE("dead detectors never satisfy a click pattern") {
    DetectorModel dead{0.0, false};
    CHECK(threshold_outcome_probability(two_pair_out, dead, pattern) == 0.0);
  }

  SUBCASE("resolving detectors reject every three-pair event at unit efficiency") {
    DetectorModel ideal{1.0, true};
    CHECK(threshold_outcome_probability(three_pair_out, ideal, pattern) == 0.0);
  }

  SUBCASE("three-pair false accepts at eta = 0.1 match the loss-enumeration oracle") {
    DetectorModel lossy{0.1, false};
    double p = threshold_outcome_probability(three_pair_out, lossy, pattern);
    // Frozen from the binomial loss-enumeration oracle.
    CHECK(p == doctest::Approx(0.000126943359375).epsilon(1e-10));
    CHECK(p == doctest::Approx(oracle::click_probability(three_pair_out, 0.1, false,
                                                         pattern)).epsilon(1e-12));
    CHECK(p > 0.0);
  }

  SUBCASE("two-pair acceptance at eta = 0.6 is (3/32) eta^4") {
    DetectorModel lossy{0.6, false};
    double p = threshold_outcome_probability(two_pair_out, lossy, pattern);
    CHECK(p == doctest::Approx(3.0 / 32 * std::pow(0.6, 4)).epsilon(1e-12));
    CHECK(p == doctest::Approx(oracle::click_probability(two_pair_out, 0.6, false,
                                                         pattern)).epsilon(1e-12));
  }

  SUBCASE("lossy resolving detectors agree with the oracle too") {
    DetectorModel lossy{0.35, true};
    CHECK(threshold_outcome_probability(three_pair_out, lossy, pattern) ==
          doctest::Approx(oracle::click_probability(three_pair_out, 0.35, true, pattern))
              .epsilon(1e-12));
  }

  SUBCASE("efficiency outside [0, 1] is rejected") {
    CHECK_THROWS_AS(
        threshold_outcome_probability(two_pair_out, DetectorModel{1.5, false}, pattern),
        ElementError);
  }
}

TEST_CASE("pattern JSON") {
  auto reg = make_registry({"1", "2", "3", "3'"});

  DetectionPattern p = DetectionPattern::from_json(
      R"({"1":"one_any","2":"one_any","3":"one_any","3p":"one_any"})", *reg);
  CHECK(p.constraints.size() == 4);
  CHECK(p.constraints.count("3'") == 1);
  CHECK(p.constraints.at("1").kind == ModeConstraint::Kind::OneAny);

  DetectionPattern exact =
      DetectionPattern::from_json(R"({"2":{"H":2,"V":0},"3":"vacuum"})", *reg);
  CHECK(exact.constraints.at("2").kind == ModeConstraint::Kind::Exact);
  CHECK(*exact.constraints.at("2").exact_h == 2);

  CHECK_THROWS_AS(DetectionPattern::from_json(R"({"9":"one_any"})", *reg), ParseError);
  CHECK_THROWS_AS(DetectionPattern::from_json(R"({"1":"sideways"})", *reg), ParseError);
  CHECK_THROWS_AS(DetectionPattern::from_json("[]", *reg), ParseError);
}
