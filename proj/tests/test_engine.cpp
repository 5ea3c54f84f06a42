#include <catch2/catch_amalgamated.hpp>

#include "qicloak/analytic.hpp"
#include "qicloak/engine.hpp"

using namespace qicloak;
using namespace qicloak::engine;

namespace {
ProtocolParams mild_point() {
  ProtocolParams p;
  p.N = 0.08;
  p.n_th = 0.9;
  p.eta = 0.88;
  p.phi = 0.9;
  p.G = 1.25;
  p.chi = 0.85;
  return p;
}

OracleSettings fast_settings() {
  OracleSettings s;
  s.tolerance = 1e-5;
  return s;
}
}  // namespace

TEST_CASE("protocol names round-trip") {
  for (auto p : {Protocol::Classical, Protocol::Quadrature, Protocol::Jm,
                 Protocol::JmImperfect}) {
    CHECK(protocol_from_name(protocol_name(p)) == p);
  }
  CHECK_THROWS_AS(protocol_from_name("psychic"), InvalidParameterError);
  CHECK(uses_mixer(Protocol::Jm));
  CHECK(uses_mixer(Protocol::JmImperfect));
  CHECK_FALSE(uses_mixer(Protocol::Quadrature));
}

TEST_CASE("oracle reproduces every closed form at a mild operating point") {
  const ProtocolParams p = mild_point();
  for (auto proto : {Protocol::Classical, Protocol::Quadrature, Protocol::Jm,
                     Protocol::JmImperfect}) {
    OracleEvaluator ev(proto, p, fast_settings());
    const auto out = converged_point(ev, p);
    const auto oracle = snr_from_moments(out.at_zero.mean, out.at_phi.mean,
                                         out.at_phi.second);
    const auto closed = analytic_snr(proto, p, analytic::kAdjudicatedVariant);
    double worst = 0.0;
    for (const auto& f : compare_breakdowns(closed, oracle))
      worst = std::max(worst, f.rel);
    INFO(protocol_name(proto));
    CHECK(worst <= std::max(1e-5, 100.0 * out.tail_mass));
  }
}

TEST_CASE("oracle point must share the prefix parameters") {
  OracleEvaluator ev(Protocol::Quadrature, mild_point(), fast_settings());
  ProtocolParams other = mild_point();
  other.N = 0.2;
  CHECK_THROWS_AS(ev.moments_at(other), InvalidParameterError);
  other = mild_point();
  other.phi = 2.2;  // phase may vary freely against one prefix
  CHECK_NOTHROW(ev.moments_at(other));
}

TEST_CASE("cloak phase may act before or after the background mixes in") {
  const ProtocolParams p = mild_point();
  for (auto proto : {Protocol::Quadrature, Protocol::Jm}) {
    OracleSettings after = fast_settings();
    OracleSettings before = fast_settings();
    before.object_before_background = true;
    OracleEvaluator ea(proto, p, after);
    OracleEvaluator eb(proto, p, before);
    const auto ma = converged_point(ea, p);
    const auto mb = converged_point(eb, p);
    const double sa =
        snr_from_moments(ma.at_zero.mean, ma.at_phi.mean, ma.at_phi.second).snr;
    const double sb =
        snr_from_moments(mb.at_zero.mean, mb.at_phi.mean, mb.at_phi.second).snr;
    INFO(protocol_name(proto));
    CHECK(std::abs(sa - sb) / sa < 1e-10);
  }
}

TEST_CASE("the full validation grid passes") {
  const auto report = cross_validate(default_validation_grid(), fast_settings());
  CHECK(report.all_passed);
  CHECK(report.mixer_mean_variant == analytic::kAdjudicatedVariant);
  for (const auto& e : report.entries) {
    INFO(protocol_name(e.protocol) << " worst " << e.worst_rel << " at " << e.worst_field);
    CHECK(e.status == ValidationStatus::Pass);
  }
}

TEST_CASE("a rigged coefficient is caught and the field is named") {
  Perturbation bug;
  bug.protocol = Protocol::Quadrature;
  bug.field = "noise_var";
  bug.factor = 1.01;
  std::vector<ValidationPoint> pts{{mild_point(), {Protocol::Quadrature}}};
  const auto report = cross_validate(pts, fast_settings(), &bug);
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].status == ValidationStatus::Fail);
  CHECK(report.entries[0].worst_field == "noise_var");
  CHECK_FALSE(report.all_passed);

  SECTION("other protocols are untouched by the rig") {
    std::vector<ValidationPoint> cls{{mild_point(), {Protocol::Classical}}};
    const auto clean = cross_validate(cls, fast_settings(), &bug);
    CHECK(clean.entries[0].status == ValidationStatus::Pass);
  }
}

TEST_CASE("an impossible truncation budget is reported, not mislabeled") {
  OracleSettings tiny = fast_settings();
  tiny.side_cap = 256;
  ProtocolParams hot = mild_point();
  hot.n_th = 3.0;
  std::vector<ValidationPoint> pts{{hot, {Protocol::Quadrature}}};
  const auto report = cross_validate(pts, tiny);
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].status == ValidationStatus::Inconclusive);
  CHECK_FALSE(report.entries[0].note.empty());
  CHECK_FALSE(report.all_passed);
}

TEST_CASE("unknown perturbation fields are rejected") {
  Perturbation bug;
  bug.protocol = Protocol::Classical;
  bug.field = "not_a_field";
  SnrBreakdown b = analytic::classical_snr(mild_point());
  CHECK_THROWS_AS(perturb_field(b, bug.field, 1.01), InvalidParameterError);
}

TEST_CASE("scenario runner ties the pieces together") {
  ScenarioConfig cfg;
  cfg.params = mild_point();
  cfg.protocol = Protocol::Quadrature;
  cfg.oracle = false;
  const auto res = run_scenario(cfg);
  CHECK_FALSE(res.oracle.has_value());
  CHECK(res.analytic.snr == Catch::Approx(analytic::quantum_snr(cfg.params).snr));
  CHECK(res.ratio_to_classical ==
        Catch::Approx(analytic::quantum_snr(cfg.params).snr /
                      analytic::classical_snr(cfg.params).snr)
            .epsilon(1e-12));
  cfg.oracle = true;
  const auto full = run_scenario(cfg);
  REQUIRE(full.oracle.has_value());
  REQUIRE(full.oracle_discrepancy.has_value());
  CHECK(*full.oracle_discrepancy <= 1e-5);
  CHECK(full.dims.signal > 0);
}

TEST_CASE("sweeps honor the axis order and only fill live columns") {
  ScenarioConfig base;
  base.params = mild_point();
  base.protocol = Protocol::Quadrature;
  base.oracle = false;
  std::vector<SweepAxis> axes{{"N", {0.05, 0.1}}, {"phi", {0.4, 0.9, 1.5}}};
  const auto t = sweep(base, axes);
  REQUIRE(t.rows.size() == 6);
  // First axis is outermost: N stays put for three consecutive rows.
  CHECK(*t.rows[0]["N"] == 0.05);
  CHECK(*t.rows[2]["N"] == 0.05);
  CHECK(*t.rows[3]["N"] == 0.1);
  CHECK(*t.rows[1]["phi"] == 0.9);
  CHECK_FALSE(t.rows[0]["G"].has_value());
  CHECK_FALSE(t.rows[0]["chi"].has_value());
  CHECK_FALSE(t.rows[0]["oracle_discrepancy"].has_value());
  CHECK(t.rows[0]["snr_quantum"].has_value());
  CHECK(t.rows[0]["ratio"].has_value());
  CHECK(t.metadata.protocol == "quadrature");

  SECTION("mixer sweeps fill the gain column") {
    base.protocol = Protocol::Jm;
    const auto tj = sweep(base, {{"G", {1.1, 1.3}}});
    REQUIRE(tj.rows.size() == 2);
    CHECK(*tj.rows[0]["G"] == 1.1);
    CHECK(tj.rows[0]["snr_jm"].has_value());
    CHECK_FALSE(tj.rows[0]["chi"].has_value());
  }
  SECTION("unknown axis names fail before any work") {
    CHECK_THROWS_AS(sweep(base, {{"volume", {1.0}}}), InvalidParameterError);
  }
}

TEST_CASE("sweep oracle column reports the per-point discrepancy") {
  ScenarioConfig base;
  base.params = mild_point();
  base.protocol = Protocol::Classical;
  base.oracle = true;
  const auto t = sweep(base, {{"phi", {0.6, 1.2}}});
  REQUIRE(t.rows.size() == 2);
  for (const auto& r : t.rows) {
    REQUIRE(r["oracle_discrepancy"].has_value());
    CHECK(*r["oracle_discrepancy"] <= 1e-5);
  }
}

TEST_CASE("advantage boundary from bisection matches the closed form") {
  const double eta = 0.8, n_th = 5.0;
  const auto root = find_gain_boundary(eta, n_th);
  REQUIRE(root.has_value());
  CHECK(*root == Catch::Approx(analytic::gain_region_upper_bound(eta, n_th))
                     .epsilon(1e-9));

  // Nearly-noiseless background: the boundary collapses toward zero
  // brightness but still matches the closed form.
  const auto tiny = find_gain_boundary(0.999, 0.1);
  REQUIRE(tiny.has_value());
  CHECK(*tiny ==
        Catch::Approx(analytic::gain_region_upper_bound(0.999, 0.1)).epsilon(1e-9));
}

TEST_CASE("efficiency boundary brackets the advantage loss") {
  ProtocolParams p;
  p.N = 1e-4;
  p.eta = 0.99;
  p.G = 1.01;
  p.n_th = 1e3;
  p.phi = std::acos(-1.0);
  const auto chi = find_efficiency_boundary(p);
  REQUIRE(chi.has_value());
  CHECK(*chi > 0.5);
  CHECK(std::abs(*chi - analytic::efficiency_threshold(p)) < 0.05);
  // Crossing is genuine: just above the root the mixer wins, just below
  // it loses.
  auto probe = p;
  probe.chi = *chi * 1.01;
  const double above = analytic::imperfect_jm_snr(probe).snr /
                       analytic::classical_snr(probe).snr;
  probe.chi = *chi * 0.99;
  const double below = analytic::imperfect_jm_snr(probe).snr /
                       analytic::classical_snr(probe).snr;
  CHECK(above > 1.0);
  CHECK(below < 1.0);
}

TEST_CASE("set_param reaches every scenario knob") {
  ProtocolParams p;
  set_param(p, "N", 0.3);
  set_param(p, "n_th", 2.0);
  set_param(p, "eta", 0.5);
  set_param(p, "phi", 1.0);
  set_param(p, "G", 1.6);
  set_param(p, "chi", 0.4);
  CHECK(p.N == 0.3);
  CHECK(p.chi == 0.4);
  CHECK_THROWS_AS(set_param(p, "volume", 1.0), InvalidParameterError);
}
