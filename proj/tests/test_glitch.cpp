#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "setstorm/glitch.hpp"

using namespace setstorm;

TEST_CASE("current endpoints and sign") {
  const GlitchPulse p;
  CHECK(current_at(p, 0.0) == 0.0);
  CHECK(current_at(p, 1e6) == doctest::Approx(0.0).epsilon(1e-12));
  for (double t = 0.0; t < 5000.0; t += 0.5) REQUIRE(current_at(p, t) >= 0.0);
}

TEST_CASE("peak location against a 1 ps scan") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> q(1.0, 1000.0), ta(20.0, 500.0), frac(0.05, 0.9);
  for (int i = 0; i < 200; ++i) {
    GlitchPulse p{q(rng), ta(rng), 0.0};
    p.tau_beta_ps = p.tau_alpha_ps * frac(rng);
    const double t_star = peak_time(p);
    double best_t = 0.0;
    double best = -1.0;
    for (int t = 0; t <= 20 * static_cast<int>(p.tau_alpha_ps); ++t) {
      const double v = current_at(p, t);
      if (v > best) {
        best = v;
        best_t = t;
      }
    }
    CHECK(std::fabs(best_t - t_star) <= 1.0);
    CHECK(current_at(p, t_star) >= best);
  }
}

TEST_CASE("closed-form charge") {
  CHECK(total_charge(GlitchPulse{150.0, 200.0, 50.0}) == doctest::Approx(150.0));
  const GlitchPulse p;
  CHECK(std::fabs(oracle::trapezoid_charge(p, 200000) - p.q_fC) / p.q_fC < 1e-3);
}

TEST_CASE("pulse parameters are validated") {
  CHECK_THROWS_AS(check_glitch(GlitchPulse{0.0, 200.0, 50.0}), ConfigError);
  CHECK_THROWS_AS(check_glitch(GlitchPulse{10.0, 50.0, 50.0}), ConfigError);
  CHECK_THROWS_AS(check_glitch(GlitchPulse{10.0, 40.0, 50.0}), ConfigError);
  CHECK_THROWS_AS(check_glitch(GlitchPulse{10.0, 200.0, 0.0}), ConfigError);
  CHECK_NOTHROW(check_glitch(GlitchPulse{}));

  const GlitchPulse g =
      load_glitch(parse_config("[glitch]\nq_fC = 150\ntau_alpha_ps = 300\ntau_beta_ps = 40\n"));
  CHECK(g == GlitchPulse{150.0, 300.0, 40.0});
  CHECK(load_glitch(parse_config("")) == GlitchPulse{});
  CHECK_THROWS_AS(load_glitch(parse_config("[glitch]\nq = 1\n")), ConfigError);
  CHECK_THROWS_AS(load_glitch(parse_config("[glitch]\ntau_beta_ps = 400\n")), ConfigError);
}

TEST_CASE("attenuate closed-form points") {
  const double d = 100.0;
  CHECK(attenuate(d, d) == 0.0);
  CHECK(attenuate(1.5 * d, d) == doctest::Approx(d));
  CHECK(attenuate(3 * d, d) == 3 * d);
  CHECK(attenuate(0.0, d) == 0.0);
  CHECK(attenuate(2 * d, d) == 2 * d);
}

TEST_CASE("node voltage stays within the rails") {
  const CellSpec cell = default_library().cell(GateKind::Nand);
  const auto v = node_voltage(GlitchPulse{}, cell, 1.8);
  CHECK(v.size() >= 4000);
  for (double x : v) REQUIRE((x >= 0.0 && x <= 1.8));
  CHECK(*std::max_element(v.begin(), v.end()) == 1.8);
}

TEST_CASE("polarity follows the node value") {
  const CellSpec cell = default_library().cell(GateKind::Nand);
  CHECK(to_digital_pulse(GlitchPulse{}, cell, 1.8, true).polarity == Polarity::Falling);
  CHECK(to_digital_pulse(GlitchPulse{}, cell, 1.8, false).polarity == Polarity::Rising);
  CHECK(to_digital_pulse(GlitchPulse{}, cell, 1.8, true).width_ps ==
        to_digital_pulse(GlitchPulse{}, cell, 1.8, false).width_ps);
}

TEST_CASE("critical charge from an RK4 oracle") {
  const CellLibrary lib = default_library();
  for (GateKind k : {GateKind::Nand, GateKind::Xor}) {
    const CellSpec& cell = lib.cell(k);
    const double qc = oracle::critical_charge(GlitchPulse{}, cell.node_cap_fF, cell.ron_kohm,
                                              lib.vdd_V);
    GlitchPulse below;
    below.q_fC = 0.95 * qc;
    GlitchPulse above;
    above.q_fC = 1.05 * qc;
    CHECK(to_digital_pulse(below, cell, lib.vdd_V, false).width_ps == 0.0);
    CHECK(to_digital_pulse(above, cell, lib.vdd_V, false).width_ps > 0.0);
  }
}

TEST_CASE("without recovery the peak equals Q/C") {
  CellSpec cell = default_library().cell(GateKind::Nand);
  cell.ron_kohm = 1e12;
  GlitchPulse p;
  p.q_fC = 6.0;  // Q/C = 1.2 V, above vdd/2 and below the rail
  const auto v = node_voltage(p, cell, 1.8);
  CHECK(*std::max_element(v.begin(), v.end()) == doctest::Approx(1.2).epsilon(0.01));
  CHECK(to_digital_pulse(p, cell, 1.8, false).width_ps > 0.0);
}

TEST_CASE("pulse width is monotone in charge") {
  const CellSpec cell = default_library().cell(GateKind::Nor);
  double prev = 0.0;
  for (double q = 1.0; q <= 2000.0; q *= 1.1) {
    GlitchPulse p;
    p.q_fC = q;
    const double w = to_digital_pulse(p, cell, 1.8, false).width_ps;
    CHECK(w >= prev);
    prev = w;
  }
  CHECK(prev > 0.0);
}

TEST_CASE("default pulse on the default cell") {
  const DigitalPulse d = to_digital_pulse(GlitchPulse{}, default_library().cell(GateKind::And),
                                          1.8, false);
  CHECK(d.start_ps == doctest::Approx(std::round(d.start_ps)));
  CHECK(d.width_ps == doctest::Approx(std::round(d.width_ps)));
  // Wide enough to cross two 100 ps stages unattenuated.
  CHECK(d.width_ps >= 200.0);
}
