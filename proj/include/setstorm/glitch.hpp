#pragma once

#include <vector>

#include "setstorm/celllib.hpp"
#include "setstorm/config.hpp"

namespace setstorm {

/// Double-exponential strike current. Units: fC, ps; currents come out in mA.
struct GlitchPulse {
  double q_fC = 570.0;
  double tau_alpha_ps = 200.0;  // slow decay
  double tau_beta_ps = 50.0;    // fast rise

  bool operator==(const GlitchPulse&) const = default;
};

/// Throws ConfigError unless q > 0 and tau_alpha > tau_beta > 0.
void check_glitch(const GlitchPulse& p);

/// Reads the [glitch] section. Throws ConfigError.
GlitchPulse load_glitch(const ConfigTree& config);

/// I(t) = Q / (ta - tb) * (exp(-t/ta) - exp(-t/tb)).
double current_at(const GlitchPulse& p, double t_ps);

/// Closed-form integral of current_at over [0, inf).
double total_charge(const GlitchPulse& p);

/// Instant of maximum current: ta*tb/(ta - tb) * ln(ta/tb).
double peak_time(const GlitchPulse& p);

enum class Polarity { Rising, Falling };

struct DigitalPulse {
  double start_ps = 0.0;  // threshold crossing, relative to the strike
  double width_ps = 0.0;  // 0 means the strike never reached vdd/2
  Polarity polarity = Polarity::Rising;

  bool operator==(const DigitalPulse&) const = default;
};

/// Node deviation from the quiescent rail, sampled every `step_ps` over
/// [0, 20 * tau_alpha]. Explicit Euler on C dV/dt = I(t) - V / R_on with V
/// clamped to [0, vdd].
std::vector<double> node_voltage(const GlitchPulse& p, const CellSpec& cell, double vdd,
                                 double step_ps = 1.0);

/// Window where the struck node is past vdd/2. The excursion heads for the
/// rail opposite `node_value`.
DigitalPulse to_digital_pulse(const GlitchPulse& p, const CellSpec& cell, double vdd,
                              bool node_value);

/// Pulse width after one gate of delay d: 0 up to d, 2(w - d) up to 2d, then w.
double attenuate(double w_in, double gate_delay_ps);

}  // namespace setstorm
