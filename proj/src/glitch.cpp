#include "setstorm/glitch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace setstorm {

void check_glitch(const GlitchPulse& p) {
  if (!(p.q_fC > 0.0)) throw ConfigError("[glitch] q_fC must be positive");
  if (!(p.tau_beta_ps > 0.0)) throw ConfigError("[glitch] tau_beta_ps must be positive");
  if (!(p.tau_alpha_ps > p.tau_beta_ps))
    throw ConfigError("[glitch] tau_alpha_ps must exceed tau_beta_ps");
}

GlitchPulse load_glitch(const ConfigTree& config) {
  GlitchPulse p;
  SectionReader r(find_section(config, "glitch"), "glitch");
  if (auto v = r.number("q_fC")) p.q_fC = *v;
  if (auto v = r.number("tau_alpha_ps")) p.tau_alpha_ps = *v;
  if (auto v = r.number("tau_beta_ps")) p.tau_beta_ps = *v;
  r.check_unknown();
  check_glitch(p);
  return p;
}

double current_at(const GlitchPulse& p, double t_ps) {
  const double scale = p.q_fC / (p.tau_alpha_ps - p.tau_beta_ps);
  return scale * (std::exp(-t_ps / p.tau_alpha_ps) - std::exp(-t_ps / p.tau_beta_ps));
}

double total_charge(const GlitchPulse& p) {
  // Q / (ta - tb) * (ta - tb)
  return p.q_fC / (p.tau_alpha_ps - p.tau_beta_ps) * (p.tau_alpha_ps - p.tau_beta_ps);
}

double peak_time(const GlitchPulse& p) {
  const double a = p.tau_alpha_ps;
  const double b = p.tau_beta_ps;
  return a * b / (a - b) * std::log(a / b);
}

std::vector<double> node_voltage(const GlitchPulse& p, const CellSpec& cell, double vdd,
                                 double step_ps) {
  const auto steps = static_cast<std::size_t>(std::ceil(20.0 * p.tau_alpha_ps / step_ps));
  std::vector<double> v(steps + 1, 0.0);
  // fC/ps = mA, mA/fF = V/ps, V/kOhm = mA.
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) * step_ps;
    const double dv = (current_at(p, t) - v[i] / cell.ron_kohm) / cell.node_cap_fF;
    v[i + 1] = std::clamp(v[i] + step_ps * dv, 0.0, vdd);
  }
  return v;
}

DigitalPulse to_digital_pulse(const GlitchPulse& p, const CellSpec& cell, double vdd,
                              bool node_value) {
  DigitalPulse out;
  out.polarity = node_value ? Polarity::Falling : Polarity::Rising;
  const auto v = node_voltage(p, cell, vdd, 1.0);
  const double threshold = vdd / 2.0;
  auto first = std::find_if(v.begin(), v.end(), [&](double x) { return x > threshold; });
  if (first == v.end()) return out;
  auto last = std::find_if(first, v.end(), [&](double x) { return x <= threshold; });
  out.start_ps = static_cast<double>(first - v.begin());
  out.width_ps = static_cast<double>(last - first);
  return out;
}

double attenuate(double w_in, double gate_delay_ps) {
  const double d = gate_delay_ps;
  if (w_in <= d) return 0.0;
  if (w_in < 2.0 * d) return 2.0 * (w_in - d);
  return w_in;
}

}  // namespace setstorm
