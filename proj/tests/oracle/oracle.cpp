#include "oracle.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "setstorm/rng.hpp"

namespace oracle {

bool gate_value(GateKind kind, const std::vector<std::uint8_t>& in) {
  int ones = 0;
  for (auto v : in) ones += v ? 1 : 0;
  const int n = static_cast<int>(in.size());
  switch (kind) {
    case GateKind::And:
      return ones == n;
    case GateKind::Nand:
      return ones != n;
    case GateKind::Or:
      return ones > 0;
    case GateKind::Nor:
      return ones == 0;
    case GateKind::Not:
      return !in.at(0);
    case GateKind::Buf:
      return in.at(0) != 0;
    case GateKind::Xor:
      return ones % 2 == 1;
    case GateKind::Xnor:
      return ones % 2 == 0;
  }
  throw std::logic_error("bad gate kind");
}

std::vector<std::uint8_t> settle(const Circuit& c, const BitVec& inputs) {
  std::vector<int> memo(c.nets.size(), -1);
  std::function<int(NetId)> value = [&](NetId n) -> int {
    if (memo[n] >= 0) return memo[n];
    const Net& net = c.nets[n];
    int v = 0;
    if (net.driver == Net::Driver::InputFlipFlop) {
      for (std::size_t j = 0; j < c.input_ffs.size(); ++j)
        if (c.input_ffs[j] == net.driver_id) v = inputs[j];
    } else if (net.driver == Net::Driver::Gate) {
      const GateInst& g = c.gates[net.driver_id];
      std::vector<std::uint8_t> in;
      for (NetId f : g.fanin) in.push_back(static_cast<std::uint8_t>(value(f)));
      v = gate_value(g.kind, in);
    }
    return memo[n] = v;
  };
  std::vector<std::uint8_t> out(c.nets.size());
  for (NetId n = 0; n < c.nets.size(); ++n) out[n] = static_cast<std::uint8_t>(value(n));
  return out;
}

long attenuated(long w, long d) {
  if (w <= d) return 0;
  if (w < 2 * d) return 2 * (w - d);
  return w;
}

namespace {

long whole_ps(double x, const char* what) {
  const double r = std::round(x);
  if (std::fabs(x - r) > 1e-9) throw std::invalid_argument(std::string(what) + " is not whole ps");
  return static_cast<long>(r);
}

}  // namespace

std::vector<std::uint8_t> bitmap_flips(const Circuit& c, const CellLibrary& lib,
                                       const Stimulus& s, const SampleSpec& spec,
                                       const DigitalPulse& pulse) {
  const long period = whole_ps(lib.clock_period_ps, "period");
  const long setup = whole_ps(lib.setup_ps, "setup");
  const long hold = whole_ps(lib.hold_ps, "hold");
  const long start = whole_ps(pulse.start_ps, "pulse start");
  const long width = whole_ps(pulse.width_ps, "pulse width");
  long delays = 0;
  for (const auto& g : c.gates) delays += whole_ps(g.delay_ps, "delay");
  const long horizon = period + start + width + delays + 2;

  const std::vector<std::uint8_t> golden = settle(c, s.cycles.at(spec.cycle));
  const NetId struck = c.gates.at(spec.drain).fanout_net;
  using Wave = std::vector<std::uint8_t>;

  std::function<Wave(NetId)> wave = [&](NetId n) -> Wave {
    Wave w(static_cast<std::size_t>(horizon), 0);
    if (n == struck) {
      for (long t = spec.k_ps + start; t < spec.k_ps + start + width; ++t) w[t] = 1;
      return w;
    }
    if (c.nets[n].driver != Net::Driver::Gate) return w;
    const GateInst& g = c.gates[c.nets[n].driver_id];
    std::vector<Wave> ins;
    for (NetId f : g.fanin) ins.push_back(wave(f));
    Wave raw(w.size(), 0);
    std::vector<std::uint8_t> vals(g.fanin.size());
    for (long t = 0; t < horizon; ++t) {
      for (std::size_t i = 0; i < g.fanin.size(); ++i) vals[i] = golden[g.fanin[i]] ^ ins[i][t];
      raw[t] = static_cast<std::uint8_t>(gate_value(g.kind, vals) != (golden[n] != 0));
    }
    const long d = whole_ps(g.delay_ps, "delay");
    for (long t = 0; t < horizon;) {
      if (!raw[t]) {
        ++t;
        continue;
      }
      long e = t;
      while (e < horizon && raw[e]) ++e;
      const long out_w = attenuated(e - t, d);
      for (long u = t + d; u < t + d + out_w && u < horizon; ++u) w[u] = 1;
      t = e;
    }
    return w;
  };

  std::vector<std::uint8_t> flips(c.flip_flops.size(), 0);
  for (FlipFlopId ff : c.output_ffs) {
    const Wave w = wave(c.flip_flops[ff].net);
    for (long t = period - setup; t <= period + hold; ++t)
      if (t >= 0 && t < horizon && w[t]) flips[ff] = 1;
  }
  return flips;
}

std::vector<std::uint8_t> sensitized_nets(const Circuit& c, const std::vector<std::uint8_t>& golden,
                                          GateId drain) {
  std::vector<std::uint8_t> hit(c.nets.size(), 0);
  hit[c.gates.at(drain).fanout_net] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (GateId g = 0; g < c.gates.size(); ++g) {
      const GateInst& gate = c.gates[g];
      if (g == drain || hit[gate.fanout_net]) continue;
      bool any = false;
      bool blocked = false;
      for (NetId f : gate.fanin) {
        if (hit[f]) {
          any = true;
          continue;
        }
        switch (gate.kind) {
          case GateKind::And:
          case GateKind::Nand:
            blocked |= golden[f] == 0;
            break;
          case GateKind::Or:
          case GateKind::Nor:
            blocked |= golden[f] == 1;
            break;
          default:
            break;
        }
      }
      if (any && !blocked) {
        hit[gate.fanout_net] = 1;
        changed = true;
      }
    }
  }
  return hit;
}

std::vector<std::uint8_t> fanout_cone(const Circuit& c, GateId drain) {
  std::vector<std::uint8_t> in_cone(c.gates.size(), 0);
  in_cone[drain] = 1;
  for (bool changed = true; changed;) {
    changed = false;
    for (GateId g = 0; g < c.gates.size(); ++g) {
      if (in_cone[g]) continue;
      for (NetId f : c.gates[g].fanin) {
        const Net& n = c.nets[f];
        if (n.driver == Net::Driver::Gate && in_cone[n.driver_id]) {
          in_cone[g] = 1;
          changed = true;
          break;
        }
      }
    }
  }
  return in_cone;
}

double rk4_peak_voltage(const GlitchPulse& p, double cap_fF, double ron_kohm, double step_ps) {
  auto current = [&](double t) {
    return p.q_fC / (p.tau_alpha_ps - p.tau_beta_ps) *
           (std::exp(-t / p.tau_alpha_ps) - std::exp(-t / p.tau_beta_ps));
  };
  auto dv = [&](double t, double v) { return (current(t) - v / ron_kohm) / cap_fF; };
  double v = 0.0;
  double peak = 0.0;
  const double end = 20.0 * p.tau_alpha_ps;
  for (double t = 0.0; t < end; t += step_ps) {
    const double k1 = dv(t, v);
    const double k2 = dv(t + step_ps / 2, v + step_ps / 2 * k1);
    const double k3 = dv(t + step_ps / 2, v + step_ps / 2 * k2);
    const double k4 = dv(t + step_ps, v + step_ps * k3);
    v += step_ps / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    peak = std::max(peak, v);
  }
  return peak;
}

double critical_charge(const GlitchPulse& shape, double cap_fF, double ron_kohm, double vdd) {
  double lo = 0.0;
  double hi = 1.0;
  GlitchPulse p = shape;
  auto reaches = [&](double q) {
    p.q_fC = q;
    return rk4_peak_voltage(p, cap_fF, ron_kohm, 0.1) >= vdd / 2;
  };
  while (!reaches(hi)) hi *= 2;
  for (int i = 0; i < 50; ++i) {
    const double mid = (lo + hi) / 2;
    (reaches(mid) ? hi : lo) = mid;
  }
  return hi;
}

double trapezoid_charge(const GlitchPulse& p, int intervals) {
  const double end = 50.0 * p.tau_alpha_ps;
  const double h = end / intervals;
  auto current = [&](double t) {
    return p.q_fC / (p.tau_alpha_ps - p.tau_beta_ps) *
           (std::exp(-t / p.tau_alpha_ps) - std::exp(-t / p.tau_beta_ps));
  };
  double sum = (current(0.0) + current(end)) / 2;
  for (int i = 1; i < intervals; ++i) sum += current(i * h);
  return sum * h;
}

namespace {

class BernoulliWorker : public TrialWorker {
 public:
  BernoulliWorker(double p_any, double p_multi, std::uint64_t seed, std::size_t width)
      : p_any_(p_any), p_multi_(p_multi), seed_(seed), width_(width) {}
  Trial run(std::uint64_t index) override {
    CounterStream rng(seed_, index, 2);
    BitVec bits(width_);
    if (rng.uniform01() < p_any_) {
      bits.set(0, true);
      if (rng.uniform01() < p_multi_) bits.set(1, true);
    }
    Trial t;
    t.spec.sample_index = index;
    t.flips = FlipVector(bits);
    return t;
  }

 private:
  double p_any_;
  double p_multi_;
  std::uint64_t seed_;
  std::size_t width_;
};

class EvenWorker : public TrialWorker {
 public:
  EvenWorker(std::uint64_t count, std::uint64_t period) : count_(count), period_(period) {}
  Trial run(std::uint64_t index) override {
    BitVec bits(2);
    bits.set(0, true);
    if (index % period_ < count_) bits.set(1, true);
    Trial t;
    t.spec.sample_index = index;
    t.flips = FlipVector(bits);
    return t;
  }

 private:
  std::uint64_t count_;
  std::uint64_t period_;
};

}  // namespace

BernoulliTrials::BernoulliTrials(double p_any, double p_multi, std::uint64_t seed,
                                 std::size_t width)
    : p_any_(p_any), p_multi_(p_multi), seed_(seed), width_(width) {}

std::unique_ptr<TrialWorker> BernoulliTrials::make_worker() const {
  return std::make_unique<BernoulliWorker>(p_any_, p_multi_, seed_, width_);
}

EvenTrials::EvenTrials(std::uint64_t count, std::uint64_t period) : count_(count), period_(period) {}

std::unique_ptr<TrialWorker> EvenTrials::make_worker() const {
  return std::make_unique<EvenWorker>(count_, period_);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace oracle
