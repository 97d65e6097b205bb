#include "setstorm/engine.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "setstorm/rng.hpp"

namespace setstorm {

namespace {

constexpr std::uint32_t kStimulusDomain = 1;

}  // namespace

Stimulus parse_stimulus(std::string_view text, std::size_t width) {
  Stimulus s;
  s.width = width;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line.erase(std::remove_if(line.begin(), line.end(),
                              [](unsigned char ch) { return std::isspace(ch); }),
               line.end());
    if (line.empty()) continue;
    if (line.size() != width)
      throw std::runtime_error("stimulus line " + std::to_string(line_no) + ": width " +
                               std::to_string(line.size()) + ", expected " +
                               std::to_string(width));
    try {
      s.cycles.push_back(BitVec::from_string(line));
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("stimulus line " + std::to_string(line_no) +
                               ": only 0 and 1 are allowed");
    }
  }
  return s;
}

Stimulus read_stimulus_file(const std::string& path, std::size_t width) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stimulus '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_stimulus(ss.str(), width);
}

std::string serialize_stimulus(const Stimulus& s) {
  std::string out;
  for (const auto& v : s.cycles) out += v.to_string() + "\n";
  return out;
}

Stimulus random_stimulus(std::size_t width, std::size_t n_cycles, std::uint64_t seed) {
  Stimulus s;
  s.width = width;
  s.cycles.reserve(n_cycles);
  for (std::size_t c = 0; c < n_cycles; ++c) {
    CounterStream rng(seed, c, kStimulusDomain);
    BitVec v(width);
    std::uint64_t word = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j % 64 == 0) word = rng.next_u64();
      v.set(j, (word >> (j % 64)) & 1u);
    }
    s.cycles.push_back(std::move(v));
  }
  return s;
}

BitVec ReferenceTrace::state_after(const Circuit& c, std::size_t cycle) const {
  const std::size_t next = std::min(cycle + 1, n_cycles() - 1);
  BitVec state(c.ff_count());
  for (FlipFlopId ff : c.input_ffs) state.set(ff, ff_state[next][ff]);
  for (std::size_t o = 0; o < c.output_ffs.size(); ++o)
    state.set(c.output_ffs[o], outputs[cycle][o]);
  return state;
}

ReferenceTrace golden_run(const Circuit& c, const Stimulus& s) {
  if (s.width != c.input_count())
    throw std::invalid_argument("stimulus width " + std::to_string(s.width) +
                                " does not match " + std::to_string(c.input_count()) +
                                " primary inputs");
  if (s.n_cycles() < 2) throw std::invalid_argument("stimulus needs at least two cycles");
  for (const auto& v : s.cycles)
    if (v.size() != s.width) throw std::invalid_argument("stimulus vector width mismatch");

  const std::size_t n_nets = c.nets.size();
  std::vector<std::uint8_t> value(n_nets, 0);
  std::vector<std::uint8_t> inputs;
  auto eval = [&](GateId g) {
    const auto& gate = c.gates[g];
    inputs.clear();
    for (NetId in : gate.fanin) inputs.push_back(value[in]);
    return static_cast<std::uint8_t>(evaluate_gate(gate.kind, inputs));
  };
  // Quiescent start: all inputs low, logic settled.
  for (GateId g : c.topo_order) value[c.gates[g].fanout_net] = eval(g);
  std::vector<std::uint8_t> projected = value;

  // (time, sequence, net, value); the sequence keeps same-time events FIFO.
  using Event = std::tuple<double, std::uint64_t, NetId, std::uint8_t>;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
  std::uint64_t seq = 0;
  std::vector<std::uint64_t> stamp(c.gates.size(), 0);
  std::uint64_t epoch = 0;
  std::vector<GateId> active;

  ReferenceTrace trace;
  const std::size_t n = s.n_cycles();
  trace.ff_state.reserve(n);
  trace.outputs.reserve(n);
  trace.net_values.reserve(n);
  for (std::size_t cyc = 0; cyc < n; ++cyc) {
    for (std::size_t j = 0; j < c.input_ffs.size(); ++j) {
      const NetId net = c.flip_flops[c.input_ffs[j]].net;
      const auto v = static_cast<std::uint8_t>(s.cycles[cyc][j]);
      if (v != projected[net]) {
        queue.emplace(0.0, seq++, net, v);
        projected[net] = v;
      }
    }
    double last = 0.0;
    while (!queue.empty()) {
      const double now = std::get<0>(queue.top());
      ++epoch;
      active.clear();
      while (!queue.empty() && std::get<0>(queue.top()) == now) {
        auto [t, id, net, v] = queue.top();
        queue.pop();
        if (value[net] == v) continue;
        value[net] = v;
        last = now;
        for (GateId g : c.nets[net].fanout) {
          if (stamp[g] != epoch) {
            stamp[g] = epoch;
            active.push_back(g);
          }
        }
      }
      for (GateId g : active) {
        const NetId out = c.gates[g].fanout_net;
        const std::uint8_t v = eval(g);
        if (v != projected[out]) {
          queue.emplace(now + c.gates[g].delay_ps, seq++, out, v);
          projected[out] = v;
        }
      }
    }

    BitVec nets(n_nets);
    for (std::size_t i = 0; i < n_nets; ++i) nets.set(i, value[i]);
    BitVec outs(c.output_ffs.size());
    for (std::size_t o = 0; o < c.output_ffs.size(); ++o)
      outs.set(o, value[c.flip_flops[c.output_ffs[o]].net]);
    BitVec state(c.ff_count());
    for (std::size_t j = 0; j < c.input_ffs.size(); ++j)
      state.set(c.input_ffs[j], s.cycles[cyc][j]);
    if (cyc > 0)
      for (std::size_t o = 0; o < c.output_ffs.size(); ++o)
        state.set(c.output_ffs[o], trace.outputs[cyc - 1][o]);

    trace.ff_state.push_back(std::move(state));
    trace.outputs.push_back(std::move(outs));
    trace.net_values.push_back(std::move(nets));
    trace.settle_ps.push_back(last);
  }
  return trace;
}

FaultSimulator::FaultSimulator(const Circuit& c, const CellLibrary& lib,
                               const GlitchPulse& glitch, const ReferenceTrace& trace)
    : circuit_(c), lib_(lib), trace_(trace) {
  for (GateKind kind : kAllGateKinds)
    pulses_[static_cast<std::size_t>(kind)] =
        to_digital_pulse(glitch, lib.cell(kind), lib.vdd_V, false);
  waves_.resize(c.nets.size());
  queued_.assign(c.gates.size(), 0);
  int max_level = 0;
  for (int l : c.level_of) max_level = std::max(max_level, l);
  buckets_.resize(static_cast<std::size_t>(max_level) + 1);
}

const DigitalPulse& FaultSimulator::pulse_for(GateId g) const {
  return pulses_[static_cast<std::size_t>(circuit_.gates.at(g).kind)];
}

void FaultSimulator::check(const SampleSpec& spec) const {
  if (spec.cycle < 1 || spec.cycle + 1 > trace_.n_cycles())
    throw std::out_of_range("cycle " + std::to_string(spec.cycle) + " outside [1, " +
                            std::to_string(trace_.n_cycles() - 1) + "]");
  if (spec.drain >= circuit_.gates.size())
    throw std::out_of_range("drain gate id " + std::to_string(spec.drain) + " out of range");
  if (spec.k_ps < 0 || static_cast<double>(spec.k_ps) >= lib_.clock_period_ps)
    throw std::out_of_range("injection offset " + std::to_string(spec.k_ps) +
                            " ps outside the clock period");
}

void FaultSimulator::reset() {
  for (NetId n : touched_) waves_[n].clear();
  touched_.clear();
}

FlipVector FaultSimulator::simulate(const SampleSpec& spec) {
  check(spec);
  return simulate_pulse(spec, pulse_for(spec.drain));
}

FlipVector FaultSimulator::simulate_pulse(const SampleSpec& spec, const DigitalPulse& pulse) {
  check(spec);
  reset();
  const Circuit& c = circuit_;
  const BitVec& golden = trace_.net_values[spec.cycle];

  if (pulse.width_ps > 0.0) {
    const NetId struck = c.gates[spec.drain].fanout_net;
    const double lo = static_cast<double>(spec.k_ps) + pulse.start_ps;
    waves_[struck].push_back({lo, lo + pulse.width_ps});
    touched_.push_back(struck);

    const auto first = static_cast<std::size_t>(c.level_of[spec.drain]);
    for (GateId g : c.nets[struck].fanout) {
      queued_[g] = 1;
      buckets_[static_cast<std::size_t>(c.level_of[g])].push_back(g);
    }
    for (std::size_t level = first + 1; level < buckets_.size(); ++level) {
      auto& bucket = buckets_[level];
      for (std::size_t i = 0; i < bucket.size(); ++i) {
        queued_[bucket[i]] = 0;
        propagate_gate(bucket[i], golden);
      }
      bucket.clear();
    }
  }

  const double edge = lib_.clock_period_ps;
  const double window_lo = edge - lib_.setup_ps;
  const double window_hi = edge + lib_.hold_ps;
  BitVec golden_ff = trace_.state_after(c, spec.cycle);
  BitVec faulty_ff = golden_ff;
  for (FlipFlopId ff : c.output_ffs) {
    for (const Interval& iv : waves_[c.flip_flops[ff].net]) {
      if (iv.lo <= window_hi && iv.hi > window_lo) {
        faulty_ff.flip(ff);
        break;
      }
    }
  }
  return diff(golden_ff, faulty_ff);
}

void FaultSimulator::propagate_gate(GateId g, const BitVec& golden) {
  const Circuit& c = circuit_;
  const GateInst& gate = c.gates[g];

  points_.clear();
  for (NetId in : gate.fanin)
    for (const Interval& iv : waves_[in]) {
      points_.push_back(iv.lo);
      points_.push_back(iv.hi);
    }
  if (points_.empty()) return;
  std::sort(points_.begin(), points_.end());
  points_.erase(std::unique(points_.begin(), points_.end()), points_.end());

  // Sweep the elementary segments between breakpoints, evaluating the gate on
  // instantaneous input values.
  const std::size_t fanin = gate.fanin.size();
  vals_.resize(fanin);
  cursor_.assign(fanin, 0);
  auto& vals = vals_;
  auto& cursor = cursor_;

  const bool out_golden = golden[gate.fanout_net];
  scratch_.clear();
  bool open = false;
  double open_at = 0.0;
  for (std::size_t p = 0; p + 1 < points_.size(); ++p) {
    const double t = points_[p];
    for (std::size_t i = 0; i < fanin; ++i) {
      const NetId in = gate.fanin[i];
      const auto& wave = waves_[in];
      auto& k = cursor[i];
      while (k < wave.size() && wave[k].hi <= t) ++k;
      const bool faulty = k < wave.size() && wave[k].lo <= t;
      vals[i] = static_cast<std::uint8_t>(golden[in] != faulty);
    }
    const bool differs = evaluate_gate(gate.kind, vals) != out_golden;
    if (differs && !open) {
      open = true;
      open_at = t;
    } else if (!differs && open) {
      open = false;
      scratch_.push_back({open_at, t});
    }
  }
  if (open) scratch_.push_back({open_at, points_.back()});

  auto& out = waves_[gate.fanout_net];
  for (const Interval& iv : scratch_) {
    const double w = attenuate(iv.hi - iv.lo, gate.delay_ps);
    if (w <= 0.0) continue;
    const double lo = iv.lo + gate.delay_ps;
    out.push_back({lo, lo + w});
  }
  if (out.empty()) return;
  touched_.push_back(gate.fanout_net);
  for (GateId succ : c.nets[gate.fanout_net].fanout) {
    if (!queued_[succ]) {
      queued_[succ] = 1;
      buckets_[static_cast<std::size_t>(c.level_of[succ])].push_back(succ);
    }
  }
}

FlipVector inject_and_simulate(const Circuit& c, const ReferenceTrace& trace, const Stimulus& s,
                               const SampleSpec& spec, const GlitchPulse& g,
                               const CellLibrary& lib) {
  if (s.width != c.input_count() || s.n_cycles() != trace.n_cycles())
    throw std::invalid_argument("stimulus does not match the reference trace");
  FaultSimulator sim(c, lib, g, trace);
  return sim.simulate(spec);
}

}  // namespace setstorm
