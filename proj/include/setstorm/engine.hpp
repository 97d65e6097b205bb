#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "setstorm/bitvec.hpp"
#include "setstorm/celllib.hpp"
#include "setstorm/glitch.hpp"
#include "setstorm/netlist.hpp"
#include "setstorm/sample.hpp"

namespace setstorm {

/// Primary-input vector per clock cycle; bit j drives the j-th INPUT.
struct Stimulus {
  std::size_t width = 0;
  std::vector<BitVec> cycles;

  std::size_t n_cycles() const { return cycles.size(); }
};

/// One line of 0/1 per cycle, '#' comments. Throws std::runtime_error.
Stimulus parse_stimulus(std::string_view text, std::size_t width);
Stimulus read_stimulus_file(const std::string& path, std::size_t width);
std::string serialize_stimulus(const Stimulus& s);
/// Uniform random vectors, reproducible from `seed`.
Stimulus random_stimulus(std::size_t width, std::size_t n_cycles, std::uint64_t seed);

/// Fault-free reference. Flip-flop bit order follows Circuit::flip_flops.
struct ReferenceTrace {
  /// State latched at the edge opening each cycle.
  std::vector<BitVec> ff_state;
  /// Output-FF values captured at the edge closing each cycle.
  std::vector<BitVec> outputs;
  /// Settled value of every net during each cycle.
  std::vector<BitVec> net_values;
  /// Time of the last net transition in each cycle, relative to its opening edge.
  std::vector<double> settle_ps;

  std::size_t n_cycles() const { return ff_state.size(); }

  /// Golden flip-flop state at the edge closing `cycle`.
  BitVec state_after(const Circuit& c, std::size_t cycle) const;
};

/// Timed event-driven simulation of every cycle. Throws std::invalid_argument
/// on a width mismatch or fewer than two cycles.
ReferenceTrace golden_run(const Circuit& c, const Stimulus& s);

/// Half-open interval [lo, hi) of cycle-relative time during which a net
/// holds the complement of its golden value.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

/// Injects strikes and propagates them through the fanout cone. Holds
/// per-instance scratch, so give each worker thread its own simulator;
/// the referenced circuit, library and trace are only read.
class FaultSimulator {
 public:
  FaultSimulator(const Circuit& c, const CellLibrary& lib, const GlitchPulse& glitch,
                 const ReferenceTrace& trace);

  /// Throws std::out_of_range for a bad cycle, drain or offset.
  FlipVector simulate(const SampleSpec& spec);
  /// Same protocol with an explicit digital pulse at the struck node.
  FlipVector simulate_pulse(const SampleSpec& spec, const DigitalPulse& pulse);

  /// Digital pulse produced by a strike on gate `g` (cached per cell kind).
  const DigitalPulse& pulse_for(GateId g) const;

  /// Faulty intervals left on `net` by the last simulation.
  const std::vector<Interval>& faulty_intervals(NetId net) const { return waves_[net]; }

 private:
  void check(const SampleSpec& spec) const;
  void propagate_gate(GateId g, const BitVec& golden);
  void reset();

  const Circuit& circuit_;
  const CellLibrary& lib_;
  const ReferenceTrace& trace_;
  std::array<DigitalPulse, 8> pulses_{};

  std::vector<std::vector<Interval>> waves_;
  std::vector<NetId> touched_;
  std::vector<std::vector<GateId>> buckets_;
  std::vector<std::uint8_t> queued_;
  std::vector<double> points_;
  std::vector<Interval> scratch_;
  std::vector<std::uint8_t> vals_;
  std::vector<std::size_t> cursor_;
};

/// One-shot convenience around FaultSimulator. The stimulus is only used for
/// the width check; its per-cycle values are already folded into `trace`.
FlipVector inject_and_simulate(const Circuit& c, const ReferenceTrace& trace, const Stimulus& s,
                               const SampleSpec& spec, const GlitchPulse& g,
                               const CellLibrary& lib);

}  // namespace setstorm
