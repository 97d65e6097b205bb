#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace setstorm {

struct CellLibrary;

enum class GateKind : std::uint8_t { And, Nand, Or, Nor, Not, Buf, Xor, Xnor };

inline constexpr std::array<GateKind, 8> kAllGateKinds = {
    GateKind::And, GateKind::Nand, GateKind::Or,  GateKind::Nor,
    GateKind::Not, GateKind::Buf,  GateKind::Xor, GateKind::Xnor};

std::string_view gate_kind_name(GateKind kind);
/// Case-insensitive; accepts BUFF as an alias of BUF.
std::optional<GateKind> parse_gate_kind(std::string_view word);

/// Evaluate a gate on 0/1 input values.
bool evaluate_gate(GateKind kind, std::span<const std::uint8_t> inputs);

class NetlistError : public std::runtime_error {
 public:
  enum class Code {
    Syntax,
    UndefinedNet,
    MultiplyDriven,
    UnsupportedGate,
    BadArity,
    MissingCell,
    CombinationalCycle,
  };

  NetlistError(Code code, std::string message, int line = 0, int column = 0,
               std::vector<std::string> nets = {});

  Code code() const { return code_; }
  int line() const { return line_; }
  int column() const { return column_; }
  /// Nets on the offending cycle, for CombinationalCycle.
  const std::vector<std::string>& nets() const { return nets_; }

 private:
  Code code_;
  int line_;
  int column_;
  std::vector<std::string> nets_;
};

struct RawGate {
  std::string output;
  GateKind kind = GateKind::Buf;
  std::vector<std::string> inputs;

  bool operator==(const RawGate&) const = default;
};

struct RawNetlist {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<RawGate> gates;

  bool operator==(const RawNetlist&) const = default;
};

/// Parse ISCAS'85 .bench text. Throws NetlistError.
RawNetlist parse_bench(std::string_view text);
RawNetlist read_bench_file(const std::string& path);
/// One declaration per line in input, output, gate order.
std::string serialize_bench(const RawNetlist& raw);

using NetId = std::uint32_t;
using GateId = std::uint32_t;
using FlipFlopId = std::uint32_t;

inline constexpr std::uint32_t kNone = 0xffffffffu;

struct Net {
  enum class Driver : std::uint8_t { None, InputFlipFlop, Gate };

  std::string name;
  Driver driver = Driver::None;
  std::uint32_t driver_id = kNone;  // flip-flop id or gate id
  std::vector<GateId> fanout;
};

struct GateInst {
  GateKind kind = GateKind::Buf;
  std::vector<NetId> fanin;
  NetId fanout_net = kNone;
  double delay_ps = 0.0;
  double drain_area_um2 = 0.0;
};

/// Ideal positive-edge D flip-flop on a primary input or output.
struct FlipFlop {
  std::string name;
  NetId net = kNone;  // Q-driven net for input flip-flops, sampled net for output ones
  bool on_input = false;
};

struct Circuit {
  std::string name;
  std::vector<GateInst> gates;
  std::vector<Net> nets;
  std::vector<FlipFlop> flip_flops;
  std::vector<FlipFlopId> input_ffs;
  std::vector<FlipFlopId> output_ffs;
  std::vector<int> level_of;
  std::vector<GateId> topo_order;

  std::size_t gate_count() const { return gates.size(); }
  std::size_t input_count() const { return input_ffs.size(); }
  std::size_t output_count() const { return output_ffs.size(); }
  std::size_t ff_count() const { return flip_flops.size(); }
  const std::string& gate_name(GateId g) const { return nets[gates[g].fanout_net].name; }
};

/// Build the circuit: nets, boundary flip-flops, timing and area from the library.
Circuit elaborate(const RawNetlist& raw, const CellLibrary& lib, std::string name = {});

struct LogicDepth {
  int min_depth = 0;
  int max_depth = 0;
  std::vector<int> level_of;
};

/// Topological levels; depth range over the nets sampled by output flip-flops.
LogicDepth levelize(const Circuit& c);

/// Longest register-to-register combinational delay.
double critical_path_ps(const Circuit& c);

/// Empty iff every structural invariant holds.
std::vector<std::string> validate(const Circuit& c);

}  // namespace setstorm
