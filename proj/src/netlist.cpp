#include "setstorm/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "setstorm/celllib.hpp"

namespace setstorm {

namespace {

constexpr std::array<std::string_view, 8> kKindNames = {"AND", "NAND", "OR",  "NOR",
                                                        "NOT", "BUF",  "XOR", "XNOR"};

bool is_name_char(char ch) {
  return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.' || ch == '[' ||
         ch == ']';
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) ==
                  std::toupper(static_cast<unsigned char>(y));
         });
}

// Cursor over one source line; columns are 1-based.
class LineScanner {
 public:
  LineScanner(std::string_view text, int line) : text_(text), line_(line) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  int column() const { return static_cast<int>(pos_) + 1; }

  std::string_view name(const char* what) {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    if (pos_ == start) fail(std::string("expected ") + what);
    return text_.substr(start, pos_ - start);
  }

  void expect(char ch) {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != ch) fail(std::string("expected '") + ch + "'");
    ++pos_;
  }

  bool accept(char ch) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ch) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message) const {
    std::ostringstream os;
    os << "line " << line_ << ", column " << column() << ": syntax error: " << message;
    throw NetlistError(NetlistError::Code::Syntax, os.str(), line_, column());
  }

 private:
  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

struct Location {
  int line = 0;
  int column = 0;
};

std::string where(const Location& loc) {
  return "line " + std::to_string(loc.line) + ", column " + std::to_string(loc.column);
}

}  // namespace

NetlistError::NetlistError(Code code, std::string message, int line, int column,
                           std::vector<std::string> nets)
    : std::runtime_error(std::move(message)),
      code_(code),
      line_(line),
      column_(column),
      nets_(std::move(nets)) {}

std::string_view gate_kind_name(GateKind kind) { return kKindNames[static_cast<int>(kind)]; }

std::optional<GateKind> parse_gate_kind(std::string_view word) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (iequals(word, kKindNames[i])) return static_cast<GateKind>(i);
  if (iequals(word, "BUFF")) return GateKind::Buf;
  return std::nullopt;
}

bool evaluate_gate(GateKind kind, std::span<const std::uint8_t> in) {
  switch (kind) {
    case GateKind::And:
    case GateKind::Nand: {
      bool v = std::all_of(in.begin(), in.end(), [](std::uint8_t x) { return x != 0; });
      return kind == GateKind::And ? v : !v;
    }
    case GateKind::Or:
    case GateKind::Nor: {
      bool v = std::any_of(in.begin(), in.end(), [](std::uint8_t x) { return x != 0; });
      return kind == GateKind::Or ? v : !v;
    }
    case GateKind::Xor:
    case GateKind::Xnor: {
      bool v = false;
      for (auto x : in) v ^= (x != 0);
      return kind == GateKind::Xor ? v : !v;
    }
    case GateKind::Not:
      return in[0] == 0;
    case GateKind::Buf:
      return in[0] != 0;
  }
  return false;
}

RawNetlist parse_bench(std::string_view text) {
  RawNetlist raw;
  std::vector<Location> gate_locs;
  std::vector<std::vector<Location>> input_locs;
  std::vector<Location> output_locs;
  std::vector<Location> pi_locs;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    LineScanner sc(line, line_no);
    if (sc.at_end()) continue;

    sc.skip_space();
    const int head_col = sc.column();
    std::string_view head = sc.name("declaration");
    if (sc.accept('(')) {
      const bool is_input = iequals(head, "INPUT");
      if (!is_input && !iequals(head, "OUTPUT")) {
        std::ostringstream os;
        os << "line " << line_no << ", column " << head_col << ": syntax error: expected INPUT, "
           << "OUTPUT or an assignment, got '" << head << "'";
        throw NetlistError(NetlistError::Code::Syntax, os.str(), line_no, head_col);
      }
      sc.skip_space();
      const Location loc{line_no, sc.column()};
      std::string name(sc.name("net name"));
      sc.expect(')');
      if (!sc.at_end()) sc.fail("trailing characters");
      if (is_input) {
        raw.inputs.push_back(std::move(name));
        pi_locs.push_back(loc);
      } else {
        raw.outputs.push_back(std::move(name));
        output_locs.push_back(loc);
      }
      continue;
    }

    sc.expect('=');
    sc.skip_space();
    const int kind_col = sc.column();
    std::string_view kind_word = sc.name("gate kind");
    auto kind = parse_gate_kind(kind_word);
    if (!kind) {
      std::ostringstream os;
      os << "line " << line_no << ", column " << kind_col << ": unsupported gate kind '"
         << kind_word << "'";
      throw NetlistError(NetlistError::Code::UnsupportedGate, os.str(), line_no, kind_col);
    }
    sc.expect('(');
    RawGate gate{std::string(head), *kind, {}};
    std::vector<Location> locs;
    do {
      sc.skip_space();
      locs.push_back({line_no, sc.column()});
      gate.inputs.emplace_back(sc.name("net name"));
    } while (sc.accept(','));
    sc.expect(')');
    if (!sc.at_end()) sc.fail("trailing characters");

    const bool unary = *kind == GateKind::Not || *kind == GateKind::Buf;
    if ((unary && gate.inputs.size() != 1) || (!unary && gate.inputs.size() < 2)) {
      std::ostringstream os;
      os << "line " << line_no << ": " << gate_kind_name(*kind) << " gate '" << gate.output
         << "' has " << gate.inputs.size() << " inputs";
      throw NetlistError(NetlistError::Code::BadArity, os.str(), line_no, head_col);
    }
    raw.gates.push_back(std::move(gate));
    gate_locs.push_back({line_no, head_col});
    input_locs.push_back(std::move(locs));
  }

  std::unordered_map<std::string_view, Location> driven;
  auto drive = [&](const std::string& name, const Location& loc) {
    auto [it, fresh] = driven.emplace(name, loc);
    if (!fresh) {
      throw NetlistError(NetlistError::Code::MultiplyDriven,
                         where(loc) + ": net '" + name + "' is already driven (" +
                             where(it->second) + ")",
                         loc.line, loc.column);
    }
  };
  for (std::size_t i = 0; i < raw.inputs.size(); ++i) drive(raw.inputs[i], pi_locs[i]);
  for (std::size_t g = 0; g < raw.gates.size(); ++g) drive(raw.gates[g].output, gate_locs[g]);

  auto require = [&](const std::string& name, const Location& loc) {
    if (!driven.contains(name)) {
      throw NetlistError(NetlistError::Code::UndefinedNet,
                         where(loc) + ": undefined net '" + name + "'", loc.line, loc.column);
    }
  };
  for (std::size_t g = 0; g < raw.gates.size(); ++g)
    for (std::size_t i = 0; i < raw.gates[g].inputs.size(); ++i)
      require(raw.gates[g].inputs[i], input_locs[g][i]);
  for (std::size_t o = 0; o < raw.outputs.size(); ++o) require(raw.outputs[o], output_locs[o]);

  return raw;
}

RawNetlist read_bench_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open netlist '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bench(ss.str());
}

std::string serialize_bench(const RawNetlist& raw) {
  std::ostringstream os;
  for (const auto& n : raw.inputs) os << "INPUT(" << n << ")\n";
  for (const auto& n : raw.outputs) os << "OUTPUT(" << n << ")\n";
  for (const auto& g : raw.gates) {
    os << g.output << " = " << gate_kind_name(g.kind) << "(";
    for (std::size_t i = 0; i < g.inputs.size(); ++i) os << (i ? ", " : "") << g.inputs[i];
    os << ")\n";
  }
  return os.str();
}

Circuit elaborate(const RawNetlist& raw, const CellLibrary& lib, std::string name) {
  Circuit c;
  c.name = std::move(name);

  std::unordered_map<std::string, NetId> net_of;
  auto add_net = [&](const std::string& n) {
    const auto id = static_cast<NetId>(c.nets.size());
    c.nets.push_back(Net{n, Net::Driver::None, kNone, {}});
    net_of.emplace(n, id);
    return id;
  };
  auto lookup = [&](const std::string& n) {
    auto it = net_of.find(n);
    if (it == net_of.end())
      throw NetlistError(NetlistError::Code::UndefinedNet, "undefined net '" + n + "'");
    return it->second;
  };

  std::unordered_set<std::string> ff_names;
  auto unique_ff_name = [&](const std::string& base) {
    std::string n = base;
    for (int k = 2; !ff_names.insert(n).second; ++k) n = base + "#" + std::to_string(k);
    return n;
  };

  for (const auto& pi : raw.inputs) {
    if (net_of.contains(pi))
      throw NetlistError(NetlistError::Code::MultiplyDriven, "net '" + pi + "' declared twice");
    const NetId id = add_net(pi);
    const auto ff = static_cast<FlipFlopId>(c.flip_flops.size());
    c.flip_flops.push_back({unique_ff_name(pi), id, true});
    c.input_ffs.push_back(ff);
    c.nets[id].driver = Net::Driver::InputFlipFlop;
    c.nets[id].driver_id = ff;
  }
  for (std::size_t g = 0; g < raw.gates.size(); ++g) {
    const auto& rg = raw.gates[g];
    if (net_of.contains(rg.output))
      throw NetlistError(NetlistError::Code::MultiplyDriven,
                         "net '" + rg.output + "' is driven more than once");
    const NetId id = add_net(rg.output);
    c.nets[id].driver = Net::Driver::Gate;
    c.nets[id].driver_id = static_cast<GateId>(g);
  }

  c.gates.resize(raw.gates.size());
  for (std::size_t g = 0; g < raw.gates.size(); ++g) {
    const auto& rg = raw.gates[g];
    const CellSpec* cell = lib.find(rg.kind);
    if (!cell)
      throw NetlistError(NetlistError::Code::MissingCell,
                         "cell library has no entry for " + std::string(gate_kind_name(rg.kind)));
    auto& gate = c.gates[g];
    gate.kind = rg.kind;
    gate.fanout_net = net_of.at(rg.output);
    for (const auto& in : rg.inputs) {
      const NetId n = lookup(in);
      gate.fanin.push_back(n);
      auto& fo = c.nets[n].fanout;
      if (fo.empty() || fo.back() != g) fo.push_back(static_cast<GateId>(g));
    }
    gate.delay_ps = cell->delay_ps;
    gate.drain_area_um2 = cell->area_for(gate.fanin.size());
  }

  for (const auto& po : raw.outputs) {
    const NetId id = lookup(po);
    const auto ff = static_cast<FlipFlopId>(c.flip_flops.size());
    c.flip_flops.push_back({unique_ff_name(po), id, false});
    c.output_ffs.push_back(ff);
  }

  // Kahn's algorithm over gates; leftovers lie on or behind a cycle.
  const std::size_t n_gates = c.gates.size();
  std::vector<int> pending(n_gates, 0);
  for (std::size_t g = 0; g < n_gates; ++g)
    for (NetId in : c.gates[g].fanin)
      if (c.nets[in].driver == Net::Driver::Gate) ++pending[g];
  std::vector<GateId> order;
  order.reserve(n_gates);
  for (std::size_t g = 0; g < n_gates; ++g)
    if (pending[g] == 0) order.push_back(static_cast<GateId>(g));
  for (std::size_t head = 0; head < order.size(); ++head) {
    const auto& gate = c.gates[order[head]];
    for (GateId succ : c.nets[gate.fanout_net].fanout) {
      int edges = 0;
      for (NetId in : c.gates[succ].fanin)
        if (in == gate.fanout_net) ++edges;
      pending[succ] -= edges;
      if (pending[succ] == 0) order.push_back(succ);
    }
  }
  if (order.size() != n_gates) {
    GateId g = 0;
    while (pending[g] == 0) ++g;
    std::vector<GateId> path;
    std::vector<int> seen(n_gates, -1);
    while (seen[g] < 0) {
      seen[g] = static_cast<int>(path.size());
      path.push_back(g);
      for (NetId in : c.gates[g].fanin) {
        const auto& net = c.nets[in];
        if (net.driver == Net::Driver::Gate && pending[net.driver_id] > 0) {
          g = net.driver_id;
          break;
        }
      }
    }
    std::vector<std::string> cycle;
    for (auto i = static_cast<std::size_t>(seen[g]); i < path.size(); ++i)
      cycle.push_back(c.gate_name(path[i]));
    std::reverse(cycle.begin(), cycle.end());
    std::string msg = "combinational cycle through nets:";
    for (const auto& n : cycle) msg += " " + n;
    throw NetlistError(NetlistError::Code::CombinationalCycle, msg, 0, 0, std::move(cycle));
  }
  c.topo_order = std::move(order);
  c.level_of = levelize(c).level_of;
  return c;
}

LogicDepth levelize(const Circuit& c) {
  LogicDepth d;
  const std::size_t n = c.gates.size();
  d.level_of.assign(n, -1);

  // Memoised longest-path recursion, iterative so deep chains do not recurse.
  std::vector<GateId> stack;
  for (GateId root = 0; root < n; ++root) {
    if (d.level_of[root] >= 0) continue;
    stack.push_back(root);
    while (!stack.empty()) {
      const GateId g = stack.back();
      int level = 0;
      bool ready = true;
      for (NetId in : c.gates[g].fanin) {
        const auto& net = c.nets[in];
        if (net.driver != Net::Driver::Gate) continue;
        const int l = d.level_of[net.driver_id];
        if (l < 0) {
          stack.push_back(net.driver_id);
          ready = false;
        } else {
          level = std::max(level, l);
        }
      }
      if (ready) {
        d.level_of[g] = level + 1;
        stack.pop_back();
      }
    }
  }

  bool first = true;
  for (FlipFlopId ff : c.output_ffs) {
    const auto& net = c.nets[c.flip_flops[ff].net];
    const int l = net.driver == Net::Driver::Gate ? d.level_of[net.driver_id] : 0;
    d.min_depth = first ? l : std::min(d.min_depth, l);
    d.max_depth = first ? l : std::max(d.max_depth, l);
    first = false;
  }
  return d;
}

double critical_path_ps(const Circuit& c) {
  std::vector<double> arrival(c.nets.size(), 0.0);
  for (GateId g : c.topo_order) {
    const auto& gate = c.gates[g];
    double a = 0.0;
    for (NetId in : gate.fanin) a = std::max(a, arrival[in]);
    arrival[gate.fanout_net] = a + gate.delay_ps;
  }
  double worst = 0.0;
  for (FlipFlopId ff : c.output_ffs) worst = std::max(worst, arrival[c.flip_flops[ff].net]);
  return worst;
}

std::vector<std::string> validate(const Circuit& c) {
  std::vector<std::string> diags;
  const std::size_t n_nets = c.nets.size();
  const std::size_t n_gates = c.gates.size();

  for (std::size_t g = 0; g < n_gates; ++g) {
    const auto& gate = c.gates[g];
    const std::string label = "gate " + std::to_string(g);
    const bool unary = gate.kind == GateKind::Not || gate.kind == GateKind::Buf;
    if ((unary && gate.fanin.size() != 1) || (!unary && gate.fanin.size() < 2))
      diags.push_back(label + ": fanin arity " + std::to_string(gate.fanin.size()) +
                      " does not match " + std::string(gate_kind_name(gate.kind)));
    if (!(gate.delay_ps > 0.0)) diags.push_back(label + ": delay_ps must be positive");
    if (!(gate.drain_area_um2 > 0.0)) diags.push_back(label + ": drain_area_um2 must be positive");
    if (gate.fanout_net >= n_nets) {
      diags.push_back(label + ": output net id out of range");
    } else {
      const auto& out = c.nets[gate.fanout_net];
      if (out.driver != Net::Driver::Gate || out.driver_id != g)
        diags.push_back(label + ": output net '" + out.name + "' does not name it as driver");
    }
    for (NetId in : gate.fanin)
      if (in >= n_nets) diags.push_back(label + ": fanin net id out of range");
  }

  for (std::size_t n = 0; n < n_nets; ++n) {
    const auto& net = c.nets[n];
    if (net.driver == Net::Driver::None) {
      diags.push_back("net '" + net.name + "' is floating (no driver)");
    } else if (net.driver == Net::Driver::Gate && net.driver_id >= n_gates) {
      diags.push_back("net '" + net.name + "' names a gate driver out of range");
    } else if (net.driver == Net::Driver::InputFlipFlop &&
               (net.driver_id >= c.flip_flops.size() || !c.flip_flops[net.driver_id].on_input)) {
      diags.push_back("net '" + net.name + "' names an invalid input flip-flop");
    }
  }

  if (c.flip_flops.size() != c.input_ffs.size() + c.output_ffs.size())
    diags.push_back("flip-flop count differs from primary input + output count");
  for (FlipFlopId ff : c.input_ffs) {
    if (ff >= c.flip_flops.size() || !c.flip_flops[ff].on_input) {
      diags.push_back("input flip-flop id " + std::to_string(ff) + " is invalid");
      continue;
    }
    const NetId q = c.flip_flops[ff].net;
    if (q >= n_nets || c.nets[q].driver != Net::Driver::InputFlipFlop || c.nets[q].driver_id != ff)
      diags.push_back("input flip-flop '" + c.flip_flops[ff].name + "' does not drive its net");
  }
  for (FlipFlopId ff : c.output_ffs) {
    if (ff >= c.flip_flops.size() || c.flip_flops[ff].on_input || c.flip_flops[ff].net >= n_nets)
      diags.push_back("output flip-flop id " + std::to_string(ff) + " is invalid");
  }

  if (c.level_of.size() != n_gates) {
    diags.push_back("level_of has " + std::to_string(c.level_of.size()) + " entries for " +
                    std::to_string(n_gates) + " gates");
  } else {
    for (std::size_t g = 0; g < n_gates; ++g) {
      for (NetId in : c.gates[g].fanin) {
        if (in >= n_nets) continue;
        const auto& net = c.nets[in];
        if (net.driver == Net::Driver::Gate && net.driver_id < n_gates &&
            c.level_of[g] <= c.level_of[net.driver_id])
          diags.push_back("gate " + std::to_string(g) + ": level not above driver of '" +
                          net.name + "'");
      }
    }
  }
  return diags;
}

}  // namespace setstorm
