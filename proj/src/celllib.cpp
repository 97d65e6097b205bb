#include "setstorm/celllib.hpp"

#include <string>

namespace setstorm {

namespace {

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw ConfigError(what + " must be positive (got " + std::to_string(v) + ")");
}

}  // namespace

CellLibrary default_library() {
  CellLibrary lib;
  for (GateKind kind : kAllGateKinds) {
    CellSpec& cell = lib.cells[static_cast<std::size_t>(kind)];
    cell.kind = kind;
    const bool parity = kind == GateKind::Xor || kind == GateKind::Xnor;
    cell.delay_ps = parity ? 150.0 : 100.0;
  }
  return lib;
}

void check_library(const CellLibrary& lib) {
  for (GateKind kind : kAllGateKinds) {
    const CellSpec* cell = lib.find(kind);
    const std::string label = "cell." + std::string(gate_kind_name(kind));
    if (!cell) throw ConfigError("library does not cover " + label);
    require_positive(cell->delay_ps, label + " delay_ps");
    require_positive(cell->drain_area_um2, label + " drain_area_um2");
    require_positive(cell->node_cap_fF, label + " node_cap_fF");
    require_positive(cell->ron_kohm, label + " ron_kohm");
  }
  require_positive(lib.vdd_V, "supply vdd_V");
  require_positive(lib.clock_period_ps, "clock period_ps");
  if (lib.setup_ps < 0.0) throw ConfigError("flipflop setup_ps must be non-negative");
  if (lib.hold_ps < 0.0) throw ConfigError("flipflop hold_ps must be non-negative");
  if (lib.setup_ps + lib.hold_ps >= lib.clock_period_ps)
    throw ConfigError("flipflop setup_ps + hold_ps must be below the clock period");
}

CellLibrary load_library(const ConfigTree& config) {
  CellLibrary lib = default_library();

  SectionReader clock(find_section(config, "clock"), "clock");
  auto period = clock.number("period_ps");
  auto freq = clock.number("frequency_MHz");
  clock.check_unknown();
  if (period && freq) throw ConfigError("[clock] give either period_ps or frequency_MHz, not both");
  if (period) lib.clock_period_ps = *period;
  if (freq) {
    require_positive(*freq, "clock frequency_MHz");
    lib.clock_period_ps = 1e6 / *freq;
  }

  SectionReader ff(find_section(config, "flipflop"), "flipflop");
  if (auto v = ff.number("setup_ps")) lib.setup_ps = *v;
  if (auto v = ff.number("hold_ps")) lib.hold_ps = *v;
  ff.check_unknown();

  SectionReader supply(find_section(config, "supply"), "supply");
  if (auto v = supply.number("vdd_V")) lib.vdd_V = *v;
  supply.check_unknown();

  for (const auto& [name, section] : config) {
    if (name.rfind("cell.", 0) != 0) continue;
    auto kind = parse_gate_kind(std::string_view(name).substr(5));
    if (!kind) throw ConfigError("[" + name + "] names an unsupported gate kind");
    CellSpec& cell = lib.cells[static_cast<std::size_t>(*kind)];
    SectionReader r(&section, name);
    if (auto v = r.number("delay_ps")) cell.delay_ps = *v;
    if (auto v = r.number("drain_area_um2")) {
      cell.drain_area_um2 = *v;
      cell.area_per_pin = false;
    }
    if (auto v = r.flag("area_per_pin")) cell.area_per_pin = *v;
    if (auto v = r.number("node_cap_fF")) cell.node_cap_fF = *v;
    if (auto v = r.number("ron_kohm")) cell.ron_kohm = *v;
    r.check_unknown();
  }

  check_library(lib);
  return lib;
}

double total_drain_area(const Circuit& c) {
  double sum = 0.0;
  for (const auto& g : c.gates) sum += g.drain_area_um2;
  return sum;
}

}  // namespace setstorm
