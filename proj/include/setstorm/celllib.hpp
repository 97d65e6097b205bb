#pragma once

#include <array>
#include <cstddef>

#include "setstorm/config.hpp"
#include "setstorm/netlist.hpp"

namespace setstorm {

struct CellSpec {
  GateKind kind = GateKind::Buf;
  double delay_ps = 100.0;
  /// Per-pin area when `area_per_pin`, else the whole-instance area.
  double drain_area_um2 = 0.5;
  double node_cap_fF = 5.0;
  double ron_kohm = 2.0;
  bool area_per_pin = true;

  /// Susceptible drain area of one instance with `fanin` inputs.
  double area_for(std::size_t fanin) const {
    return area_per_pin ? drain_area_um2 * static_cast<double>(fanin + 1) : drain_area_um2;
  }
};

struct CellLibrary {
  std::array<CellSpec, 8> cells{};
  double vdd_V = 1.8;
  double setup_ps = 50.0;
  double hold_ps = 30.0;
  double clock_period_ps = 10000.0;

  const CellSpec& cell(GateKind kind) const { return cells[static_cast<std::size_t>(kind)]; }
  const CellSpec* find(GateKind kind) const {
    const auto i = static_cast<std::size_t>(kind);
    return i < cells.size() && cells[i].kind == kind ? &cells[i] : nullptr;
  }
};

/// 180nm-class placeholders: 100 ps per stage (150 ps for XOR/XNOR), 5 fF,
/// 2 kOhm, 0.5 um^2 per pin, 1.8 V, 50/30 ps setup/hold, 100 MHz clock.
CellLibrary default_library();

/// Reads [clock], [flipflop], [supply] and [cell.<KIND>]; everything else in
/// the tree is ignored. Throws ConfigError.
CellLibrary load_library(const ConfigTree& config);

/// Throws ConfigError on the first violated invariant.
void check_library(const CellLibrary& lib);

double total_drain_area(const Circuit& c);

}  // namespace setstorm
