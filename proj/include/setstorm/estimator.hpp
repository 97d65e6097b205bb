#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "setstorm/celllib.hpp"
#include "setstorm/netlist.hpp"
#include "setstorm/sample.hpp"

namespace setstorm {

/// Sampling population for (d, t, k): drains weighted by area, cycles in
/// [1, n_cycles - 1], offsets on a 1 ps grid over one clock period.
class SampleSpace {
 public:
  /// Throws std::invalid_argument when n_cycles < 2 or the circuit has no gates.
  SampleSpace(const Circuit& c, const CellLibrary& lib, std::size_t n_cycles);

  /// Each (master_seed, i) owns an independent counter-based stream.
  SampleSpec draw(std::uint64_t master_seed, std::uint64_t i) const;

  std::size_t n_cycles() const { return n_cycles_; }
  std::int64_t period_ps() const { return period_ps_; }
  double total_area() const { return cumulative_.back(); }

 private:
  std::vector<double> cumulative_;
  std::size_t n_cycles_;
  std::int64_t period_ps_;
};

SampleSpec draw_sample(std::uint64_t master_seed, std::uint64_t i, const Circuit& c,
                       const CellLibrary& lib, std::size_t n_cycles);

struct EstimatorState {
  std::uint64_t n = 0;        // trials with at least one flip
  std::uint64_t n_m = 0;      // trials with two or more flips
  std::uint64_t n_total = 0;  // every injected trial
  double theta = 0.0;
  double sigma = 0.0;  // 0 until n >= 2
  bool converged = false;

  bool operator==(const EstimatorState&) const = default;
};

/// Fold one trial. Zero-flip trials only advance n_total. Leaves `converged`
/// for the caller to decide.
EstimatorState update(EstimatorState st, const FlipVector& fv);
EstimatorState update(EstimatorState st, std::size_t n_flips);

/// sqrt((theta - theta^2) / (n - 1)). Throws std::domain_error when n < 2.
double std_error(double theta, std::uint64_t n);

struct ConfidenceInterval {
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const ConfidenceInterval&) const = default;
};

/// theta +/- 2 sigma clamped to [0, 1]. Throws std::domain_error when n < 2.
ConfidenceInterval ci95(const EstimatorState& st);

struct StopRule {
  double rel_stderr = 0.1;
  std::uint64_t min_n = 50;
  std::uint64_t min_nm = 10;
  std::uint64_t max_samples = 1'000'000;
  /// Convergence is tested after every `batch` folded trials.
  std::uint64_t batch = 8;
};

bool is_converged(const EstimatorState& st, double rel_target, std::uint64_t min_n,
                  std::uint64_t min_nm);
inline bool is_converged(const EstimatorState& st, const StopRule& rule) {
  return is_converged(st, rule.rel_stderr, rule.min_n, rule.min_nm);
}

/// One-sided 95% upper bound for an event never seen in n trials.
inline double rule_of_three(std::uint64_t n) { return n == 0 ? 1.0 : std::min(1.0, 3.0 / n); }

}  // namespace setstorm
