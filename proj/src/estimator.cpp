#include "setstorm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "setstorm/rng.hpp"

namespace setstorm {

namespace {

constexpr std::uint32_t kSampleDomain = 0;

}  // namespace

SampleSpace::SampleSpace(const Circuit& c, const CellLibrary& lib, std::size_t n_cycles)
    : n_cycles_(n_cycles), period_ps_(static_cast<std::int64_t>(std::floor(lib.clock_period_ps))) {
  if (n_cycles < 2) throw std::invalid_argument("sampling needs at least two cycles");
  if (c.gates.empty()) throw std::invalid_argument("circuit has no gates to strike");
  cumulative_.reserve(c.gates.size());
  double sum = 0.0;
  for (const auto& g : c.gates) {
    sum += g.drain_area_um2;
    cumulative_.push_back(sum);
  }
}

SampleSpec SampleSpace::draw(std::uint64_t master_seed, std::uint64_t i) const {
  CounterStream rng(master_seed, i, kSampleDomain);
  SampleSpec s;
  s.sample_index = i;

  const double u = rng.uniform01() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  s.drain = static_cast<std::uint32_t>(it - cumulative_.begin());

  s.cycle = static_cast<std::uint32_t>(1 + rng.below(n_cycles_ - 1));
  s.k_ps = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(period_ps_)));
  return s;
}

SampleSpec draw_sample(std::uint64_t master_seed, std::uint64_t i, const Circuit& c,
                       const CellLibrary& lib, std::size_t n_cycles) {
  return SampleSpace(c, lib, n_cycles).draw(master_seed, i);
}

EstimatorState update(EstimatorState st, std::size_t n_flips) {
  ++st.n_total;
  if (n_flips >= 1) ++st.n;
  if (n_flips >= 2) ++st.n_m;
  if (st.n > 0) st.theta = static_cast<double>(st.n_m) / static_cast<double>(st.n);
  st.sigma = st.n >= 2 ? std_error(st.theta, st.n) : 0.0;
  return st;
}

EstimatorState update(EstimatorState st, const FlipVector& fv) {
  return update(st, fv.n_flips);
}

double std_error(double theta, std::uint64_t n) {
  if (n < 2) throw std::domain_error("standard error needs at least two trials");
  // theta - theta^2 can round slightly negative at theta = 1.
  const double var = std::max(0.0, theta - theta * theta);
  return std::sqrt(var / static_cast<double>(n - 1));
}

ConfidenceInterval ci95(const EstimatorState& st) {
  if (st.n < 2) throw std::domain_error("confidence interval needs at least two flipping trials");
  return {std::clamp(st.theta - 2.0 * st.sigma, 0.0, 1.0),
          std::clamp(st.theta + 2.0 * st.sigma, 0.0, 1.0)};
}

bool is_converged(const EstimatorState& st, double rel_target, std::uint64_t min_n,
                  std::uint64_t min_nm) {
  // Exact ties of the strict rule can round either way; count them as not converged.
  constexpr double kTie = 1e-12;
  return st.n >= min_n && st.n_m >= min_nm && st.sigma < rel_target * st.theta * (1.0 - kTie);
}

}  // namespace setstorm
