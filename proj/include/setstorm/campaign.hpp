#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "setstorm/celllib.hpp"
#include "setstorm/engine.hpp"
#include "setstorm/estimator.hpp"
#include "setstorm/glitch.hpp"
#include "setstorm/netlist.hpp"

namespace setstorm {

struct CampaignConfig {
  std::string netlist_path;
  std::string circuit_name;  // defaults to the netlist file stem

  std::string stimulus_path;  // empty: generate uniform random vectors
  std::uint64_t stimulus_seed = 2012;
  std::size_t n_cycles = 1000;

  CellLibrary lib = default_library();
  GlitchPulse glitch;
  StopRule stop;

  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  std::string out_dir;  // empty: no files written

  std::uint64_t grid_cap = 10'000'000;
  std::int64_t grid_k_step_ps = 100;
};

/// Relative paths in the config resolve against `base_dir`. Throws ConfigError.
CampaignConfig parse_campaign_config(const ConfigTree& tree, const std::string& base_dir = ".");
CampaignConfig load_campaign_config(const std::string& path);
/// Throws ConfigError on the first violated invariant.
void check_config(const CampaignConfig& cfg);

/// Default parallelism: $SETSTORM_WORKERS when set and valid, else 1.
unsigned default_workers();

/// Everything a campaign shares read-only between workers.
struct Workload {
  Circuit circuit;
  Stimulus stimulus;
  ReferenceTrace trace;
  CellLibrary lib;
  GlitchPulse glitch;
};

Workload prepare_workload(const CampaignConfig& cfg);

struct Trial {
  SampleSpec spec;
  FlipVector flips;
};

/// Per-thread trial executor; owns its scratch state.
class TrialWorker {
 public:
  virtual ~TrialWorker() = default;
  virtual Trial run(std::uint64_t index) = 0;
};

class TrialSource {
 public:
  virtual ~TrialSource() = default;
  virtual std::unique_ptr<TrialWorker> make_worker() const = 0;
};

/// Samples (d, t, k) from the area-weighted space and injects each one.
class SampledTrials : public TrialSource {
 public:
  SampledTrials(const Workload& w, std::uint64_t master_seed);
  std::unique_ptr<TrialWorker> make_worker() const override;

 private:
  const Workload& workload_;
  SampleSpace space_;
  std::uint64_t master_seed_;
};

enum class StopReason { Converged, SampleCap, Grid };

const char* stop_reason_name(StopReason r);
std::optional<StopReason> parse_stop_reason(std::string_view name);

struct DriveResult {
  EstimatorState state;
  std::vector<std::uint64_t> histogram;  // index = n_flips
  StopReason reason = StopReason::SampleCap;
};

/// Runs trials 0, 1, 2, ... across `workers` threads and folds them in index
/// order, testing the stop rule every `rule.batch` trials. The outcome
/// depends only on the source and the rule, never on `workers`. `sink` sees
/// every folded trial in order. A worker exception is rethrown after all
/// trials before it have been folded.
DriveResult drive(const TrialSource& source, const StopRule& rule, unsigned workers,
                  const std::function<void(const Trial&)>& sink = {});

struct CampaignReport {
  std::string circuit;
  std::uint64_t gates = 0;
  std::uint64_t inputs = 0;
  std::uint64_t outputs = 0;
  int depth_min = 0;
  int depth_max = 0;
  double clock_period_ps = 0.0;
  double critical_path_ps = 0.0;
  std::uint64_t master_seed = 0;

  std::uint64_t n_total = 0;
  std::uint64_t n = 0;
  std::uint64_t n_m = 0;
  double theta = 0.0;
  double sigma = 0.0;
  ConfidenceInterval ci95;
  double reported_theta = 0.0;  // lower end of the 95% interval
  bool converged = false;
  StopReason stop_reason = StopReason::SampleCap;
  std::optional<double> rule_of_three;  // set when no multi-flip trial was seen
  std::vector<std::uint64_t> histogram;
  double wall_time_s = 0.0;

  bool operator==(const CampaignReport&) const = default;
};

/// Assemble a report from an estimator outcome.
CampaignReport make_report(const Circuit& c, const CellLibrary& lib, std::uint64_t master_seed,
                           const DriveResult& result);

/// Full Monte Carlo run. Writes samples.csv, report.json, report.csv and
/// report.txt under cfg.out_dir when it is set.
CampaignReport run_campaign(const CampaignConfig& cfg);

class GridTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Number of (d, t, k) points the exhaustive grid would visit.
std::uint64_t grid_size(std::uint64_t gates, std::size_t n_cycles, double period_ps,
                        std::int64_t k_step_ps);

/// Enumerates every (d, t, k), splitting the period into `k_step_ps` cells
/// and striking at each cell midpoint. Points are weighted by drain area times
/// cell width, matching the sampler's distribution.
/// Throws GridTooLarge above cfg.grid_cap.
CampaignReport exhaustive_grid(const CampaignConfig& cfg, std::int64_t k_step_ps);

}  // namespace setstorm
