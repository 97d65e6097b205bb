#include "setstorm/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <thread>

#include "setstorm/report.hpp"

namespace setstorm {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base_dir) / path).lexically_normal().string();
}

bool is_library_section(const std::string& name) {
  return name == "clock" || name == "flipflop" || name == "supply" || name.rfind("cell.", 0) == 0;
}

struct Slot {
  Trial trial;
  std::exception_ptr error;
};

// Runs trials [begin, end) on up to workers.size() threads into `slots`.
void run_block(std::vector<std::unique_ptr<TrialWorker>>& workers, std::uint64_t begin,
               std::uint64_t end, std::vector<Slot>& slots) {
  slots.clear();
  slots.resize(end - begin);
  constexpr std::uint64_t kChunk = 32;
  std::atomic<std::uint64_t> next{begin};
  auto body = [&](TrialWorker& w) {
    for (;;) {
      const std::uint64_t lo = next.fetch_add(kChunk);
      if (lo >= end) return;
      const std::uint64_t hi = std::min(end, lo + kChunk);
      for (std::uint64_t i = lo; i < hi; ++i) {
        Slot& slot = slots[i - begin];
        try {
          slot.trial = w.run(i);
        } catch (...) {
          slot.error = std::current_exception();
        }
      }
    }
  };
  if (workers.size() == 1) {
    body(*workers[0]);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers.size() - 1);
  for (std::size_t t = 1; t < workers.size(); ++t)
    threads.emplace_back([&, t] { body(*workers[t]); });
  body(*workers[0]);
}

class SampledWorker : public TrialWorker {
 public:
  SampledWorker(const Workload& w, const SampleSpace& space, std::uint64_t seed)
      : sim_(w.circuit, w.lib, w.glitch, w.trace), space_(space), seed_(seed) {}

  Trial run(std::uint64_t index) override {
    Trial t;
    t.spec = space_.draw(seed_, index);
    t.flips = sim_.simulate(t.spec);
    return t;
  }

 private:
  FaultSimulator sim_;
  const SampleSpace& space_;
  std::uint64_t seed_;
};

// Splits [0, period) into cells of `step` ps; the last one may be shorter.
struct KCells {
  std::int64_t period;
  std::int64_t step;
  std::uint64_t count() const { return static_cast<std::uint64_t>((period + step - 1) / step); }
  std::int64_t lo(std::uint64_t i) const { return static_cast<std::int64_t>(i) * step; }
  std::int64_t hi(std::uint64_t i) const { return std::min(period, lo(i) + step); }
  std::int64_t mid(std::uint64_t i) const { return lo(i) + (hi(i) - lo(i)) / 2; }
};

// Row-major over (drain, cycle, k cell); k sits at the cell midpoint.
class GridWorker : public TrialWorker {
 public:
  GridWorker(const Workload& w, std::uint64_t cycles, KCells cells)
      : sim_(w.circuit, w.lib, w.glitch, w.trace), cycles_(cycles), steps_(cells.count()), cells_(cells) {}

  Trial run(std::uint64_t index) override {
    Trial t;
    t.spec.sample_index = index;
    t.spec.k_ps = cells_.mid(index % steps_);
    t.spec.cycle = static_cast<std::uint32_t>(1 + (index / steps_) % cycles_);
    t.spec.drain = static_cast<std::uint32_t>(index / (steps_ * cycles_));
    t.flips = sim_.simulate(t.spec);
    return t;
  }

 private:
  FaultSimulator sim_;
  std::uint64_t cycles_;
  std::uint64_t steps_;
  KCells cells_;
};

class GridTrials : public TrialSource {
 public:
  GridTrials(const Workload& w, std::uint64_t cycles, KCells cells)
      : w_(w), cycles_(cycles), cells_(cells) {}
  std::unique_ptr<TrialWorker> make_worker() const override {
    return std::make_unique<GridWorker>(w_, cycles_, cells_);
  }

 private:
  const Workload& w_;
  std::uint64_t cycles_;
  KCells cells_;
};

std::vector<std::unique_ptr<TrialWorker>> make_workers(const TrialSource& source,
                                                       unsigned workers) {
  std::vector<std::unique_ptr<TrialWorker>> out;
  for (unsigned i = 0; i < std::max(1u, workers); ++i) out.push_back(source.make_worker());
  return out;
}

}  // namespace

CampaignConfig parse_campaign_config(const ConfigTree& tree, const std::string& base_dir) {
  static const std::vector<std::string> kSections = {"circuit", "stimulus", "glitch",
                                                     "stop",    "run",      "grid"};
  for (const auto& [name, section] : tree) {
    if (is_library_section(name)) continue;
    if (std::find(kSections.begin(), kSections.end(), name) == kSections.end())
      throw ConfigError("unknown config section [" + name + "]");
  }

  CampaignConfig cfg;
  SectionReader circuit(find_section(tree, "circuit"), "circuit");
  if (auto v = circuit.text("netlist")) cfg.netlist_path = resolve(base_dir, *v);
  if (auto v = circuit.text("name")) cfg.circuit_name = *v;
  circuit.check_unknown();

  SectionReader stim(find_section(tree, "stimulus"), "stimulus");
  if (auto v = stim.text("file")) cfg.stimulus_path = resolve(base_dir, *v);
  if (auto v = stim.count("seed")) cfg.stimulus_seed = *v;
  if (auto v = stim.count("cycles")) cfg.n_cycles = *v;
  stim.check_unknown();

  cfg.lib = load_library(tree);
  cfg.glitch = load_glitch(tree);

  SectionReader stop(find_section(tree, "stop"), "stop");
  if (auto v = stop.number("rel_stderr")) cfg.stop.rel_stderr = *v;
  if (auto v = stop.count("min_n")) cfg.stop.min_n = *v;
  if (auto v = stop.count("min_nm")) cfg.stop.min_nm = *v;
  if (auto v = stop.count("max_samples")) cfg.stop.max_samples = *v;
  if (auto v = stop.count("batch")) cfg.stop.batch = *v;
  stop.check_unknown();

  cfg.workers = default_workers();
  SectionReader run(find_section(tree, "run"), "run");
  if (auto v = run.count("seed")) cfg.master_seed = *v;
  if (auto v = run.count("workers")) cfg.workers = static_cast<unsigned>(*v);
  if (auto v = run.text("out")) cfg.out_dir = resolve(base_dir, *v);
  run.check_unknown();

  SectionReader grid(find_section(tree, "grid"), "grid");
  if (auto v = grid.count("cap")) cfg.grid_cap = *v;
  if (auto v = grid.count("k_step_ps")) cfg.grid_k_step_ps = static_cast<std::int64_t>(*v);
  grid.check_unknown();

  if (cfg.netlist_path.empty()) throw ConfigError("[circuit] netlist is required");
  check_config(cfg);
  return cfg;
}

CampaignConfig load_campaign_config(const std::string& path) {
  const ConfigTree tree = read_config_file(path);
  return parse_campaign_config(tree, fs::path(path).parent_path().string());
}

void check_config(const CampaignConfig& cfg) {
  check_library(cfg.lib);
  check_glitch(cfg.glitch);
  if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  if (cfg.n_cycles < 2 && cfg.stimulus_path.empty())
    throw ConfigError("[stimulus] cycles must be at least 2");
  if (cfg.stop.max_samples < cfg.stop.min_n)
    throw ConfigError("[stop] max_samples must be at least min_n");
  if (cfg.stop.batch < 1) throw ConfigError("[stop] batch must be at least 1");
  if (!(cfg.stop.rel_stderr > 0.0)) throw ConfigError("[stop] rel_stderr must be positive");
  if (cfg.grid_k_step_ps < 1) throw ConfigError("[grid] k_step_ps must be at least 1");
}

unsigned default_workers() {
  if (const char* env = std::getenv("SETSTORM_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1 && v <= 1024) return static_cast<unsigned>(v);
  }
  return 1;
}

Workload prepare_workload(const CampaignConfig& cfg) {
  check_config(cfg);
  Workload w;
  w.lib = cfg.lib;
  w.glitch = cfg.glitch;
  const RawNetlist raw = read_bench_file(cfg.netlist_path);
  std::string name = cfg.circuit_name;
  if (name.empty()) name = fs::path(cfg.netlist_path).stem().string();
  w.circuit = elaborate(raw, w.lib, name);
  if (auto diags = validate(w.circuit); !diags.empty())
    throw std::runtime_error("invalid circuit: " + diags.front());
  w.stimulus = cfg.stimulus_path.empty()
                   ? random_stimulus(w.circuit.input_count(), cfg.n_cycles, cfg.stimulus_seed)
                   : read_stimulus_file(cfg.stimulus_path, w.circuit.input_count());
  w.trace = golden_run(w.circuit, w.stimulus);
  return w;
}

SampledTrials::SampledTrials(const Workload& w, std::uint64_t master_seed)
    : workload_(w),
      space_(w.circuit, w.lib, w.stimulus.n_cycles()),
      master_seed_(master_seed) {}

std::unique_ptr<TrialWorker> SampledTrials::make_worker() const {
  return std::make_unique<SampledWorker>(workload_, space_, master_seed_);
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Converged:
      return "converged";
    case StopReason::SampleCap:
      return "sample_cap";
    case StopReason::Grid:
      return "grid";
  }
  return "?";
}

std::optional<StopReason> parse_stop_reason(std::string_view name) {
  for (auto r : {StopReason::Converged, StopReason::SampleCap, StopReason::Grid})
    if (name == stop_reason_name(r)) return r;
  return std::nullopt;
}

DriveResult drive(const TrialSource& source, const StopRule& rule, unsigned workers,
                  const std::function<void(const Trial&)>& sink) {
  auto pool = make_workers(source, workers);
  const std::uint64_t block = std::max<std::uint64_t>(1024, 256 * pool.size());
  const std::uint64_t batch = std::max<std::uint64_t>(1, rule.batch);

  DriveResult result;
  std::vector<Slot> slots;
  std::uint64_t next = 0;
  while (next < rule.max_samples) {
    const std::uint64_t end = std::min(rule.max_samples, next + block);
    run_block(pool, next, end, slots);
    for (std::uint64_t i = next; i < end; ++i) {
      Slot& slot = slots[i - next];
      if (slot.error) std::rethrow_exception(slot.error);
      const std::size_t flips = slot.trial.flips.n_flips;
      result.state = update(result.state, flips);
      if (result.histogram.size() <= flips) result.histogram.resize(flips + 1, 0);
      ++result.histogram[flips];
      if (sink) sink(slot.trial);
      if (result.state.n_total % batch == 0 && is_converged(result.state, rule)) {
        result.state.converged = true;
        result.reason = StopReason::Converged;
        return result;
      }
    }
    next = end;
  }
  result.state.converged = is_converged(result.state, rule);
  result.reason = result.state.converged ? StopReason::Converged : StopReason::SampleCap;
  return result;
}

CampaignReport make_report(const Circuit& c, const CellLibrary& lib, std::uint64_t master_seed,
                           const DriveResult& result) {
  CampaignReport r;
  r.circuit = c.name;
  r.gates = c.gate_count();
  r.inputs = c.input_count();
  r.outputs = c.output_count();
  const LogicDepth depth = levelize(c);
  r.depth_min = depth.min_depth;
  r.depth_max = depth.max_depth;
  r.clock_period_ps = lib.clock_period_ps;
  r.critical_path_ps = critical_path_ps(c);
  r.master_seed = master_seed;

  const EstimatorState& st = result.state;
  r.n_total = st.n_total;
  r.n = st.n;
  r.n_m = st.n_m;
  r.theta = st.theta;
  r.sigma = st.sigma;
  r.ci95 = st.n >= 2 ? ci95(st) : ConfidenceInterval{0.0, 1.0};
  r.reported_theta = std::max(0.0, st.theta - 2.0 * st.sigma);
  r.converged = st.converged;
  r.stop_reason = result.reason;
  if (st.n_m == 0) r.rule_of_three = rule_of_three(st.n);
  r.histogram = result.histogram;
  return r;
}

CampaignReport run_campaign(const CampaignConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const Workload w = prepare_workload(cfg);
  const SampledTrials source(w, cfg.master_seed);

  std::optional<SampleLogWriter> log;
  if (!cfg.out_dir.empty()) {
    fs::create_directories(cfg.out_dir);
    log.emplace((fs::path(cfg.out_dir) / "samples.csv").string(), w.circuit);
  }
  std::uint64_t since_flush = 0;
  auto sink = [&](const Trial& t) {
    if (!log) return;
    log->write(t);
    if (++since_flush == 4096) {
      log->flush();
      since_flush = 0;
    }
  };

  DriveResult result;
  try {
    result = drive(source, cfg.stop, cfg.workers, sink);
  } catch (...) {
    if (log) log->flush();
    throw;
  }
  if (log) log->flush();

  CampaignReport r = make_report(w.circuit, w.lib, cfg.master_seed, result);
  r.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!cfg.out_dir.empty()) write_report_files(r, cfg.out_dir);
  return r;
}

std::uint64_t grid_size(std::uint64_t gates, std::size_t n_cycles, double period_ps,
                        std::int64_t k_step_ps) {
  const auto period = static_cast<std::uint64_t>(std::floor(period_ps));
  const auto step = static_cast<std::uint64_t>(k_step_ps);
  const std::uint64_t steps = (period + step - 1) / step;
  return gates * (n_cycles - 1) * steps;
}

CampaignReport exhaustive_grid(const CampaignConfig& cfg, std::int64_t k_step_ps) {
  if (k_step_ps < 1) throw std::invalid_argument("grid step must be at least 1 ps");
  const auto started = std::chrono::steady_clock::now();

  // Size check before the golden run so oversized requests fail fast.
  const Circuit probe = elaborate(read_bench_file(cfg.netlist_path), cfg.lib);
  const std::size_t cycles =
      cfg.stimulus_path.empty()
          ? cfg.n_cycles
          : read_stimulus_file(cfg.stimulus_path, probe.input_count()).n_cycles();
  const std::uint64_t total =
      grid_size(probe.gate_count(), cycles, cfg.lib.clock_period_ps, k_step_ps);
  if (total > cfg.grid_cap)
    throw GridTooLarge("grid of " + std::to_string(total) + " points exceeds the cap of " +
                       std::to_string(cfg.grid_cap));

  const Workload w = prepare_workload(cfg);
  const KCells cells{static_cast<std::int64_t>(std::floor(w.lib.clock_period_ps)), k_step_ps};
  const GridTrials source(w, w.stimulus.n_cycles() - 1, cells);

  StopRule exhaustive;
  exhaustive.max_samples = total;
  exhaustive.min_n = total + 1;  // never stop early

  double weight_any = 0.0;
  double weight_multi = 0.0;
  DriveResult result = drive(source, exhaustive, cfg.workers, [&](const Trial& t) {
    const std::uint64_t cell = t.spec.sample_index % cells.count();
    const double area = w.circuit.gates[t.spec.drain].drain_area_um2 *
                        static_cast<double>(cells.hi(cell) - cells.lo(cell));
    if (t.flips.n_flips >= 1) weight_any += area;
    if (t.flips.n_flips >= 2) weight_multi += area;
  });
  result.reason = StopReason::Grid;
  result.state.theta = weight_any > 0.0 ? weight_multi / weight_any : 0.0;
  result.state.sigma = 0.0;
  result.state.converged = true;

  CampaignReport r = make_report(w.circuit, w.lib, cfg.master_seed, result);
  r.ci95 = {r.theta, r.theta};
  r.reported_theta = r.theta;
  r.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!cfg.out_dir.empty()) write_report_files(r, cfg.out_dir);
  return r;
}

}  // namespace setstorm
