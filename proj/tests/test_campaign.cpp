#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <numeric>

#include "doctest.h"
#include "oracle.hpp"
#include "setstorm/campaign.hpp"
#include "setstorm/report.hpp"

using namespace setstorm;
namespace fs = std::filesystem;

namespace {

const std::string kData = SETSTORM_DATA_DIR;
const std::string kConfigs = SETSTORM_CONFIG_DIR;

CampaignConfig config_for(const std::string& netlist, std::size_t cycles) {
  CampaignConfig cfg;
  cfg.netlist_path = kData + netlist;
  cfg.n_cycles = cycles;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("setstorm_test_" + name);
  fs::remove_all(p);
  return p;
}

class FailingTrials : public TrialSource {
 public:
  explicit FailingTrials(std::uint64_t bad) : bad_(bad) {}
  std::unique_ptr<TrialWorker> make_worker() const override {
    struct W : TrialWorker {
      std::uint64_t bad;
      explicit W(std::uint64_t b) : bad(b) {}
      Trial run(std::uint64_t i) override {
        if (i == bad) throw std::runtime_error("worker failed");
        Trial t;
        t.spec.sample_index = i;
        t.flips = FlipVector(BitVec::from_string("10"));
        return t;
      }
    };
    return std::make_unique<W>(bad_);
  }

 private:
  std::uint64_t bad_;
};

}  // namespace

TEST_CASE("config file parsing") {
  const CampaignConfig cfg = load_campaign_config(kConfigs + "/full_example.ini");
  CHECK(fs::path(cfg.netlist_path).lexically_normal() == fs::path(kData + "/c17.bench").lexically_normal());
  CHECK(cfg.circuit_name == "c17");
  CHECK(cfg.n_cycles == 1000);
  CHECK(cfg.stop.batch == 8);
  CHECK(cfg.stop.max_samples == 1'000'000);
  CHECK(cfg.glitch == GlitchPulse{});
  CHECK(cfg.lib.clock_period_ps == 10000.0);
  CHECK(cfg.grid_k_step_ps == 100);
  CHECK(fs::path(cfg.out_dir).filename() == "c17");

  const std::string base = "[circuit]\nnetlist = " + kData + "/c17.bench\n";
  CHECK_NOTHROW(parse_campaign_config(parse_config(base)));
  CHECK_THROWS_AS(parse_campaign_config(parse_config(base + "[bogus]\nx = 1\n")), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(parse_config(base + "[run]\nsed = 1\n")), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(parse_config("[run]\nseed = 1\n")), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(parse_config(base + "[stop]\nmin_n = 100\nmax_samples = 10\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(parse_config(base + "[run]\nworkers = 0\n")), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(parse_config(base + "[stimulus]\ncycles = 1\n")), ConfigError);
  CHECK_THROWS_AS(parse_campaign_config(parse_config(base + "[stop]\nbatch = 0\n")), ConfigError);
}

TEST_CASE("SETSTORM_WORKERS sets the default parallelism") {
  ::setenv("SETSTORM_WORKERS", "3", 1);
  CHECK(default_workers() == 3);
  ::setenv("SETSTORM_WORKERS", "zero", 1);
  CHECK(default_workers() == 1);
  ::unsetenv("SETSTORM_WORKERS");
  CHECK(default_workers() == 1);
}

TEST_CASE("stop reason names round-trip") {
  for (auto r : {StopReason::Converged, StopReason::SampleCap, StopReason::Grid})
    CHECK(parse_stop_reason(stop_reason_name(r)) == r);
  CHECK_FALSE(parse_stop_reason("nope").has_value());
}

TEST_CASE("drive checks convergence only on batch boundaries") {
  for (std::uint64_t batch : {1, 3, 8, 64}) {
    CAPTURE(batch);
    StopRule rule;
    rule.batch = batch;
    const DriveResult r = drive(oracle::BernoulliTrials(1.0, 0.3, 4), rule, 2);
    REQUIRE(r.reason == StopReason::Converged);
    CHECK(r.state.n_total % batch == 0);
    // No earlier boundary satisfied the rule.
    EstimatorState st;
    auto w = oracle::BernoulliTrials(1.0, 0.3, 4).make_worker();
    for (std::uint64_t i = 0; i + batch < r.state.n_total; ++i) {
      st = update(st, w->run(i).flips);
      if (st.n_total % batch == 0) REQUIRE_FALSE(is_converged(st, rule));
    }
  }
}

TEST_CASE("drive is independent of worker count") {
  const oracle::BernoulliTrials source(0.4, 0.15, 77);
  StopRule rule;
  std::vector<std::uint64_t> order1;
  const DriveResult a = drive(source, rule, 1, [&](const Trial& t) { order1.push_back(t.spec.sample_index); });
  for (unsigned w : {2u, 3u, 8u}) {
    std::vector<std::uint64_t> order;
    const DriveResult b = drive(source, rule, w, [&](const Trial& t) { order.push_back(t.spec.sample_index); });
    CHECK(b.state == a.state);
    CHECK(b.histogram == a.histogram);
    CHECK(order == order1);
  }
  std::vector<std::uint64_t> iota(order1.size());
  std::iota(iota.begin(), iota.end(), 0);
  CHECK(order1 == iota);
  CHECK(std::accumulate(a.histogram.begin(), a.histogram.end(), std::uint64_t{0}) == a.state.n_total);
}

TEST_CASE("a failing trial stops the fold right before it") {
  for (unsigned workers : {1u, 4u}) {
    std::uint64_t seen = 0;
    StopRule rule;
    rule.max_samples = 100'000;
    rule.min_n = rule.max_samples + 1;
    CHECK_THROWS_WITH_AS(drive(FailingTrials(5000), rule, workers, [&](const Trial&) { ++seen; }),
                         "worker failed", std::runtime_error);
    CHECK(seen == 5000);
  }
}

TEST_CASE("sample cap without convergence") {
  StopRule rule;
  rule.max_samples = 500;
  const DriveResult r = drive(oracle::BernoulliTrials(0.5, 0.0, 1), rule, 2);
  CHECK(r.reason == StopReason::SampleCap);
  CHECK(r.state.n_total == 500);
  CHECK_FALSE(r.state.converged);
}

TEST_CASE("fanout demo converges to exactly one") {
  CampaignConfig cfg = load_campaign_config(kConfigs + "/fanout.ini");
  cfg.out_dir.clear();
  const CampaignReport r = run_campaign(cfg);
  CHECK(r.converged);
  CHECK(r.stop_reason == StopReason::Converged);
  CHECK(r.theta == 1.0);
  CHECK(r.sigma == 0.0);
  CHECK(r.reported_theta == 1.0);
  CHECK(r.n == r.n_m);
  CHECK_FALSE(r.rule_of_three.has_value());
}

TEST_CASE("inverter chain runs to the cap with a rule-of-three bound") {
  CampaignConfig cfg = load_campaign_config(kConfigs + "/inv_chain.ini");
  cfg.out_dir.clear();
  const CampaignReport r = run_campaign(cfg);
  CHECK(r.stop_reason == StopReason::SampleCap);
  CHECK(r.n_total == cfg.stop.max_samples);
  CHECK(r.n_m == 0);
  CHECK(r.n > 0);
  CHECK(r.theta == 0.0);
  REQUIRE(r.rule_of_three.has_value());
  CHECK(*r.rule_of_three == doctest::Approx(3.0 / static_cast<double>(r.n)));
}

TEST_CASE("report invariants and sample-log recount") {
  CampaignConfig cfg = load_campaign_config(kConfigs + "/decoder.ini");
  const fs::path out = scratch("decoder");
  cfg.out_dir = out.string();
  const CampaignReport r = run_campaign(cfg);
  CHECK(r.reported_theta == std::max(0.0, r.theta - 2 * r.sigma));
  CHECK(r.reported_theta <= r.theta);
  CHECK(r.theta <= r.ci95.hi);
  CHECK(std::accumulate(r.histogram.begin(), r.histogram.end(), std::uint64_t{0}) == r.n_total);
  CHECK(r.gates == 14);
  CHECK(r.inputs == 3);
  CHECK(r.outputs == 8);

  const auto rows = parse_sample_log(oracle::read_file((out / "samples.csv").string()));
  REQUIRE(rows.size() == r.n_total);
  EstimatorState st;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i].sample_index == i);
    st = update(st, rows[i].n_flips);
  }
  CHECK(st.n == r.n);
  CHECK(st.n_m == r.n_m);
  CHECK(st.theta == r.theta);
  CHECK(st.sigma == r.sigma);

  const CampaignReport back = read_report_file((out / "report.json").string());
  CHECK(back == r);
  CHECK(fs::exists(out / "report.csv"));
  CHECK(fs::exists(out / "report.txt"));
}

TEST_CASE("grid size and refusal") {
  CHECK(grid_size(1, 5, 10000.0, 100) == 1 * 4 * 100);
  CHECK(grid_size(6, 4, 10000.0, 100) == 6 * 3 * 100);
  CHECK(grid_size(2, 3, 1050.0, 100) == 2 * 2 * 11);

  CampaignConfig big = config_for("/iscas85/c7552.bench", 1000);
  CHECK_THROWS_AS(exhaustive_grid(big, 100), GridTooLarge);

  CampaignConfig one = config_for("/demo/inv_chain.bench", 5);
  const CampaignReport r = exhaustive_grid(one, 100);
  CHECK(r.n_total == 3 * 4 * 100);
  CHECK(r.stop_reason == StopReason::Grid);
  CHECK(r.sigma == 0.0);
  CHECK(r.theta == 0.0);
}

TEST_CASE("grid on the fanout demo is exactly one") {
  const CampaignReport r = exhaustive_grid(config_for("/demo/fanout.bench", 6), 10);
  CHECK(r.theta == 1.0);
  CHECK(r.reported_theta == 1.0);
  CHECK(r.ci95 == ConfidenceInterval{1.0, 1.0});
}

TEST_CASE("grid weights drains by area") {
  // Gate 0 (area 1) always flips two FFs; gate 1 (area 3) flips one.
  CampaignConfig cfg;
  const fs::path dir = scratch("weights");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "w.bench") << "INPUT(a)\nOUTPUT(p)\nOUTPUT(p)\nOUTPUT(q)\np = BUFF(a)\nq = NOT(a)\n";
  }
  cfg.netlist_path = (dir / "w.bench").string();
  cfg.n_cycles = 3;
  cfg.lib = load_library(parse_config("[cell.BUF]\ndrain_area_um2 = 1\n[cell.NOT]\ndrain_area_um2 = 3\n"));
  const CampaignReport r = exhaustive_grid(cfg, 50);
  // Both gates flip over identical k ranges, so theta = 1 / (1 + 3).
  CHECK(r.theta == doctest::Approx(0.25));
}
