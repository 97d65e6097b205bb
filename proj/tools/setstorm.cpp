#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "setstorm/campaign.hpp"
#include "setstorm/report.hpp"

namespace fs = std::filesystem;
using namespace setstorm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSampleCap = 2;

void warn_timing(const Circuit& c, const CellLibrary& lib) {
  const double path = critical_path_ps(c);
  if (path + lib.setup_ps > lib.clock_period_ps)
    std::cerr << "warning: critical path " << path << " ps plus setup " << lib.setup_ps
              << " ps exceeds the clock period " << lib.clock_period_ps << " ps\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_golden(const std::string& netlist, const std::string& stimulus_path,
               std::optional<std::size_t> rand_cycles, std::uint64_t seed,
               const std::string& out_dir) {
  const CellLibrary lib = default_library();
  const Circuit c = elaborate(read_bench_file(netlist), lib, fs::path(netlist).stem().string());
  warn_timing(c, lib);
  const Stimulus s = stimulus_path.empty() ? random_stimulus(c.input_count(), *rand_cycles, seed)
                                           : read_stimulus_file(stimulus_path, c.input_count());
  const ReferenceTrace trace = golden_run(c, s);

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "stimulus.txt", serialize_stimulus(s));

  std::string csv = "cycle,inputs,outputs,settle_ps\n";
  for (std::size_t t = 0; t < trace.n_cycles(); ++t)
    csv += std::to_string(t) + "," + s.cycles[t].to_string() + "," +
           trace.outputs[t].to_string() + "," + std::to_string(trace.settle_ps[t]) + "\n";
  write_text(fs::path(out_dir) / "golden.csv", csv);

  std::cout << c.name << ": " << c.gate_count() << " gates, " << c.input_count() << " inputs, "
            << c.output_count() << " outputs, " << trace.n_cycles() << " cycles -> " << out_dir
            << "\n";
  return kExitOk;
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed,
            std::optional<unsigned> workers, std::optional<std::uint64_t> max_samples,
            std::optional<std::string> out) {
  CampaignConfig cfg = load_campaign_config(config);
  if (seed) cfg.master_seed = *seed;
  if (workers) cfg.workers = *workers;
  if (max_samples) cfg.stop.max_samples = *max_samples;
  if (out) cfg.out_dir = *out;
  check_config(cfg);

  warn_timing(elaborate(read_bench_file(cfg.netlist_path), cfg.lib), cfg.lib);
  const CampaignReport r = run_campaign(cfg);
  std::cout << write_report(r, ReportFormat::Table);
  return r.stop_reason == StopReason::SampleCap ? kExitSampleCap : kExitOk;
}

int cmd_grid(const std::string& config, std::optional<std::int64_t> k_step,
             std::optional<std::string> out) {
  CampaignConfig cfg = load_campaign_config(config);
  if (out) cfg.out_dir = *out;
  const CampaignReport r = exhaustive_grid(cfg, k_step.value_or(cfg.grid_k_step_ps));
  std::cout << write_report(r, ReportFormat::Table);
  return kExitOk;
}

int cmd_report(const std::string& in, const std::string& format, bool compare,
               const std::string& table_path) {
  const fs::path path = fs::is_directory(in) ? fs::path(in) / "report.json" : fs::path(in);
  const CampaignReport r = read_report_file(path.string());
  std::optional<std::vector<ReferenceRow>> ref;
  if (compare) ref = read_reference_table(table_path);
  std::cout << write_report(r, *parse_report_format(format), ref ? &*ref : nullptr);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo single-event-transient fault injection"};
  app.require_subcommand(1);

  auto* golden = app.add_subcommand("golden", "Simulate the fault-free reference trace");
  std::string g_netlist, g_stimulus, g_out = "golden";
  std::optional<std::size_t> g_cycles;
  std::uint64_t g_seed = CampaignConfig{}.stimulus_seed;
  golden->add_option("--netlist", g_netlist, ".bench netlist")->required()->check(CLI::ExistingFile);
  auto* stim_opt =
      golden->add_option("--stimulus", g_stimulus, "stimulus file")->check(CLI::ExistingFile);
  auto* cyc_opt = golden->add_option("--rand-cycles", g_cycles, "random stimulus length")
                      ->check(CLI::Range(std::size_t{2}, std::size_t{100'000'000}));
  stim_opt->excludes(cyc_opt);
  golden->add_option("--seed", g_seed, "random stimulus seed");
  golden->add_option("--out", g_out, "output directory");

  auto* run = app.add_subcommand("run", "Monte Carlo campaign");
  std::string r_config;
  std::optional<std::uint64_t> r_seed, r_max;
  std::optional<unsigned> r_workers;
  std::optional<std::string> r_out;
  run->add_option("--config", r_config, "campaign .ini")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", r_seed, "master seed");
  run->add_option("--workers", r_workers, "worker threads")->check(CLI::Range(1u, 1024u));
  run->add_option("--max-samples", r_max, "sample cap");
  run->add_option("--out", r_out, "output directory");

  auto* grid = app.add_subcommand("grid", "Exhaustive (d, t, k) enumeration");
  std::string x_config;
  std::optional<std::int64_t> x_step;
  std::optional<std::string> x_out;
  grid->add_option("--config", x_config, "campaign .ini")->required()->check(CLI::ExistingFile);
  grid->add_option("--k-step", x_step, "strike-offset step in ps")
      ->check(CLI::Range(std::int64_t{1}, std::int64_t{1'000'000}));
  grid->add_option("--out", x_out, "output directory");

  auto* report = app.add_subcommand("report", "Render a saved report");
  std::string p_in, p_format = "table";
  std::string p_table = std::string(SETSTORM_DATA_DIR) + "/table1.csv";
  bool p_compare = false;
  report->add_option("--in", p_in, "run directory or report.json")->required()->check(CLI::ExistingPath);
  report->add_option("--format", p_format, "table, csv or json")
      ->check(CLI::IsMember({"table", "csv", "json"}));
  report->add_flag("--compare-table1", p_compare, "append the published theta column");
  report->add_option("--table", p_table, "reference table CSV")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    if (golden->parsed()) {
      if (g_stimulus.empty() && !g_cycles) {
        std::cerr << "golden: one of --stimulus or --rand-cycles is required\n";
        return kExitError;
      }
      return cmd_golden(g_netlist, g_stimulus, g_cycles, g_seed, g_out);
    }
    if (run->parsed()) return cmd_run(r_config, r_seed, r_workers, r_max, r_out);
    if (grid->parsed()) return cmd_grid(x_config, x_step, x_out);
    if (report->parsed()) return cmd_report(p_in, p_format, p_compare, p_table);
  } catch (const NetlistError& e) {
    std::cerr << "netlist error: " << e.what() << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}
