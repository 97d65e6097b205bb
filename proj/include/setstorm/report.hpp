#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "setstorm/campaign.hpp"

namespace setstorm {

enum class ReportFormat { Table, Csv, Json };

std::optional<ReportFormat> parse_report_format(std::string_view name);

nlohmann::json report_to_json(const CampaignReport& r);
/// Throws nlohmann::json::exception or std::invalid_argument on bad input.
CampaignReport report_from_json(const nlohmann::json& j);

CampaignReport read_report_file(const std::string& path);

/// Published figures kept for side-by-side display.
struct ReferenceRow {
  std::string key;
  std::string example;
  std::uint64_t gates_design = 0;
  std::uint64_t gates_pnr = 0;
  std::uint64_t inputs = 0;
  std::uint64_t outputs = 0;
  std::string logic_depth;
  std::uint64_t simulations = 0;
  double theta_percent = 0.0;
};

std::vector<ReferenceRow> parse_reference_table(std::string_view csv);
std::vector<ReferenceRow> read_reference_table(const std::string& path);
const ReferenceRow* find_reference(const std::vector<ReferenceRow>& rows, std::string_view key);

/// Probability as a percentage with three significant figures ("12.8%").
std::string format_percent(double p);

/// Table mirrors the published layout; csv and json carry every field. With
/// `reference`, the table gains the published theta next to ours.
std::string write_report(const CampaignReport& r, ReportFormat format,
                         const std::vector<ReferenceRow>* reference = nullptr);

/// Writes report.json, report.csv and report.txt into `dir`.
void write_report_files(const CampaignReport& r, const std::string& dir);

/// Per-sample CSV: sample_index,drain_gate,cycle,k_ps,n_flips,flipped_ff_names.
class SampleLogWriter {
 public:
  SampleLogWriter(const std::string& path, const Circuit& c);

  void write(const Trial& t);
  void flush();

  static std::string header();
  static std::string row(const Circuit& c, const Trial& t);

 private:
  std::ofstream out_;
  const Circuit& circuit_;
};

struct SampleLogRow {
  std::uint64_t sample_index = 0;
  std::string drain_gate;
  std::uint32_t cycle = 0;
  std::int64_t k_ps = 0;
  std::size_t n_flips = 0;
  std::vector<std::string> flipped;
};

/// Throws std::runtime_error on a malformed row.
std::vector<SampleLogRow> parse_sample_log(std::string_view csv);

}  // namespace setstorm
