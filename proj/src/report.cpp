#include "setstorm/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace setstorm {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_field(std::string_view s, const char* what, std::size_t line) {
  s = trim(s);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::runtime_error("line " + std::to_string(line) + ": bad " + what + " '" +
                             std::string(s) + "'");
  return v;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  for (std::string_view l : split(text, '\n')) out.push_back(trim(l));
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string depth_text(const CampaignReport& r) {
  if (r.depth_min == r.depth_max) return std::to_string(r.depth_max);
  return std::to_string(r.depth_min) + "-" + std::to_string(r.depth_max);
}

std::string histogram_text(const std::vector<std::uint64_t>& h) {
  std::string out;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(h[i]);
  }
  return out;
}

std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::Table;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  return std::nullopt;
}

nlohmann::json report_to_json(const CampaignReport& r) {
  nlohmann::json j;
  j["circuit"] = r.circuit;
  j["gates"] = r.gates;
  j["inputs"] = r.inputs;
  j["outputs"] = r.outputs;
  j["depth_min"] = r.depth_min;
  j["depth_max"] = r.depth_max;
  j["clock_period_ps"] = r.clock_period_ps;
  j["critical_path_ps"] = r.critical_path_ps;
  j["master_seed"] = r.master_seed;
  j["n_total"] = r.n_total;
  j["n"] = r.n;
  j["n_m"] = r.n_m;
  j["theta"] = r.theta;
  j["sigma"] = r.sigma;
  j["ci95"] = {r.ci95.lo, r.ci95.hi};
  j["reported_theta"] = r.reported_theta;
  j["converged"] = r.converged;
  j["stop_reason"] = stop_reason_name(r.stop_reason);
  j["rule_of_three"] = r.rule_of_three ? nlohmann::json(*r.rule_of_three) : nlohmann::json();
  j["histogram"] = r.histogram;
  j["wall_time_s"] = r.wall_time_s;
  return j;
}

CampaignReport report_from_json(const nlohmann::json& j) {
  CampaignReport r;
  r.circuit = j.at("circuit").get<std::string>();
  r.gates = j.at("gates").get<std::uint64_t>();
  r.inputs = j.at("inputs").get<std::uint64_t>();
  r.outputs = j.at("outputs").get<std::uint64_t>();
  r.depth_min = j.at("depth_min").get<int>();
  r.depth_max = j.at("depth_max").get<int>();
  r.clock_period_ps = j.at("clock_period_ps").get<double>();
  r.critical_path_ps = j.at("critical_path_ps").get<double>();
  r.master_seed = j.at("master_seed").get<std::uint64_t>();
  r.n_total = j.at("n_total").get<std::uint64_t>();
  r.n = j.at("n").get<std::uint64_t>();
  r.n_m = j.at("n_m").get<std::uint64_t>();
  r.theta = j.at("theta").get<double>();
  r.sigma = j.at("sigma").get<double>();
  const auto& ci = j.at("ci95");
  if (!ci.is_array() || ci.size() != 2) throw std::invalid_argument("ci95 must be a pair");
  r.ci95 = {ci[0].get<double>(), ci[1].get<double>()};
  r.reported_theta = j.at("reported_theta").get<double>();
  r.converged = j.at("converged").get<bool>();
  const auto reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
  if (!reason) throw std::invalid_argument("unknown stop_reason");
  r.stop_reason = *reason;
  if (j.contains("rule_of_three") && !j["rule_of_three"].is_null())
    r.rule_of_three = j["rule_of_three"].get<double>();
  r.histogram = j.at("histogram").get<std::vector<std::uint64_t>>();
  r.wall_time_s = j.value("wall_time_s", 0.0);
  return r;
}

CampaignReport read_report_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report " + path);
  return report_from_json(nlohmann::json::parse(in));
}

std::vector<ReferenceRow> parse_reference_table(std::string_view csv) {
  std::vector<ReferenceRow> rows;
  bool header_seen = false;
  std::size_t line_no = 0;
  for (std::string_view line : lines_of(csv)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 9)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 9 fields, got " +
                               std::to_string(f.size()));
    ReferenceRow r;
    r.key = trim(f[0]);
    r.example = trim(f[1]);
    r.gates_design = parse_field<std::uint64_t>(f[2], "gates_design", line_no);
    r.gates_pnr = parse_field<std::uint64_t>(f[3], "gates_pnr", line_no);
    r.inputs = parse_field<std::uint64_t>(f[4], "inputs", line_no);
    r.outputs = parse_field<std::uint64_t>(f[5], "outputs", line_no);
    r.logic_depth = trim(f[6]);
    r.simulations = parse_field<std::uint64_t>(f[7], "simulations", line_no);
    r.theta_percent = parse_field<double>(f[8], "theta_percent", line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ReferenceRow> read_reference_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference table " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_reference_table(ss.str());
}

const ReferenceRow* find_reference(const std::vector<ReferenceRow>& rows, std::string_view key) {
  for (const auto& r : rows)
    if (r.key == key) return &r;
  return nullptr;
}

std::string format_percent(double p) {
  const double pct = p * 100.0;
  if (pct == 0.0) return "0.00%";
  const int magnitude = static_cast<int>(std::floor(std::log10(std::fabs(pct))));
  const int digits = std::max(0, 2 - magnitude);
  return fixed(pct, digits) + "%";
}

std::string write_report(const CampaignReport& r, ReportFormat format,
                         const std::vector<ReferenceRow>* reference) {
  switch (format) {
    case ReportFormat::Json:
      return report_to_json(r).dump(2) + "\n";

    case ReportFormat::Csv: {
      std::string out =
          "circuit,gates,inputs,outputs,depth_min,depth_max,clock_period_ps,critical_path_ps,"
          "master_seed,n_total,n,n_m,theta,sigma,ci95_lo,ci95_hi,reported_theta,converged,"
          "stop_reason,rule_of_three,histogram,wall_time_s\n";
      out += r.circuit + "," + std::to_string(r.gates) + "," + std::to_string(r.inputs) + "," +
             std::to_string(r.outputs) + "," + std::to_string(r.depth_min) + "," +
             std::to_string(r.depth_max) + "," + sci(r.clock_period_ps) + "," +
             sci(r.critical_path_ps) + "," + std::to_string(r.master_seed) + "," +
             std::to_string(r.n_total) + "," + std::to_string(r.n) + "," +
             std::to_string(r.n_m) + "," + sci(r.theta) + "," + sci(r.sigma) + "," +
             sci(r.ci95.lo) + "," + sci(r.ci95.hi) + "," + sci(r.reported_theta) + "," +
             (r.converged ? "true" : "false") + "," + stop_reason_name(r.stop_reason) + "," +
             (r.rule_of_three ? sci(*r.rule_of_three) : "") + "," + histogram_text(r.histogram) +
             "," + fixed(r.wall_time_s, 3) + "\n";
      return out;
    }

    case ReportFormat::Table: {
      std::vector<std::string> head = {"Circuit", "Gates",       "Inputs", "Outputs",
                                       "Depth",   "Simulations", "theta"};
      std::vector<std::string> row = {r.circuit,
                                      std::to_string(r.gates),
                                      std::to_string(r.inputs),
                                      std::to_string(r.outputs),
                                      depth_text(r),
                                      std::to_string(r.n_total),
                                      format_percent(r.reported_theta)};
      if (reference) {
        head.push_back("Ref theta");
        const ReferenceRow* ref = find_reference(*reference, r.circuit);
        row.push_back(ref ? format_percent(ref->theta_percent / 100.0) : "n/a");
      }
      std::string out;
      std::string line1;
      std::string line2;
      for (std::size_t i = 0; i < head.size(); ++i) {
        const std::size_t w = std::max(head[i].size(), row[i].size()) + 2;
        line1 += pad(head[i], w);
        line2 += pad(row[i], w);
      }
      out += trim(line1);
      out += "\n";
      out += trim(line2);
      out += "\n\n";
      out += "n=" + std::to_string(r.n) + " n_m=" + std::to_string(r.n_m) +
             " theta_hat=" + format_percent(r.theta) + " sigma=" + sci(r.sigma) + " ci95=[" +
             format_percent(r.ci95.lo) + ", " + format_percent(r.ci95.hi) + "]\n";
      out += "stop=" + std::string(stop_reason_name(r.stop_reason));
      if (r.rule_of_three) out += " upper_bound=" + format_percent(*r.rule_of_three);
      out += " seed=" + std::to_string(r.master_seed) + " wall=" + fixed(r.wall_time_s, 2) +
             "s\n";
      return out;
    }
  }
  return {};
}

void write_report_files(const CampaignReport& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::pair<const char*, ReportFormat> files[] = {{"report.json", ReportFormat::Json},
                                                        {"report.csv", ReportFormat::Csv},
                                                        {"report.txt", ReportFormat::Table}};
  for (const auto& [name, fmt] : files) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    out << write_report(r, fmt);
  }
}

SampleLogWriter::SampleLogWriter(const std::string& path, const Circuit& c)
    : out_(path), circuit_(c) {
  if (!out_) throw std::runtime_error("cannot write sample log " + path);
  out_ << header();
}

void SampleLogWriter::write(const Trial& t) { out_ << row(circuit_, t); }

void SampleLogWriter::flush() { out_.flush(); }

std::string SampleLogWriter::header() {
  return "sample_index,drain_gate,cycle,k_ps,n_flips,flipped_ff_names\n";
}

std::string SampleLogWriter::row(const Circuit& c, const Trial& t) {
  std::string out = std::to_string(t.spec.sample_index) + "," + c.gate_name(t.spec.drain) + "," +
                    std::to_string(t.spec.cycle) + "," + std::to_string(t.spec.k_ps) + "," +
                    std::to_string(t.flips.n_flips) + ",";
  bool first = true;
  for (std::size_t ff = 0; ff < t.flips.bits.size(); ++ff) {
    if (!t.flips.bits[ff]) continue;
    if (!first) out += ';';
    out += c.flip_flops[ff].name;
    first = false;
  }
  out += '\n';
  return out;
}

std::vector<SampleLogRow> parse_sample_log(std::string_view csv) {
  std::vector<SampleLogRow> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  for (std::string_view line : lines_of(csv)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (std::string(line) + "\n" != SampleLogWriter::header())
        throw std::runtime_error("sample log has an unexpected header");
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 6)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 6 fields");
    SampleLogRow r;
    r.sample_index = parse_field<std::uint64_t>(f[0], "sample_index", line_no);
    r.drain_gate = trim(f[1]);
    r.cycle = parse_field<std::uint32_t>(f[2], "cycle", line_no);
    r.k_ps = parse_field<std::int64_t>(f[3], "k_ps", line_no);
    r.n_flips = parse_field<std::size_t>(f[4], "n_flips", line_no);
    if (!trim(f[5]).empty())
      for (std::string_view name : split(trim(f[5]), ';')) r.flipped.emplace_back(name);
    if (r.flipped.size() != r.n_flips)
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": n_flips disagrees with the flipped list");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace setstorm
