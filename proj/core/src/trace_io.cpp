#include "flowpat/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "flowpat/errors.hpp"

namespace flowpat {

namespace {

constexpr std::string_view kHeader = "time_s,voltage_v";

// Whole-token double parse; rejects trailing garbage like "1.2x".
bool parse_double(std::string_view s, double& out) {
  // Trim ASCII whitespace and an optional CR left by CRLF files.
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

CapacitanceTrace ingest_csv(const std::filesystem::path& path,
                            double sample_rate_hz, bool calibrate) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace CSV: " + path.string());

  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kHeader)
        throw DataError(path.string() + ":1: expected header \"" +
                        std::string(kHeader) + "\"");
      continue;
    }
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected two comma-separated columns");
    double t = 0.0, v = 0.0;
    if (!parse_double(std::string_view(line).substr(0, comma), t) ||
        !parse_double(std::string_view(line).substr(comma + 1), v))
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": non-numeric value");
    values.push_back(calibrate ? clamp_voltage(v) : v);
  }
  if (values.empty())
    throw DataError("empty input: no data rows in " + path.string());
  return CapacitanceTrace(sample_rate_hz, std::move(values));
}

void write_trace_csv(const CapacitanceTrace& trace,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings
  if (!out) throw DataError("cannot write trace CSV: " + path.string());
  out << kHeader << '\n';
  const double dt = 1.0 / trace.sample_rate_hz();
  const auto& v = trace.values();
  std::ostringstream buf;
  for (std::size_t i = 0; i < v.size(); ++i) {
    char tbuf[32];
    std::snprintf(tbuf, sizeof(tbuf), "%.6f", static_cast<double>(i) * dt);
    buf << tbuf << ',' << shortest(v[i]) << '\n';
  }
  out << buf.str();
  if (!out) throw DataError("short write to " + path.string());
}

void write_experiment_manifest(const Experiment& e,
                               const std::filesystem::path& manifest_path,
                               const std::string& trace_path) {
  nlohmann::json j;
  j["id"] = e.id;
  j["inclination_deg"] = e.inclination_deg;
  j["u_gs_mps"] = e.u_gs_mps;
  j["u_os_mps"] = e.u_os_mps;
  j["label"] = std::string(to_string(e.label));
  j["trace_path"] = trace_path;
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + manifest_path.string());
  out << j.dump(2) << '\n';
}

Experiment load_experiment(const std::filesystem::path& manifest_path,
                           const PatternEnvelope& env,
                           std::size_t min_trace_len, bool calibrate) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest: " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError("invalid manifest JSON " + manifest_path.string() + ": " +
                    ex.what());
  }
  for (const char* key :
       {"id", "inclination_deg", "u_gs_mps", "u_os_mps", "label", "trace_path"})
    if (!j.contains(key))
      throw DataError("manifest " + manifest_path.string() +
                      " missing field \"" + key + "\"");

  auto trace_rel = j["trace_path"].get<std::string>();
  auto trace_path = manifest_path.parent_path() / trace_rel;
  // Default acquisition rate; the trace CSV itself carries only timestamps.
  CapacitanceTrace trace = ingest_csv(trace_path, 100.0, calibrate);

  Experiment e{j["id"].get<std::string>(),
               j["inclination_deg"].get<double>(),
               j["u_gs_mps"].get<double>(),
               j["u_os_mps"].get<double>(),
               parse_pattern(j["label"].get<std::string>()),
               std::move(trace)};

  auto check = validate_experiment(e, env, min_trace_len);
  if (!check.ok())
    throw DataError("experiment " + e.id + " rejected: " + check.joined());
  return e;
}

}  // namespace flowpat
