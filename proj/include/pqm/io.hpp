#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "pqm/dynamics.hpp"
#include "pqm/errors.hpp"
#include "pqm/fit.hpp"
#include "pqm/geometry.hpp"
#include "pqm/measurement.hpp"

namespace pqm {

// ---------------------------------------------------------------------------
// Number formatting: shortest decimal form that parses back to the same double,
// so exports round-trip bit-exactly.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double_field(std::string_view s, const std::string& context) {
  double v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw parse_error(context + ": expected a number, got '" + std::string(s) + "'");
  return v;
}

inline std::int64_t parse_int_field(std::string_view s, const std::string& context) {
  std::int64_t v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw parse_error(context + ": expected an integer, got '" + std::string(s) + "'");
  return v;
}

namespace io_detail {

inline std::string location(const std::string& name, std::size_t line, std::size_t column) {
  return name + ":" + std::to_string(line) + ":" + std::to_string(column);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw data_error("failed writing '" + path.string() + "'");
}

// Lines without their trailing newline; a final newline does not add a line.
inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

struct Field {
  std::string_view text;
  std::size_t column = 0;  // 1-based character offset within the line
};

inline std::vector<Field> split_csv_fields(std::string_view line) {
  std::vector<Field> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t end = line.find(',', pos);
    if (end == std::string_view::npos) end = line.size();
    fields.push_back({line.substr(pos, end - pos), pos + 1});
    if (end == line.size()) break;
    pos = end + 1;
  }
  return fields;
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Time-series CSV: header `bin,n_in_1,n_out_1,r_1[,n_in_2,n_out_2,r_2]`.
// ---------------------------------------------------------------------------

inline std::string timeseries_to_csv(const TimeSeries& series) {
  std::string out = "bin";
  for (std::size_t d = 0; d < series.devices.size(); ++d) {
    const std::string suffix = "_" + std::to_string(d + 1);
    out += ",n_in" + suffix + ",n_out" + suffix + ",r" + suffix;
  }
  out += "\n";
  for (std::size_t k = 0; k < series.bins(); ++k) {
    out += std::to_string(k);
    for (const DeviceSeries& dev : series.devices) {
      out += "," + format_double(dev.n_in[k]);
      out += "," + format_double(dev.n_out[k]);
      out += "," + format_double(dev.r[k]);
    }
    out += "\n";
  }
  return out;
}

inline void write_timeseries_csv(const TimeSeries& series, const std::filesystem::path& path) {
  io_detail::write_file(path, timeseries_to_csv(series));
}

/// Parse a time-series CSV. The drive period and memory length are not part of the
/// schema, so they come back as 0; callers supply them (flags or config echo) before
/// extracting cycles.
inline TimeSeries parse_timeseries_csv(std::string_view text, const std::string& name) {
  const auto lines = io_detail::split_lines(text);
  if (lines.empty()) throw parse_error(name + ":1:1: empty file, expected a CSV header");
  const auto header = io_detail::split_csv_fields(lines[0]);
  std::size_t devices = 0;
  if (header.size() == 4)
    devices = 1;
  else if (header.size() == 7)
    devices = 2;
  else
    throw parse_error(io_detail::location(name, 1, 1) +
                      ": expected 4 or 7 columns in the header, got " +
                      std::to_string(header.size()));
  static constexpr std::array<const char*, 7> expected = {
      "bin", "n_in_1", "n_out_1", "r_1", "n_in_2", "n_out_2", "r_2"};
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c].text != expected[c])
      throw parse_error(io_detail::location(name, 1, header[c].column) +
                        ": expected column '" + expected[c] + "', got '" +
                        std::string(header[c].text) + "'");

  TimeSeries series;
  series.scenario = devices == 1 ? Scenario::single : Scenario::coupled;
  series.devices.resize(devices);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = io_detail::split_csv_fields(lines[li]);
    if (fields.size() != header.size())
      throw parse_error(io_detail::location(name, li + 1, 1) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    const auto row = static_cast<std::int64_t>(series.bins());
    const auto bin = parse_int_field(
        fields[0].text, io_detail::location(name, li + 1, fields[0].column));
    if (bin != row)
      throw parse_error(io_detail::location(name, li + 1, fields[0].column) +
                        ": expected bin " + std::to_string(row) + ", got " +
                        std::to_string(bin));
    for (std::size_t d = 0; d < devices; ++d) {
      const auto& fin = fields[1 + 3 * d];
      const auto& fout = fields[2 + 3 * d];
      const auto& fr = fields[3 + 3 * d];
      series.devices[d].n_in.push_back(
          parse_double_field(fin.text, io_detail::location(name, li + 1, fin.column)));
      series.devices[d].n_out.push_back(
          parse_double_field(fout.text, io_detail::location(name, li + 1, fout.column)));
      series.devices[d].r.push_back(
          parse_double_field(fr.text, io_detail::location(name, li + 1, fr.column)));
    }
  }
  return series;
}

inline TimeSeries read_timeseries_csv(const std::filesystem::path& path) {
  return parse_timeseries_csv(io_detail::read_file(path), path.filename().string());
}

// ---------------------------------------------------------------------------
// Run configuration and its flat key = value echo. An echo is written next to
// every artifact so no run parameter is hidden.
// ---------------------------------------------------------------------------

inline constexpr std::array<const char*, 5> mzi_labels = {"MZI-0", "MZI-1", "MZI-2",
                                                          "MZI-M1", "MZI-M2"};

struct RunConfig {
  ScenarioConfig scenario;
  bool ideal = false;  // noise-free deterministic run, no counting layer
  MziTable mzis;
  CountingConfig counting;  // carries the seed
  std::string output_path;
  std::string log_path;  // detection-record log; empty when not requested

  MziModel& model(std::string_view label) {
    if (label == "MZI-0") return mzis.mzi0;
    if (label == "MZI-1") return mzis.mzi1;
    if (label == "MZI-2") return mzis.mzi2;
    if (label == "MZI-M1") return mzis.mem1;
    if (label == "MZI-M2") return mzis.mem2;
    throw config_error("unknown interferometer label '" + std::string(label) + "'");
  }
  const MziModel& model(std::string_view label) const {
    return const_cast<RunConfig*>(this)->model(label);
  }
};

inline std::string run_config_text(const RunConfig& cfg) {
  std::string out;
  const auto put = [&](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  put("schema_version", "1");
  put("scenario", to_string(cfg.scenario.scenario));
  put("m_osc", std::to_string(cfg.scenario.period_bins));
  put("m", std::to_string(cfg.scenario.memory_bins));
  put("phi", format_double(cfg.scenario.phase_offset));
  put("n_bins", std::to_string(cfg.scenario.resolved_bins()));
  put("mode", cfg.ideal ? "ideal" : "counting");
  put("seed", std::to_string(cfg.counting.seed));
  put("mean_photons_per_substep", format_double(cfg.counting.mean_photons_per_substep));
  put("detector_efficiency", format_double(cfg.counting.detector_efficiency));
  put("dark_counts_per_substep", format_double(cfg.counting.dark_counts_per_substep));
  put("estimator_noise_sigma", format_double(cfg.counting.estimator_noise_sigma));
  put("output", cfg.output_path);
  put("log", cfg.log_path);
  for (const char* label : mzi_labels) {
    const MziModel& m = cfg.model(label);
    put(std::string("mzi.") + label + ".visibility", format_double(m.visibility));
    put(std::string("mzi.") + label + ".static_phase_offset",
        format_double(m.static_phase_offset));
    put(std::string("mzi.") + label + ".phase_noise_sigma",
        format_double(m.phase_noise_sigma));
  }
  return out;
}

inline RunConfig parse_run_config(std::string_view text, const std::string& name) {
  RunConfig cfg;
  cfg.scenario.n_bins = 0;
  bool seen_version = false;
  const auto lines = io_detail::split_lines(text);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string_view line = lines[li];
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw parse_error(io_detail::location(name, li + 1, 1) + ": expected 'key = value'");
    const auto trim = [](std::string_view s) {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
      while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
      return s;
    };
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};
    const std::string where = io_detail::location(name, li + 1, 1);
    if (key == "schema_version") {
      if (value != "1") throw parse_error(where + ": unsupported schema version " + value);
      seen_version = true;
    } else if (key == "scenario") {
      cfg.scenario.scenario = scenario_from_string(value);
    } else if (key == "m_osc") {
      cfg.scenario.period_bins = static_cast<int>(parse_int_field(value, where));
    } else if (key == "m") {
      cfg.scenario.memory_bins = static_cast<int>(parse_int_field(value, where));
    } else if (key == "phi") {
      cfg.scenario.phase_offset = parse_double_field(value, where);
    } else if (key == "n_bins") {
      cfg.scenario.n_bins = static_cast<int>(parse_int_field(value, where));
    } else if (key == "mode") {
      if (value != "ideal" && value != "counting")
        throw parse_error(where + ": mode must be 'ideal' or 'counting'");
      cfg.ideal = value == "ideal";
    } else if (key == "seed") {
      cfg.counting.seed = static_cast<std::uint64_t>(parse_int_field(value, where));
    } else if (key == "mean_photons_per_substep") {
      cfg.counting.mean_photons_per_substep = parse_double_field(value, where);
    } else if (key == "detector_efficiency") {
      cfg.counting.detector_efficiency = parse_double_field(value, where);
    } else if (key == "dark_counts_per_substep") {
      cfg.counting.dark_counts_per_substep = parse_double_field(value, where);
    } else if (key == "estimator_noise_sigma") {
      cfg.counting.estimator_noise_sigma = parse_double_field(value, where);
    } else if (key == "output") {
      cfg.output_path = value;
    } else if (key == "log") {
      cfg.log_path = value;
    } else if (key.starts_with("mzi.")) {
      const std::size_t dot = key.rfind('.');
      const std::string label = key.substr(4, dot - 4);
      const std::string field = key.substr(dot + 1);
      MziModel* m = nullptr;
      try {
        m = &cfg.model(label);
      } catch (const config_error&) {
        throw parse_error(where + ": unknown interferometer label '" + label + "'");
      }
      if (field == "visibility")
        m->visibility = parse_double_field(value, where);
      else if (field == "static_phase_offset")
        m->static_phase_offset = parse_double_field(value, where);
      else if (field == "phase_noise_sigma")
        m->phase_noise_sigma = parse_double_field(value, where);
      else
        throw parse_error(where + ": unknown interferometer field '" + field + "'");
    } else {
      throw parse_error(where + ": unknown key '" + key + "'");
    }
  }
  if (!seen_version)
    throw parse_error(name + ": missing schema_version key");
  return cfg;
}

inline std::filesystem::path config_echo_path(const std::filesystem::path& artifact) {
  std::filesystem::path p = artifact;
  p += ".config";
  return p;
}

inline void write_config_echo(const RunConfig& cfg, const std::filesystem::path& artifact) {
  io_detail::write_file(config_echo_path(artifact), run_config_text(cfg));
}

inline RunConfig read_run_config(const std::filesystem::path& path) {
  return parse_run_config(io_detail::read_file(path), path.filename().string());
}

// ---------------------------------------------------------------------------
// Detection-record log: JSON lines. First line holds the run header, then one
// line per bin with the raw counts (and the estimator-noise draws when enabled).
// ---------------------------------------------------------------------------

struct DetectionLog {
  ScenarioConfig scenario;
  CountingConfig counting;
  std::vector<DetectionRecord> records;
  std::vector<std::array<double, 2>> estimator_noise;
};

inline std::string detection_log_text(const ScenarioConfig& cfg,
                                      const CountingConfig& counting,
                                      const ExperimentResult& result) {
  nlohmann::json header = {
      {"format", "pqm-detection-log"},
      {"version", 1},
      {"scenario", to_string(cfg.scenario)},
      {"m_osc", cfg.period_bins},
      {"m", cfg.memory_bins},
      {"phi", cfg.phase_offset},
      {"n_bins", cfg.resolved_bins()},
      {"seed", counting.seed},
      {"mean_photons_per_substep", counting.mean_photons_per_substep},
      {"detector_efficiency", counting.detector_efficiency},
      {"dark_counts_per_substep", counting.dark_counts_per_substep},
      {"estimator_noise_sigma", counting.estimator_noise_sigma},
  };
  std::string out = header.dump() + "\n";
  for (std::size_t k = 0; k < result.records.size(); ++k) {
    const auto& rec = result.records[k];
    nlohmann::json line = {
        {"bin", k},
        {"ch2", rec.counts[0]},
        {"ch8", rec.counts[1]},
    };
    if (!result.estimator_noise.empty())
      line["xi"] = result.estimator_noise[k];
    out += line.dump() + "\n";
  }
  return out;
}

inline void write_detection_log(const ScenarioConfig& cfg, const CountingConfig& counting,
                                const ExperimentResult& result,
                                const std::filesystem::path& path) {
  io_detail::write_file(path, detection_log_text(cfg, counting, result));
}

inline DetectionLog parse_detection_log(std::string_view text, const std::string& name) {
  const auto lines = io_detail::split_lines(text);
  std::size_t n_lines = lines.size();
  while (n_lines > 0 && lines[n_lines - 1].empty()) --n_lines;
  if (n_lines == 0) throw parse_error(name + ": empty detection log");

  DetectionLog log;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(lines[0]);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(name + ":1: malformed header: " + e.what());
  }
  if (header.value("format", "") != "pqm-detection-log" || header.value("version", 0) != 1)
    throw parse_error(name + ":1: not a pqm detection log");
  try {
    log.scenario.scenario = scenario_from_string(header.at("scenario").get<std::string>());
    log.scenario.period_bins = header.at("m_osc").get<int>();
    log.scenario.memory_bins = header.at("m").get<int>();
    log.scenario.phase_offset = header.at("phi").get<double>();
    log.scenario.n_bins = header.at("n_bins").get<int>();
    log.counting.seed = header.at("seed").get<std::uint64_t>();
    log.counting.mean_photons_per_substep =
        header.at("mean_photons_per_substep").get<double>();
    log.counting.detector_efficiency = header.at("detector_efficiency").get<double>();
    log.counting.dark_counts_per_substep =
        header.at("dark_counts_per_substep").get<double>();
    log.counting.estimator_noise_sigma = header.at("estimator_noise_sigma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(name + ":1: incomplete header: " + e.what());
  }

  for (std::size_t li = 1; li < n_lines; ++li) {
    const std::string last_complete =
        "last complete bin " +
        (log.records.empty() ? std::string("none")
                             : std::to_string(log.records.size() - 1));
    nlohmann::json line;
    try {
      line = nlohmann::json::parse(lines[li]);
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(name + ":" + std::to_string(li + 1) +
                        ": malformed record (" + last_complete + "): " + e.what());
    }
    try {
      const auto bin = line.at("bin").get<std::size_t>();
      if (bin != log.records.size())
        throw parse_error(name + ":" + std::to_string(li + 1) + ": expected bin " +
                          std::to_string(log.records.size()) + ", got " +
                          std::to_string(bin));
      DetectionRecord rec;
      rec.counts[0] = line.at("ch2").get<std::array<std::int64_t, 3>>();
      rec.counts[1] = line.at("ch8").get<std::array<std::int64_t, 3>>();
      if (line.contains("xi"))
        log.estimator_noise.push_back(line.at("xi").get<std::array<double, 2>>());
      log.records.push_back(rec);
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(name + ":" + std::to_string(li + 1) +
                        ": malformed record (" + last_complete + "): " + e.what());
    }
  }
  if (static_cast<int>(log.records.size()) != log.scenario.resolved_bins())
    throw parse_error(
        name + ": log truncated after bin " +
        (log.records.empty() ? std::string("none") : std::to_string(log.records.size() - 1)) +
        " (header announces " + std::to_string(log.scenario.resolved_bins()) + " bins)");
  if (!log.estimator_noise.empty() && log.estimator_noise.size() != log.records.size())
    throw parse_error(name + ": estimator-noise entries present on only some records");
  return log;
}

inline DetectionLog read_detection_log(const std::filesystem::path& path) {
  return parse_detection_log(io_detail::read_file(path), path.filename().string());
}

/// Re-run estimators and feedback from a persisted detection log; reproduces the
/// original series bit-exactly without re-sampling any counts.
inline TimeSeries replay(const std::filesystem::path& path) {
  const DetectionLog log = read_detection_log(path);
  return replay_records(log.scenario, log.records, log.estimator_noise);
}

// ---------------------------------------------------------------------------
// Sweep exports: CSV (phi, t_ratio, one value column per relation) and
// plot-ready JSON.
// ---------------------------------------------------------------------------

inline std::string sweep_to_csv(const SweepMap& map) {
  std::string out = "phi,t_ratio";
  for (const char* rel : sweep_relation_names()) out += std::string(",") + rel;
  out += "\n";
  const std::size_t n_t = map.grid.t_ratio_values.size();
  for (std::size_t i = 0; i < map.grid.phi_values.size(); ++i) {
    for (std::size_t j = 0; j < n_t; ++j) {
      out += format_double(map.grid.phi_values[i]);
      out += "," + format_double(map.grid.t_ratio_values[j]);
      for (std::size_t r = 0; r < map.values.size(); ++r)
        out += "," + format_double(map.values[r][i * n_t + j]);
      out += "\n";
    }
  }
  return out;
}

inline void write_sweep_csv(const SweepMap& map, const std::filesystem::path& path) {
  io_detail::write_file(path, sweep_to_csv(map));
}

inline std::string sweep_to_json(const SweepMap& map) {
  nlohmann::json j = {
      {"metric", to_string(map.metric)},
      {"period_bins", map.grid.period_bins},
      {"phi", map.grid.phi_values},
      {"t_ratio", map.grid.t_ratio_values},
  };
  const std::size_t n_t = map.grid.t_ratio_values.size();
  const auto names = sweep_relation_names();
  for (std::size_t r = 0; r < names.size(); ++r) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < map.grid.phi_values.size(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < n_t; ++j) row.push_back(map.values[r][i * n_t + j]);
      rows.push_back(std::move(row));
    }
    j["values"][names[r]] = std::move(rows);
  }
  return j.dump(2) + "\n";
}

inline void write_sweep_json(const SweepMap& map, const std::filesystem::path& path) {
  io_detail::write_file(path, sweep_to_json(map));
}

// ---------------------------------------------------------------------------
// Fit report, structured text. Parameters are shown rounded to two decimals (the
// reporting convention) alongside their full-precision values.
// ---------------------------------------------------------------------------

inline std::string fit_report_text(Scenario scenario, const FitReport& report) {
  std::string out = "pqm fit report\n";
  const auto put = [&](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  const auto rounded = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  put("schema_version", "1");
  put("scenario", to_string(scenario));
  put("initial_loss", format_double(report.initial_loss));
  put("final_loss", format_double(report.final_loss));
  put("iterations", std::to_string(report.iterations));
  put("converged", report.converged ? "true" : "false");
  const std::vector<const char*> labels =
      scenario == Scenario::single
          ? std::vector<const char*>{"MZI-0", "MZI-M1"}
          : std::vector<const char*>{"MZI-1", "MZI-2", "MZI-M1", "MZI-M2"};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string base = std::string("mzi.") + labels[i];
    put(base + ".visibility", rounded(report.best.visibilities[i]));
    put(base + ".visibility_exact", format_double(report.best.visibilities[i]));
    put(base + ".static_phase_offset", rounded(report.best.phase_offsets[i]));
    put(base + ".static_phase_offset_exact", format_double(report.best.phase_offsets[i]));
  }
  for (std::size_t c = 0; c < report.curve_residuals.size(); ++c)
    put("residual.curve_" + std::to_string(c), format_double(report.curve_residuals[c]));
  return out;
}

}  // namespace pqm
