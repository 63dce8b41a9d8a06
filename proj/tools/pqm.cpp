// Command-line front end: deterministic simulation runs, parameter sweeps, curve
// diagnostics, calibration fits, emitter triangulation and detection-log replay.
//
// Exit codes: 0 success, 1 configuration/usage error, 2 runtime or data error.

#include <CLI11.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pqm/io.hpp"
#include "pqm/triangulation.hpp"

namespace {

using namespace pqm;

// ---------------------------------------------------------------------------
// simulate-single / simulate-coupled
// ---------------------------------------------------------------------------

struct SimulateOptions {
  double m_ratio = -1.0;
  int m = 0;
  int mosc = 100;
  int bins = 0;
  double phi = 0.0;
  bool ideal = false;
  std::uint64_t seed = 0;
  double mean_photons = 20000.0;
  double eta = 1.0;
  double dark = 0.0;
  double xi_sigma = 0.0;
  std::array<double, 5> visibility{1.0, 1.0, 1.0, 1.0, 1.0};
  std::array<double, 5> dphi{0.0, 0.0, 0.0, 0.0, 0.0};
  std::array<double, 5> pnoise{0.0, 0.0, 0.0, 0.0, 0.0};
  std::string out;
  std::string log;
  std::string config_path;

  // option handles used to decide which flags override a loaded config
  CLI::Option* opt_m_ratio = nullptr;
  CLI::Option* opt_m = nullptr;
  CLI::Option* opt_mosc = nullptr;
  CLI::Option* opt_bins = nullptr;
  CLI::Option* opt_phi = nullptr;
  CLI::Option* opt_ideal = nullptr;
  CLI::Option* opt_seed = nullptr;
  CLI::Option* opt_mean = nullptr;
  CLI::Option* opt_eta = nullptr;
  CLI::Option* opt_dark = nullptr;
  CLI::Option* opt_xi = nullptr;
  std::array<CLI::Option*, 5> opt_visibility{};
  std::array<CLI::Option*, 5> opt_dphi{};
  std::array<CLI::Option*, 5> opt_pnoise{};
  CLI::Option* opt_out = nullptr;
  CLI::Option* opt_log = nullptr;
};

constexpr std::array<const char*, 5> mzi_flag_suffix = {"0", "1", "2", "m1", "m2"};

void add_simulate_options(CLI::App* cmd, SimulateOptions& o, bool coupled) {
  o.opt_m_ratio = cmd->add_option("--m-ratio", o.m_ratio,
                                  "memory depth as a fraction of the drive period");
  o.opt_m = cmd->add_option("--m", o.m, "memory depth in bins");
  o.opt_m->excludes(o.opt_m_ratio);
  o.opt_mosc = cmd->add_option("--mosc", o.mosc, "drive period in bins")
                   ->capture_default_str();
  o.opt_bins = cmd->add_option(
      "--bins", o.bins, "total bins to simulate (default: m + 2 * mosc)");
  if (coupled)
    o.opt_phi = cmd->add_option("--phi", o.phi,
                                "relative drive phase of device 2, radians")
                    ->capture_default_str();
  o.opt_ideal = cmd->add_flag(
      "--ideal", o.ideal,
      "noise-free deterministic run instead of the count-level simulation");
  o.opt_seed = cmd->add_option("--seed", o.seed, "random seed of the count stream")
                   ->capture_default_str();
  o.opt_mean = cmd->add_option("--mean-photons", o.mean_photons,
                               "expected detected photons per measurement window")
                   ->capture_default_str();
  o.opt_eta = cmd->add_option("--eta", o.eta, "detector efficiency in (0, 1]")
                  ->capture_default_str();
  o.opt_dark = cmd->add_option("--dark", o.dark, "dark counts per measurement window")
                   ->capture_default_str();
  o.opt_xi = cmd->add_option("--xi-sigma", o.xi_sigma,
                             "sigma of the additive output-estimate noise")
                 ->capture_default_str();
  for (std::size_t i = 0; i < 5; ++i) {
    const std::string suffix = mzi_flag_suffix[i];
    o.opt_visibility[i] = cmd->add_option("--v" + suffix, o.visibility[i],
                                          "visibility of " + std::string(mzi_labels[i]));
    o.opt_dphi[i] = cmd->add_option("--dphi" + suffix, o.dphi[i],
                                    "static phase offset of " + std::string(mzi_labels[i]) +
                                        " (rad)");
    o.opt_pnoise[i] = cmd->add_option("--noise" + suffix, o.pnoise[i],
                                      "phase noise sigma of " + std::string(mzi_labels[i]) +
                                          " (rad)");
  }
  o.opt_out = cmd->add_option("--out", o.out, "output CSV path")->capture_default_str();
  o.opt_log = cmd->add_option("--log", o.log,
                              "write the detection-record log (JSON lines) here");
  cmd->add_option("--config", o.config_path,
                  "load a persisted run configuration; explicit flags override it");
}

RunConfig build_run_config(const SimulateOptions& o, Scenario scenario) {
  RunConfig cfg;
  if (!o.config_path.empty()) cfg = read_run_config(o.config_path);
  cfg.scenario.scenario = scenario;

  const auto set = [](CLI::Option* opt) { return opt != nullptr && opt->count() > 0; };
  if (set(o.opt_mosc) || o.config_path.empty()) cfg.scenario.period_bins = o.mosc;
  if (set(o.opt_m_ratio))
    cfg.scenario.memory_bins =
        std::max(1, static_cast<int>(std::lround(o.m_ratio * cfg.scenario.period_bins)));
  else if (set(o.opt_m))
    cfg.scenario.memory_bins = o.m;
  else if (o.config_path.empty())
    cfg.scenario.memory_bins = 1;
  if (set(o.opt_bins) || o.config_path.empty()) cfg.scenario.n_bins = o.bins;
  if (set(o.opt_phi) || o.config_path.empty()) cfg.scenario.phase_offset = o.phi;
  if (set(o.opt_ideal) || o.config_path.empty()) cfg.ideal = o.ideal;
  if (set(o.opt_seed) || o.config_path.empty()) cfg.counting.seed = o.seed;
  if (set(o.opt_mean) || o.config_path.empty())
    cfg.counting.mean_photons_per_substep = o.mean_photons;
  if (set(o.opt_eta) || o.config_path.empty()) cfg.counting.detector_efficiency = o.eta;
  if (set(o.opt_dark) || o.config_path.empty())
    cfg.counting.dark_counts_per_substep = o.dark;
  if (set(o.opt_xi) || o.config_path.empty())
    cfg.counting.estimator_noise_sigma = o.xi_sigma;
  for (std::size_t i = 0; i < 5; ++i) {
    MziModel& m = cfg.model(mzi_labels[i]);
    if (set(o.opt_visibility[i]) || o.config_path.empty()) m.visibility = o.visibility[i];
    if (set(o.opt_dphi[i]) || o.config_path.empty()) m.static_phase_offset = o.dphi[i];
    if (set(o.opt_pnoise[i]) || o.config_path.empty()) m.phase_noise_sigma = o.pnoise[i];
  }
  if (set(o.opt_out) || cfg.output_path.empty()) cfg.output_path = o.out;
  if (set(o.opt_log)) cfg.log_path = o.log;
  return cfg;
}

int run_simulate(const SimulateOptions& options, Scenario scenario) {
  RunConfig cfg = build_run_config(options, scenario);
  if (cfg.output_path.empty())
    cfg.output_path = scenario == Scenario::single ? "single.csv" : "coupled.csv";
  cfg.scenario.validate();
  cfg.counting.validate();
  cfg.mzis.validate();

  if (cfg.ideal && !cfg.log_path.empty())
    throw config_error("--log requires the count-level simulation (drop --ideal)");

  if (cfg.ideal) {
    const TimeSeries series = simulate_reference(cfg.scenario, cfg.mzis);
    write_timeseries_csv(series, cfg.output_path);
  } else {
    const ExperimentResult result =
        simulate_experiment(cfg.scenario, cfg.counting, cfg.mzis);
    write_timeseries_csv(result.series, cfg.output_path);
    if (!cfg.log_path.empty())
      write_detection_log(cfg.scenario, cfg.counting, result, cfg.log_path);
  }
  write_config_echo(cfg, cfg.output_path);
  std::cout << "wrote " << cfg.output_path << " (" << cfg.scenario.resolved_bins()
            << " bins)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
  std::string metric = "form-factor";
  std::string grid = "60x60";
  double phi_min = 0.0;
  double phi_max = std::numbers::pi;
  double t_min = 0.01;
  double t_max = 1.0;
  int mosc = 100;
  unsigned threads = 0;
  std::string out = "sweep.csv";
  std::string json;
};

int run_sweep(const SweepOptions& o) {
  std::size_t n_phi = 0, n_t = 0;
  {
    const auto x = o.grid.find('x');
    if (x == std::string::npos)
      throw config_error("--grid expects WIDTHxHEIGHT, e.g. 60x60");
    try {
      n_phi = std::stoul(o.grid.substr(0, x));
      n_t = std::stoul(o.grid.substr(x + 1));
    } catch (const std::exception&) {
      throw config_error("--grid expects WIDTHxHEIGHT, e.g. 60x60");
    }
  }
  SweepMetric metric;
  if (o.metric == "form-factor")
    metric = SweepMetric::form_factor;
  else if (o.metric == "self-intersection")
    metric = SweepMetric::self_intersection;
  else
    throw config_error("--metric must be form-factor or self-intersection");

  const SweepGrid grid =
      SweepGrid::regular(n_phi, n_t, o.phi_min, o.phi_max, o.t_min, o.t_max, o.mosc);
  const SweepMap map = sweep_map(metric, grid, o.threads);
  write_sweep_csv(map, o.out);
  if (!o.json.empty()) write_sweep_json(map, o.json);

  std::string echo;
  echo += "schema_version = 1\n";
  echo += "kind = sweep\n";
  echo += std::string("metric = ") + to_string(metric) + "\n";
  echo += "grid = " + std::to_string(n_phi) + "x" + std::to_string(n_t) + "\n";
  echo += "phi_min = " + format_double(o.phi_min) + "\n";
  echo += "phi_max = " + format_double(o.phi_max) + "\n";
  echo += "t_min = " + format_double(o.t_min) + "\n";
  echo += "t_max = " + format_double(o.t_max) + "\n";
  echo += "m_osc = " + std::to_string(o.mosc) + "\n";
  echo += "output = " + o.out + "\n";
  if (!o.json.empty()) echo += "json = " + o.json + "\n";
  io_detail::write_file(config_echo_path(o.out), echo);

  std::cout << "wrote " << o.out << " (" << n_phi * n_t << " cells)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeOptions {
  std::string input;
  int mosc = 0;  // 0: take from the config echo next to the file, else 100
  int m = -1;    // -1: take from the echo, else 0
  std::string relation = "all";
  double pinch_tolerance = 1e-3;
  std::string out;
};

int run_analyze(const AnalyzeOptions& o) {
  TimeSeries series = read_timeseries_csv(o.input);

  int mosc = o.mosc;
  int m = o.m;
  const auto echo = config_echo_path(o.input);
  if ((mosc == 0 || m < 0) && std::filesystem::exists(echo)) {
    const RunConfig stored = read_run_config(echo);
    if (mosc == 0) mosc = stored.scenario.period_bins;
    if (m < 0) m = stored.scenario.memory_bins;
  }
  if (mosc == 0) mosc = 100;
  if (m < 0) m = 0;
  series.period_bins = mosc;
  series.memory_bins = m;

  std::vector<std::pair<std::string, Relation>> wanted;
  const auto names = sweep_relation_names();
  const auto rels = sweep_relations();
  if (o.relation == "all") {
    const std::size_t n = series.devices.size() == 1 ? 1 : 4;
    for (std::size_t i = 0; i < n; ++i) wanted.emplace_back(names[i], rels[i]);
  } else {
    bool found = false;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (o.relation == names[i] || (std::string("11") == o.relation && i == 0) ||
          (std::string("22") == o.relation && i == 1) ||
          (std::string("21") == o.relation && i == 2) ||
          (std::string("12") == o.relation && i == 3)) {
        wanted.emplace_back(names[i], rels[i]);
        found = true;
        break;
      }
    if (!found)
      throw config_error("--relation must be all, 11, 22, 21 or 12");
  }

  std::string report = "pqm curve diagnostics\n";
  report += "schema_version = 1\n";
  report += "source = " + o.input + "\n";
  report += "m_osc = " + std::to_string(mosc) + "\n";
  report += "m = " + std::to_string(m) + "\n";
  for (const auto& [name, rel] : wanted) {
    const HysteresisCurve curve = extract_steady_cycle(series, rel);
    const CurveDiagnostics d = analyze_curve(curve, o.pinch_tolerance);
    const std::string base = std::string("relation.") + name;
    report += base + ".area = " + format_double(d.area) + "\n";
    report += base + ".perimeter = " + format_double(d.perimeter) + "\n";
    report += base + ".form_factor = " + format_double(d.form_factor) + "\n";
    report += base + ".self_intersecting = " + (d.self_intersecting ? "true" : "false") + "\n";
    std::string pts;
    for (const Point& p : d.intersection_points) {
      if (!pts.empty()) pts += "; ";
      pts += format_double(p.x) + "," + format_double(p.y);
    }
    report += base + ".intersection_points = " + pts + "\n";
    report += base + ".pinched_at_origin = " + (d.pinched_at_origin ? "true" : "false") + "\n";
  }

  std::cout << report;
  if (!o.out.empty()) io_detail::write_file(o.out, report);
  return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitCliOptions {
  std::vector<std::string> targets;
  std::vector<int> memory;
  std::vector<double> memory_ratio;
  int mosc = 100;
  std::string scenario = "single";
  double v_lo = 0.7;
  double v_hi = 1.0;
  double dphi_max = 0.25;
  int budget = 400;
  int restarts = 3;
  std::uint64_t seed = 1;
  std::string out;
};

int run_fit(const FitCliOptions& o) {
  const Scenario scenario = scenario_from_string(o.scenario);
  if (o.targets.empty()) throw config_error("fit: provide at least one --target CSV");
  std::vector<int> memory = o.memory;
  if (memory.empty())
    for (double r : o.memory_ratio)
      memory.push_back(std::max(1, static_cast<int>(std::lround(r * o.mosc))));
  if (memory.size() != o.targets.size())
    throw config_error("fit: need one --m (or --m-ratio) per --target");

  std::vector<FitTarget> targets;
  for (std::size_t i = 0; i < o.targets.size(); ++i) {
    TimeSeries series = read_timeseries_csv(o.targets[i]);
    series.period_bins = o.mosc;
    series.memory_bins = memory[i];
    const Scenario file_scenario =
        series.devices.size() == 1 ? Scenario::single : Scenario::coupled;
    if (file_scenario != scenario)
      throw config_error("fit: target '" + o.targets[i] + "' is a " +
                         to_string(file_scenario) + " series, expected " +
                         to_string(scenario));
    FitTarget target;
    target.config.scenario = scenario;
    target.config.period_bins = o.mosc;
    target.config.memory_bins = memory[i];
    for (const Relation& rel : fit_relations(scenario))
      target.curves.push_back(extract_steady_cycle(series, rel));
    targets.push_back(std::move(target));
  }

  FitOptions options;
  options.bounds.visibility_lo = o.v_lo;
  options.bounds.visibility_hi = o.v_hi;
  options.bounds.phase_limit = o.dphi_max;
  options.budget = o.budget;
  options.restarts = o.restarts;
  options.seed = o.seed;

  FitParameters init = FitParameters::ideal(fitted_mzi_count(scenario));
  for (double& v : init.visibilities) v = o.v_hi;

  const FitReport report = fit_parameters(targets, init, options);
  const std::string text = fit_report_text(scenario, report);
  std::cout << text;
  if (!o.out.empty()) {
    io_detail::write_file(o.out, text);
    std::string echo;
    echo += "schema_version = 1\n";
    echo += "kind = fit\n";
    echo += "scenario = " + o.scenario + "\n";
    echo += "m_osc = " + std::to_string(o.mosc) + "\n";
    for (std::size_t i = 0; i < o.targets.size(); ++i)
      echo += "target." + std::to_string(i) + " = " + o.targets[i] +
              " (m = " + std::to_string(memory[i]) + ")\n";
    echo += "visibility_lo = " + format_double(o.v_lo) + "\n";
    echo += "visibility_hi = " + format_double(o.v_hi) + "\n";
    echo += "phase_limit = " + format_double(o.dphi_max) + "\n";
    echo += "budget = " + std::to_string(o.budget) + "\n";
    echo += "restarts = " + std::to_string(o.restarts) + "\n";
    echo += "seed = " + std::to_string(o.seed) + "\n";
    echo += "output = " + o.out + "\n";
    io_detail::write_file(config_echo_path(o.out), echo);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// triangulate
// ---------------------------------------------------------------------------

struct TriangulateOptions {
  std::string frame;   // x1,y1,x2,y2,x3,y3,xp,yp -> record radii
  std::string refs;    // x1,y1,x2,y2,x3,y3
  std::string radii;   // r1,r2,r3
  std::string file;    // structured-text alternative to the inline options
  double tolerance = 1e-3;
  std::string out;
};

std::vector<double> parse_number_list(const std::string& text, std::size_t expected,
                                      const std::string& what) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    values.push_back(parse_double_field(
        std::string_view(text).substr(pos, end - pos), what));
    if (end == text.size()) break;
    pos = end + 1;
  }
  if (values.size() != expected)
    throw config_error(what + ": expected " + std::to_string(expected) +
                       " comma-separated numbers, got " + std::to_string(values.size()));
  return values;
}

int run_triangulate(const TriangulateOptions& o) {
  std::string frame_text = o.frame;
  std::string refs_text = o.refs;
  std::string radii_text = o.radii;
  double tolerance = o.tolerance;

  if (!o.file.empty()) {
    // keys: refs = x1,y1,...,y3 plus either poi = x,y or radii = r1,r2,r3
    const std::string text = io_detail::read_file(o.file);
    std::string poi_text;
    for (std::string_view line : io_detail::split_lines(text)) {
      if (line.empty() || line.front() == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw parse_error(o.file + ": expected 'key = value' lines");
      const auto trim = [](std::string_view s) {
        while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
        while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
        return std::string(s);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key == "refs")
        refs_text = value;
      else if (key == "poi")
        poi_text = value;
      else if (key == "radii")
        radii_text = value;
      else if (key == "tolerance")
        tolerance = parse_double_field(value, o.file);
      else
        throw parse_error(o.file + ": unknown key '" + key + "'");
    }
    if (!poi_text.empty() && !refs_text.empty()) frame_text = refs_text + "," + poi_text;
    if (!poi_text.empty() && !radii_text.empty())
      throw config_error("triangulate: give either poi or radii, not both");
  }

  std::string output;
  if (!frame_text.empty() && radii_text.empty()) {
    const auto v = parse_number_list(frame_text, 8, "triangulate --frame");
    const ReferenceFrame frame{{{{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}}}, {v[6], v[7]}};
    const auto radii = compute_radii(frame);
    output = "r1 = " + format_double(radii[0]) + "\nr2 = " + format_double(radii[1]) +
             "\nr3 = " + format_double(radii[2]) + "\n";
  } else if (!refs_text.empty() && !radii_text.empty()) {
    const auto c = parse_number_list(refs_text, 6, "triangulate --refs");
    const auto r = parse_number_list(radii_text, 3, "triangulate --radii");
    const Point p = relocate({{{c[0], c[1]}, {c[2], c[3]}, {c[4], c[5]}}},
                             {r[0], r[1], r[2]}, tolerance);
    output = "x = " + format_double(p.x) + "\ny = " + format_double(p.y) + "\n";
  } else {
    throw config_error(
        "triangulate: give --frame (record radii), or --refs with --radii (relocate), "
        "or --file");
  }
  std::cout << output;
  if (!o.out.empty()) io_detail::write_file(o.out, output);
  return 0;
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

struct ReplayOptions {
  std::string log;
  std::string out = "replay.csv";
};

int run_replay(const ReplayOptions& o) {
  const TimeSeries series = replay(o.log);
  write_timeseries_csv(series, o.out);
  std::cout << "wrote " << o.out << " (" << series.bins() << " bins)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"photonic quantum memristor simulation and analysis toolkit"};
  app.require_subcommand(1);

  SimulateOptions single_opts;
  auto* cmd_single = app.add_subcommand(
      "simulate-single", "simulate one memristor under a sinusoidal drive");
  add_simulate_options(cmd_single, single_opts, false);

  SimulateOptions coupled_opts;
  auto* cmd_coupled = app.add_subcommand(
      "simulate-coupled", "simulate two memristors with crossed feedback");
  add_simulate_options(cmd_coupled, coupled_opts, true);

  SweepOptions sweep_opts;
  auto* cmd_sweep = app.add_subcommand(
      "sweep", "map a hysteresis metric over drive phase and memory ratio");
  cmd_sweep->add_option("--metric", sweep_opts.metric,
                        "form-factor or self-intersection")
      ->capture_default_str();
  cmd_sweep->add_option("--grid", sweep_opts.grid, "grid size as PHIxT, e.g. 60x60")
      ->capture_default_str();
  cmd_sweep->add_option("--phi-min", sweep_opts.phi_min)->capture_default_str();
  cmd_sweep->add_option("--phi-max", sweep_opts.phi_max)->capture_default_str();
  cmd_sweep->add_option("--t-min", sweep_opts.t_min)->capture_default_str();
  cmd_sweep->add_option("--t-max", sweep_opts.t_max)->capture_default_str();
  cmd_sweep->add_option("--mosc", sweep_opts.mosc, "drive period in bins")
      ->capture_default_str();
  cmd_sweep->add_option("--threads", sweep_opts.threads,
                        "worker threads (0 = hardware default)")
      ->capture_default_str();
  cmd_sweep->add_option("--out", sweep_opts.out, "output CSV path")->capture_default_str();
  cmd_sweep->add_option("--json", sweep_opts.json, "also write plot-ready JSON here");

  AnalyzeOptions analyze_opts;
  auto* cmd_analyze =
      app.add_subcommand("analyze", "hysteresis diagnostics of an exported series");
  cmd_analyze->add_option("input", analyze_opts.input, "time-series CSV")->required();
  cmd_analyze->add_option("--mosc", analyze_opts.mosc,
                          "drive period in bins (default: config echo, else 100)");
  cmd_analyze->add_option("--m", analyze_opts.m,
                          "memory depth in bins (default: config echo, else 0)");
  cmd_analyze->add_option("--relation", analyze_opts.relation,
                          "all, 11, 22, 21 or 12")
      ->capture_default_str();
  cmd_analyze->add_option("--pinch-tolerance", analyze_opts.pinch_tolerance)
      ->capture_default_str();
  cmd_analyze->add_option("--out", analyze_opts.out, "also write the report here");

  FitCliOptions fit_opts;
  auto* cmd_fit = app.add_subcommand(
      "fit", "fit interferometer visibilities and phase offsets to target curves");
  cmd_fit->add_option("--target", fit_opts.targets, "target time-series CSV (repeatable)");
  cmd_fit->add_option("--m", fit_opts.memory, "memory depth per target (repeatable)");
  cmd_fit->add_option("--m-ratio", fit_opts.memory_ratio,
                      "memory depth per target as a period fraction (repeatable)");
  cmd_fit->add_option("--mosc", fit_opts.mosc)->capture_default_str();
  cmd_fit->add_option("--scenario", fit_opts.scenario, "single or coupled")
      ->capture_default_str();
  cmd_fit->add_option("--v-lo", fit_opts.v_lo, "visibility lower bound")
      ->capture_default_str();
  cmd_fit->add_option("--v-hi", fit_opts.v_hi, "visibility upper bound")
      ->capture_default_str();
  cmd_fit->add_option("--dphi-max", fit_opts.dphi_max, "|static phase offset| bound")
      ->capture_default_str();
  cmd_fit->add_option("--budget", fit_opts.budget, "simplex iterations per restart")
      ->capture_default_str();
  cmd_fit->add_option("--restarts", fit_opts.restarts)->capture_default_str();
  cmd_fit->add_option("--seed", fit_opts.seed)->capture_default_str();
  cmd_fit->add_option("--out", fit_opts.out, "write the fit report here");

  TriangulateOptions tri_opts;
  auto* cmd_tri = app.add_subcommand(
      "triangulate", "record emitter radii or relocate the emitter in a new frame");
  cmd_tri->add_option("--frame", tri_opts.frame,
                      "x1,y1,x2,y2,x3,y3,xp,yp: references plus point of interest");
  cmd_tri->add_option("--refs", tri_opts.refs, "x1,y1,x2,y2,x3,y3: new reference points");
  cmd_tri->add_option("--radii", tri_opts.radii, "r1,r2,r3: recorded radii");
  cmd_tri->add_option("--file", tri_opts.file,
                      "structured-text input (refs = ..., poi = ... or radii = ...)");
  cmd_tri->add_option("--tolerance", tri_opts.tolerance,
                      "acceptable circle residual (micrometers)")
      ->capture_default_str();
  cmd_tri->add_option("--out", tri_opts.out, "also write the result here");

  ReplayOptions replay_opts;
  auto* cmd_replay = app.add_subcommand(
      "replay", "recompute a series from a persisted detection log");
  cmd_replay->add_option("log", replay_opts.log, "detection log (JSON lines)")->required();
  cmd_replay->add_option("--out", replay_opts.out, "output CSV path")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_single->parsed()) return run_simulate(single_opts, Scenario::single);
    if (cmd_coupled->parsed()) return run_simulate(coupled_opts, Scenario::coupled);
    if (cmd_sweep->parsed()) return run_sweep(sweep_opts);
    if (cmd_analyze->parsed()) return run_analyze(analyze_opts);
    if (cmd_fit->parsed()) return run_fit(fit_opts);
    if (cmd_tri->parsed()) return run_triangulate(tri_opts);
    if (cmd_replay->parsed()) return run_replay(replay_opts);
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
