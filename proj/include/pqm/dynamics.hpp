#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "pqm/errors.hpp"
#include "pqm/optics.hpp"

namespace pqm {

enum class Scenario { single, coupled };

inline const char* to_string(Scenario s) {
  return s == Scenario::single ? "single" : "coupled";
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "single") return Scenario::single;
  if (s == "coupled") return Scenario::coupled;
  throw config_error("unknown scenario '" + s + "' (expected 'single' or 'coupled')");
}

/// Sinusoidal input modulation: value(k) = sin^2(pi k / period_bins + phase_offset).
struct DriveConfig {
  int period_bins = 100;      // bins per oscillation period
  double phase_offset = 0.0;  // radians

  void validate() const {
    if (period_bins < 2) throw config_error("DriveConfig: period_bins must be >= 2");
    if (!std::isfinite(phase_offset))
      throw config_error("DriveConfig: phase_offset must be finite");
  }
};

inline double drive_value(std::int64_t bin, const DriveConfig& cfg) {
  cfg.validate();
  const double s = std::sin(std::numbers::pi * static_cast<double>(bin) /
                                static_cast<double>(cfg.period_bins) +
                            cfg.phase_offset);
  return s * s;
}

/// Sliding window of the last M input estimates. Starts as all zeros; every push
/// evicts the oldest entry, so the length is always exactly M.
class FeedbackBuffer {
 public:
  explicit FeedbackBuffer(int capacity) : entries_(checked(capacity), 0.0) {}

  void push(double value) {
    entries_[head_] = value;
    head_ = (head_ + 1) % entries_.size();
  }

  int capacity() const { return static_cast<int>(entries_.size()); }

  // Storage order is a ring; only sums over the window are order-sensitive-free.
  const std::vector<double>& entries() const { return entries_; }

  // Entries in age order, oldest first.
  std::vector<double> snapshot() const {
    std::vector<double> out(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i)
      out[i] = entries_[(head_ + i) % entries_.size()];
    return out;
  }

 private:
  static std::size_t checked(int capacity) {
    if (capacity < 1) throw config_error("FeedbackBuffer: capacity must be >= 1");
    return static_cast<std::size_t>(capacity);
  }

  std::vector<double> entries_;
  std::size_t head_ = 0;
};

/// Feedback law: 1/2 + (1/M) * sum(entries - 1/2). Recomputed from scratch so the
/// stored reflectance never drifts from its buffer.
inline double update_reflectance(const FeedbackBuffer& buffer) {
  double acc = 0.0;
  for (double e : buffer.entries()) acc += e - 0.5;
  return 0.5 + acc / static_cast<double>(buffer.capacity());
}

struct MemristorState {
  FeedbackBuffer buffer;
  double reflectance;  // always equals update_reflectance(buffer)

  explicit MemristorState(int memory_bins)
      : buffer(memory_bins), reflectance(update_reflectance(buffer)) {}
};

/// Advance one bin. The bin's input enters the feedback window first; the output is
/// attenuated with the refreshed reflectance, so a memory length of one bin gives the
/// memoryless relation out = (1 - in) * in exactly.
inline double step_single(MemristorState& state, double input) {
  if (!(input >= 0.0 && input <= 1.0))
    throw std::domain_error("step_single: input must lie in [0, 1]");
  state.buffer.push(input);
  state.reflectance = update_reflectance(state.buffer);
  return (1.0 - state.reflectance) * input;
}

struct CoupledOutputs {
  double device1 = 0.0;
  double device2 = 0.0;
};

/// Crossed feedback: each device's window records the other device's input.
inline CoupledOutputs step_coupled(MemristorState& m1, MemristorState& m2, double input1,
                                   double input2) {
  if (!(input1 >= 0.0 && input1 <= 1.0) || !(input2 >= 0.0 && input2 <= 1.0))
    throw std::domain_error("step_coupled: inputs must lie in [0, 1]");
  m1.buffer.push(input2);
  m2.buffer.push(input1);
  m1.reflectance = update_reflectance(m1.buffer);
  m2.reflectance = update_reflectance(m2.buffer);
  return {(1.0 - m1.reflectance) * input1, (1.0 - m2.reflectance) * input2};
}

struct DeviceSeries {
  std::vector<double> n_in;   // input estimate per bin
  std::vector<double> n_out;  // output estimate per bin
  std::vector<double> r;      // feedback reflectance in force during the bin
};

struct TimeSeries {
  Scenario scenario = Scenario::single;
  int period_bins = 0;  // bins per drive period (0 when unknown, e.g. plain CSV import)
  int memory_bins = 0;  // feedback window length
  std::vector<DeviceSeries> devices;

  std::size_t bins() const { return devices.empty() ? 0 : devices[0].n_in.size(); }
};

struct ScenarioConfig {
  Scenario scenario = Scenario::single;
  int period_bins = 100;      // M_osc
  int memory_bins = 1;        // M
  double phase_offset = 0.0;  // relative drive phase of device 2 (coupled only), radians
  int n_bins = 0;             // 0 selects the default memory_bins + 2 * period_bins

  int resolved_bins() const {
    return n_bins > 0 ? n_bins : memory_bins + 2 * period_bins;
  }

  void validate() const {
    if (period_bins < 2) throw config_error("ScenarioConfig: period_bins must be >= 2");
    if (memory_bins < 1) throw config_error("ScenarioConfig: memory_bins must be >= 1");
    if (!std::isfinite(phase_offset))
      throw config_error("ScenarioConfig: phase_offset must be finite");
    if (resolved_bins() < memory_bins + period_bins)
      throw config_error(
          "ScenarioConfig: n_bins too small to hold one steady period after the buffer "
          "fills (need >= memory_bins + period_bins)");
  }
};

/// Per-interferometer models keyed by chip role. MZI-0 modulates the input in the
/// single scenario and splits it between the devices in the coupled one; MZI-1/MZI-2
/// modulate the coupled inputs; MZI-M1/MZI-M2 are the memristors.
struct MziTable {
  MziModel mzi0;
  MziModel mzi1;
  MziModel mzi2;
  MziModel mem1;
  MziModel mem2;

  void validate() const {
    mzi0.validate();
    mzi1.validate();
    mzi2.validate();
    mem1.validate();
    mem2.validate();
  }
};

/// Noise-free ideal-optics trajectory. Deterministic; after the first memory_bins
/// bins the series is exactly periodic with the drive period.
inline TimeSeries run_trajectory(const ScenarioConfig& cfg) {
  cfg.validate();
  const int n = cfg.resolved_bins();
  TimeSeries ts;
  ts.scenario = cfg.scenario;
  ts.period_bins = cfg.period_bins;
  ts.memory_bins = cfg.memory_bins;
  const DriveConfig drive1{cfg.period_bins, 0.0};
  if (cfg.scenario == Scenario::single) {
    ts.devices.resize(1);
    MemristorState m(cfg.memory_bins);
    for (int k = 0; k < n; ++k) {
      const double x = drive_value(k, drive1);
      const double y = step_single(m, x);
      ts.devices[0].n_in.push_back(x);
      ts.devices[0].n_out.push_back(y);
      ts.devices[0].r.push_back(m.reflectance);
    }
  } else {
    const DriveConfig drive2{cfg.period_bins, cfg.phase_offset};
    ts.devices.resize(2);
    MemristorState m1(cfg.memory_bins);
    MemristorState m2(cfg.memory_bins);
    for (int k = 0; k < n; ++k) {
      const double x1 = drive_value(k, drive1);
      const double x2 = drive_value(k, drive2);
      const CoupledOutputs out = step_coupled(m1, m2, x1, x2);
      ts.devices[0].n_in.push_back(x1);
      ts.devices[0].n_out.push_back(out.device1);
      ts.devices[0].r.push_back(m1.reflectance);
      ts.devices[1].n_in.push_back(x2);
      ts.devices[1].n_out.push_back(out.device2);
      ts.devices[1].r.push_back(m2.reflectance);
    }
  }
  return ts;
}

/// Noise-free trajectory through non-ideal interferometers: the infinite-count,
/// zero-phase-noise limit of the measured experiment. Inputs are the modulators'
/// effective transmissions, the feedback consumes those realized inputs, and each
/// memristor applies its own effective reflectance at the commanded phase.
inline TimeSeries simulate_reference(const ScenarioConfig& cfg, const MziTable& mzis) {
  cfg.validate();
  mzis.validate();
  const int n = cfg.resolved_bins();
  TimeSeries ts;
  ts.scenario = cfg.scenario;
  ts.period_bins = cfg.period_bins;
  ts.memory_bins = cfg.memory_bins;
  const DriveConfig drive1{cfg.period_bins, 0.0};
  if (cfg.scenario == Scenario::single) {
    ts.devices.resize(1);
    MemristorState m(cfg.memory_bins);
    for (int k = 0; k < n; ++k) {
      const double x =
          effective_reflectance(mzis.mzi0, phase_for_reflectance(drive_value(k, drive1)));
      m.buffer.push(x);
      m.reflectance = update_reflectance(m.buffer);
      const double r_eff = effective_reflectance(
          mzis.mem1, phase_for_reflectance(clamp_reflectance(m.reflectance)));
      ts.devices[0].n_in.push_back(x);
      ts.devices[0].n_out.push_back((1.0 - r_eff) * x);
      ts.devices[0].r.push_back(m.reflectance);
    }
  } else {
    const DriveConfig drive2{cfg.period_bins, cfg.phase_offset};
    ts.devices.resize(2);
    MemristorState m1(cfg.memory_bins);
    MemristorState m2(cfg.memory_bins);
    for (int k = 0; k < n; ++k) {
      const double x1 =
          effective_reflectance(mzis.mzi1, phase_for_reflectance(drive_value(k, drive1)));
      const double x2 =
          effective_reflectance(mzis.mzi2, phase_for_reflectance(drive_value(k, drive2)));
      m1.buffer.push(x2);
      m2.buffer.push(x1);
      m1.reflectance = update_reflectance(m1.buffer);
      m2.reflectance = update_reflectance(m2.buffer);
      const double r1 = effective_reflectance(
          mzis.mem1, phase_for_reflectance(clamp_reflectance(m1.reflectance)));
      const double r2 = effective_reflectance(
          mzis.mem2, phase_for_reflectance(clamp_reflectance(m2.reflectance)));
      ts.devices[0].n_in.push_back(x1);
      ts.devices[0].n_out.push_back((1.0 - r1) * x1);
      ts.devices[0].r.push_back(m1.reflectance);
      ts.devices[1].n_in.push_back(x2);
      ts.devices[1].n_out.push_back((1.0 - r2) * x2);
      ts.devices[1].r.push_back(m2.reflectance);
    }
  }
  return ts;
}

}  // namespace pqm
