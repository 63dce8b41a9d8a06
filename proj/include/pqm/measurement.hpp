#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pqm/dynamics.hpp"
#include "pqm/errors.hpp"

namespace pqm {

struct CountingConfig {
  double mean_photons_per_substep = 20000.0;  // expected detected photons per window
  double detector_efficiency = 1.0;           // in (0, 1]
  double dark_counts_per_substep = 0.0;
  double estimator_noise_sigma = 0.0;  // additive Gaussian on the output estimate
  std::uint64_t seed = 0;

  void validate() const {
    if (!(mean_photons_per_substep >= 0.0) || !std::isfinite(mean_photons_per_substep))
      throw config_error("CountingConfig: mean photons per substep must be finite and >= 0");
    if (!(detector_efficiency > 0.0 && detector_efficiency <= 1.0))
      throw config_error("CountingConfig: detector efficiency must lie in (0, 1]");
    if (!(dark_counts_per_substep >= 0.0) || !std::isfinite(dark_counts_per_substep))
      throw config_error("CountingConfig: dark counts must be finite and >= 0");
    if (!(estimator_noise_sigma >= 0.0) || !std::isfinite(estimator_noise_sigma))
      throw config_error("CountingConfig: estimator noise sigma must be finite and >= 0");
  }
};

/// Photon counts of one time bin, keyed by output channel and phase-setting label.
/// Channel 0 is chip output 2 (device 1), channel 1 is chip output 8 (device 2).
/// In the single scenario only channel 0 carries the two memristor settings and the
/// bypass flux is counted on channel 1 during the theta window.
struct DetectionRecord {
  enum Label : int { setting_theta = 0, setting_theta_shifted = 1, setting_complementary = 2 };

  std::array<std::array<std::int64_t, 3>, 2> counts{};

  std::int64_t channel_total(int channel) const {
    const auto& c = counts[static_cast<std::size_t>(channel)];
    return c[0] + c[1] + c[2];
  }
};

struct Estimates {
  double n_in = 0.0;
  double n_out = 0.0;
};

/// Single-memristor estimators: n_in = (N(theta) + N(theta+pi/2)) / N_tot and
/// n_out = N(theta+pi/2) / N_tot, with N_tot adding the bypass counts.
inline Estimates estimate_single(const DetectionRecord& rec) {
  const std::int64_t n_theta = rec.counts[0][DetectionRecord::setting_theta];
  const std::int64_t n_shift = rec.counts[0][DetectionRecord::setting_theta_shifted];
  const std::int64_t n_bypass = rec.counts[1][DetectionRecord::setting_theta];
  const std::int64_t total = n_theta + n_shift + n_bypass;
  if (total <= 0) throw estimation_error("estimate_single: bin has no counts");
  return {static_cast<double>(n_theta + n_shift) / static_cast<double>(total),
          static_cast<double>(n_shift) / static_cast<double>(total)};
}

/// Coupled estimators: device 1 normalizes its channel-2 counts with the
/// complementary-modulation window, device 2 symmetrically on channel 8.
inline std::array<Estimates, 2> estimate_coupled(const DetectionRecord& rec) {
  std::array<Estimates, 2> out;
  for (int dev = 0; dev < 2; ++dev) {
    const auto& c = rec.counts[static_cast<std::size_t>(dev)];
    const std::int64_t total = c[DetectionRecord::setting_theta] +
                               c[DetectionRecord::setting_theta_shifted] +
                               c[DetectionRecord::setting_complementary];
    if (total <= 0)
      throw estimation_error("estimate_coupled: device " + std::to_string(dev + 1) +
                             " has no counts in bin");
    out[static_cast<std::size_t>(dev)] = {
        static_cast<double>(c[DetectionRecord::setting_theta] +
                            c[DetectionRecord::setting_theta_shifted]) /
            static_cast<double>(total),
        static_cast<double>(c[DetectionRecord::setting_theta_shifted]) /
            static_cast<double>(total)};
  }
  return out;
}

namespace count_detail {

inline std::int64_t poisson(double mean, std::mt19937_64& rng) {
  if (!(mean > 0.0)) return 0;  // zero-rate channels consume no draw
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}

inline std::int64_t binomial(std::int64_t n, double p, std::mt19937_64& rng) {
  if (n <= 0) return 0;
  return std::binomial_distribution<std::int64_t>(n, std::clamp(p, 0.0, 1.0))(rng);
}

inline double phase_noise(const MziModel& model, std::mt19937_64& rng) {
  if (model.phase_noise_sigma <= 0.0) return 0.0;  // no draw when disabled
  return std::normal_distribution<double>(0.0, model.phase_noise_sigma)(rng);
}

}  // namespace count_detail

/// One Poisson count per channel with mean eta * p * mean_photons + dark counts.
/// Channels with exactly zero mean consume no engine draw.
inline std::vector<std::int64_t> sample_counts(std::span<const double> probabilities,
                                               const CountingConfig& cfg,
                                               std::mt19937_64& rng) {
  cfg.validate();
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0 && p <= 1.0))
      throw std::domain_error("sample_counts: channel probability outside [0, 1]");
    sum += p;
  }
  if (sum > 1.0 + 1e-9)
    throw std::domain_error("sample_counts: channel probabilities sum above 1");
  std::vector<std::int64_t> out;
  out.reserve(probabilities.size());
  for (double p : probabilities)
    out.push_back(count_detail::poisson(
        cfg.detector_efficiency * p * cfg.mean_photons_per_substep +
            cfg.dark_counts_per_substep,
        rng));
  return out;
}

struct ExperimentResult {
  TimeSeries series;                    // per-bin estimates and feedback reflectance
  std::vector<DetectionRecord> records; // raw counts, one record per bin
  // Estimator noise added to each device's output estimate; empty when sigma == 0.
  std::vector<std::array<double, 2>> estimator_noise;
};

/// Count-level simulation of the per-bin measurement loop.
///
/// Each bin consumes stochastic draws from one seeded stream in this fixed order:
///   1. phase-noise draws of the modulation interferometers in layout order
///      (single: MZI-0; coupled: MZI-0, MZI-1, MZI-2), skipped when sigma is 0;
///   2. phase-noise draws of the memristor interferometers (MZI-M1, then MZI-M2);
///   3. channel counts: per device, the summed two-setting count of its output
///      channel, then its normalization-window count; a bin whose device total is
///      zero is re-drawn up to 3 times and then aborts the run;
///   4. the binomial split of each summed count between the theta and the
///      pi/2-shifted window, in device order;
///   5. one estimator-noise draw per device when enabled.
/// The two-setting sum is drawn before the memristor reflectance is applied because
/// the sum's law does not depend on it; splitting afterwards reproduces the
/// per-window Poisson law exactly while letting the feedback consume the bin's own
/// input estimate, matching the noise-free dynamics.
inline ExperimentResult simulate_experiment(const ScenarioConfig& cfg,
                                            const CountingConfig& counting,
                                            const MziTable& mzis) {
  cfg.validate();
  counting.validate();
  mzis.validate();
  using count_detail::binomial;
  using count_detail::phase_noise;
  using count_detail::poisson;

  std::mt19937_64 rng(counting.seed);
  const int n = cfg.resolved_bins();
  const double lambda = counting.detector_efficiency * counting.mean_photons_per_substep;
  const double dark = counting.dark_counts_per_substep;

  ExperimentResult result;
  result.series.scenario = cfg.scenario;
  result.series.period_bins = cfg.period_bins;
  result.series.memory_bins = cfg.memory_bins;
  result.records.reserve(static_cast<std::size_t>(n));

  const DriveConfig drive1{cfg.period_bins, 0.0};

  const auto split_probability = [&](double r_set, double x, double arm_scale) {
    const double rate_theta = arm_scale * lambda * r_set * x + dark;
    const double rate_shift = arm_scale * lambda * (1.0 - r_set) * x + dark;
    const double denom = rate_theta + rate_shift;
    return denom > 0.0 ? rate_theta / denom : 0.5;
  };

  if (cfg.scenario == Scenario::single) {
    result.series.devices.resize(1);
    MemristorState mem(cfg.memory_bins);
    for (int k = 0; k < n; ++k) {
      const double eps_mod = phase_noise(mzis.mzi0, rng);
      const double x = effective_reflectance(
          mzis.mzi0, phase_for_reflectance(drive_value(k, drive1)), eps_mod);
      const double eps_mem = phase_noise(mzis.mem1, rng);

      std::int64_t sum2 = 0;
      std::int64_t bypass = 0;
      for (int attempt = 0;; ++attempt) {
        sum2 = poisson(lambda * x + 2.0 * dark, rng);
        bypass = poisson(lambda * (1.0 - x) + dark, rng);
        if (sum2 + bypass > 0) break;
        if (attempt == 3)
          throw estimation_error("simulate_experiment: bin " + std::to_string(k) +
                                 " produced no counts after 3 re-draws");
      }

      DetectionRecord rec;
      rec.counts[1][DetectionRecord::setting_theta] = bypass;
      const double n_in_hat =
          static_cast<double>(sum2) / static_cast<double>(sum2 + bypass);

      mem.buffer.push(n_in_hat);
      mem.reflectance = update_reflectance(mem.buffer);
      const double r_set = effective_reflectance(
          mzis.mem1, phase_for_reflectance(clamp_reflectance(mem.reflectance)), eps_mem);

      const std::int64_t n_theta = binomial(sum2, split_probability(r_set, x, 1.0), rng);
      rec.counts[0][DetectionRecord::setting_theta] = n_theta;
      rec.counts[0][DetectionRecord::setting_theta_shifted] = sum2 - n_theta;

      Estimates est = estimate_single(rec);
      if (counting.estimator_noise_sigma > 0.0) {
        const double xi =
            std::normal_distribution<double>(0.0, counting.estimator_noise_sigma)(rng);
        result.estimator_noise.push_back({xi, 0.0});
        est.n_out = std::clamp(est.n_out + xi, 0.0, 1.0);
      }

      result.series.devices[0].n_in.push_back(est.n_in);
      result.series.devices[0].n_out.push_back(est.n_out);
      result.series.devices[0].r.push_back(mem.reflectance);
      result.records.push_back(rec);
    }
    return result;
  }

  // Coupled scenario.
  result.series.devices.resize(2);
  const DriveConfig drive2{cfg.period_bins, cfg.phase_offset};
  MemristorState mem1(cfg.memory_bins);
  MemristorState mem2(cfg.memory_bins);
  for (int k = 0; k < n; ++k) {
    const double eps0 = phase_noise(mzis.mzi0, rng);
    const double eps1 = phase_noise(mzis.mzi1, rng);
    const double eps2 = phase_noise(mzis.mzi2, rng);
    const double eps_m1 = phase_noise(mzis.mem1, rng);
    const double eps_m2 = phase_noise(mzis.mem2, rng);

    // MZI-0 splits the flux; its effective reflectance is the device-1 share.
    const double share1 =
        effective_reflectance(mzis.mzi0, phase_for_reflectance(0.5), eps0);
    const double x1 = effective_reflectance(
        mzis.mzi1, phase_for_reflectance(drive_value(k, drive1)), eps1);
    const double x2 = effective_reflectance(
        mzis.mzi2, phase_for_reflectance(drive_value(k, drive2)), eps2);
    const std::array<double, 2> arm = {share1, 1.0 - share1};
    const std::array<double, 2> x = {x1, x2};

    std::array<std::int64_t, 2> sum{};
    std::array<std::int64_t, 2> comp{};
    for (int attempt = 0;; ++attempt) {
      for (int dev = 0; dev < 2; ++dev) {
        const auto d = static_cast<std::size_t>(dev);
        sum[d] = poisson(arm[d] * lambda * x[d] + 2.0 * dark, rng);
        comp[d] = poisson(arm[d] * lambda * (1.0 - x[d]) + dark, rng);
      }
      if (sum[0] + comp[0] > 0 && sum[1] + comp[1] > 0) break;
      if (attempt == 3)
        throw estimation_error("simulate_experiment: bin " + std::to_string(k) +
                               " produced no counts after 3 re-draws");
    }

    const double n_in_hat1 =
        static_cast<double>(sum[0]) / static_cast<double>(sum[0] + comp[0]);
    const double n_in_hat2 =
        static_cast<double>(sum[1]) / static_cast<double>(sum[1] + comp[1]);

    // Crossed feedback consumes the other device's estimate, current bin included.
    mem1.buffer.push(n_in_hat2);
    mem2.buffer.push(n_in_hat1);
    mem1.reflectance = update_reflectance(mem1.buffer);
    mem2.reflectance = update_reflectance(mem2.buffer);
    const double r1_set = effective_reflectance(
        mzis.mem1, phase_for_reflectance(clamp_reflectance(mem1.reflectance)), eps_m1);
    const double r2_set = effective_reflectance(
        mzis.mem2, phase_for_reflectance(clamp_reflectance(mem2.reflectance)), eps_m2);
    const std::array<double, 2> r_set = {r1_set, r2_set};

    DetectionRecord rec;
    for (int dev = 0; dev < 2; ++dev) {
      const auto d = static_cast<std::size_t>(dev);
      const std::int64_t n_theta =
          binomial(sum[d], split_probability(r_set[d], x[d], arm[d]), rng);
      rec.counts[d][DetectionRecord::setting_theta] = n_theta;
      rec.counts[d][DetectionRecord::setting_theta_shifted] = sum[d] - n_theta;
      rec.counts[d][DetectionRecord::setting_complementary] = comp[d];
    }

    std::array<Estimates, 2> est = estimate_coupled(rec);
    if (counting.estimator_noise_sigma > 0.0) {
      std::array<double, 2> xi{};
      for (int dev = 0; dev < 2; ++dev) {
        xi[static_cast<std::size_t>(dev)] =
            std::normal_distribution<double>(0.0, counting.estimator_noise_sigma)(rng);
        auto& e = est[static_cast<std::size_t>(dev)];
        e.n_out = std::clamp(e.n_out + xi[static_cast<std::size_t>(dev)], 0.0, 1.0);
      }
      result.estimator_noise.push_back(xi);
    }

    const std::array<double, 2> r_fb = {mem1.reflectance, mem2.reflectance};
    for (int dev = 0; dev < 2; ++dev) {
      const auto d = static_cast<std::size_t>(dev);
      result.series.devices[d].n_in.push_back(est[d].n_in);
      result.series.devices[d].n_out.push_back(est[d].n_out);
      result.series.devices[d].r.push_back(r_fb[d]);
    }
    result.records.push_back(rec);
  }
  return result;
}

/// Recompute the series from logged counts: same estimators, same feedback, no
/// sampling. With the logged estimator-noise values this reproduces the original
/// series bit-exactly.
inline TimeSeries replay_records(const ScenarioConfig& cfg,
                                 const std::vector<DetectionRecord>& records,
                                 const std::vector<std::array<double, 2>>& estimator_noise = {}) {
  cfg.validate();
  if (!estimator_noise.empty() && estimator_noise.size() != records.size())
    throw data_error("replay_records: estimator noise log length does not match records");
  TimeSeries ts;
  ts.scenario = cfg.scenario;
  ts.period_bins = cfg.period_bins;
  ts.memory_bins = cfg.memory_bins;

  if (cfg.scenario == Scenario::single) {
    ts.devices.resize(1);
    MemristorState mem(cfg.memory_bins);
    for (std::size_t k = 0; k < records.size(); ++k) {
      Estimates est = estimate_single(records[k]);
      mem.buffer.push(est.n_in);
      mem.reflectance = update_reflectance(mem.buffer);
      if (!estimator_noise.empty())
        est.n_out = std::clamp(est.n_out + estimator_noise[k][0], 0.0, 1.0);
      ts.devices[0].n_in.push_back(est.n_in);
      ts.devices[0].n_out.push_back(est.n_out);
      ts.devices[0].r.push_back(mem.reflectance);
    }
    return ts;
  }

  ts.devices.resize(2);
  MemristorState mem1(cfg.memory_bins);
  MemristorState mem2(cfg.memory_bins);
  for (std::size_t k = 0; k < records.size(); ++k) {
    std::array<Estimates, 2> est = estimate_coupled(records[k]);
    mem1.buffer.push(est[1].n_in);
    mem2.buffer.push(est[0].n_in);
    mem1.reflectance = update_reflectance(mem1.buffer);
    mem2.reflectance = update_reflectance(mem2.buffer);
    if (!estimator_noise.empty())
      for (int dev = 0; dev < 2; ++dev) {
        auto& e = est[static_cast<std::size_t>(dev)];
        e.n_out = std::clamp(e.n_out + estimator_noise[k][static_cast<std::size_t>(dev)],
                             0.0, 1.0);
      }
    const std::array<double, 2> r_fb = {mem1.reflectance, mem2.reflectance};
    for (int dev = 0; dev < 2; ++dev) {
      const auto d = static_cast<std::size_t>(dev);
      ts.devices[d].n_in.push_back(est[d].n_in);
      ts.devices[d].n_out.push_back(est[d].n_out);
      ts.devices[d].r.push_back(r_fb[d]);
    }
  }
  return ts;
}

}  // namespace pqm
