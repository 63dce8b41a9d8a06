#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <random>
#include <vector>

#include "pqm/dynamics.hpp"
#include "pqm/errors.hpp"
#include "pqm/geometry.hpp"

namespace pqm {

struct ParameterBounds {
  double visibility_lo = 0.7;
  double visibility_hi = 1.0;
  double phase_limit = 0.25;  // |static phase offset| bound, radians

  void validate() const {
    if (!(visibility_lo >= 0.0 && visibility_hi <= 1.0 && visibility_lo <= visibility_hi))
      throw config_error("ParameterBounds: need 0 <= lo <= hi <= 1 for visibilities");
    if (!(phase_limit >= 0.0) || !std::isfinite(phase_limit))
      throw config_error("ParameterBounds: phase limit must be finite and >= 0");
  }
};

/// Free parameters of a calibration fit: one (visibility, static phase offset) pair
/// per fitted interferometer. Role order: single scenario {MZI-0, MZI-M1}; coupled
/// {MZI-1, MZI-2, MZI-M1, MZI-M2}.
struct FitParameters {
  std::vector<double> visibilities;
  std::vector<double> phase_offsets;

  static FitParameters ideal(std::size_t n_mzi) {
    FitParameters p;
    p.visibilities.assign(n_mzi, 1.0);
    p.phase_offsets.assign(n_mzi, 0.0);
    return p;
  }
};

inline std::size_t fitted_mzi_count(Scenario s) {
  return s == Scenario::single ? 2 : 4;
}

inline MziTable fit_parameters_to_table(Scenario scenario, const FitParameters& params) {
  if (params.visibilities.size() != fitted_mzi_count(scenario) ||
      params.phase_offsets.size() != fitted_mzi_count(scenario))
    throw config_error("FitParameters: wrong parameter count for the scenario");
  MziTable table;
  const auto model = [&](std::size_t i) {
    return MziModel{params.visibilities[i], params.phase_offsets[i], 0.0};
  };
  if (scenario == Scenario::single) {
    table.mzi0 = model(0);
    table.mem1 = model(1);
  } else {
    table.mzi1 = model(0);
    table.mzi2 = model(1);
    table.mem1 = model(2);
    table.mem2 = model(3);
  }
  return table;
}

/// Relations compared per scenario: the intra cycle for a single device, all four
/// relations for coupled devices.
inline std::vector<Relation> fit_relations(Scenario s) {
  if (s == Scenario::single) return {Relation::intra(0)};
  const auto rels = sweep_relations();
  return {rels.begin(), rels.end()};
}

inline std::vector<HysteresisCurve> reference_cycles(const ScenarioConfig& cfg,
                                                     const MziTable& mzis) {
  const TimeSeries series = simulate_reference(cfg, mzis);
  std::vector<HysteresisCurve> out;
  for (const Relation& rel : fit_relations(cfg.scenario))
    out.push_back(extract_steady_cycle(series, rel));
  return out;
}

/// One fitting problem: a scenario configuration plus the target steady cycles it
/// should reproduce, in fit_relations order.
struct FitTarget {
  ScenarioConfig config;
  std::vector<HysteresisCurve> curves;
};

/// Sum over curves and bins of squared point distances between the noise-free
/// simulation under `params` and the targets.
inline double curve_loss(const FitParameters& params, const std::vector<FitTarget>& targets) {
  if (targets.empty()) throw config_error("curve_loss: no targets");
  double loss = 0.0;
  for (const FitTarget& target : targets) {
    const auto cycles =
        reference_cycles(target.config, fit_parameters_to_table(target.config.scenario, params));
    if (target.curves.size() != cycles.size())
      throw data_error("curve_loss: target curve count does not match the scenario");
    for (std::size_t c = 0; c < cycles.size(); ++c) {
      if (target.curves[c].points.size() != cycles[c].points.size())
        throw data_error("curve_loss: target and simulation sampled on different grids");
      for (std::size_t i = 0; i < cycles[c].points.size(); ++i) {
        const double dx = cycles[c].points[i].x - target.curves[c].points[i].x;
        const double dy = cycles[c].points[i].y - target.curves[c].points[i].y;
        loss += dx * dx + dy * dy;
      }
    }
  }
  return loss;
}

struct FitOptions {
  ParameterBounds bounds;
  int budget = 400;  // simplex iterations per restart
  int restarts = 3;
  std::uint64_t seed = 1;
};

struct FitReport {
  FitParameters best;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations = 0;  // iterations actually spent, summed over restarts
  bool converged = false;
  std::vector<double> curve_residuals;  // per target curve at the best parameters
};

namespace fit_detail {

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Bounded Nelder-Mead: every candidate is projected onto the box before evaluation,
// so reported parameters satisfy the bounds exactly.
template <typename F>
SimplexResult nelder_mead(F&& f, std::vector<double> x0, const std::vector<double>& lo,
                          const std::vector<double>& hi, int budget) {
  const std::size_t dim = x0.size();
  const auto project = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i < dim; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
  };
  project(x0);

  std::vector<std::vector<double>> simplex{x0};
  for (std::size_t i = 0; i < dim; ++i) {
    auto p = x0;
    const double step = 0.1 * (hi[i] - lo[i]);
    p[i] = (p[i] + step <= hi[i]) ? p[i] + step : p[i] - step;
    project(p);
    simplex.push_back(std::move(p));
  }
  std::vector<double> values(simplex.size());
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = f(simplex[i]);

  SimplexResult result;
  const auto order = [&] {
    std::vector<std::size_t> idx(simplex.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return values[a] < values[b];
    });
    std::vector<std::vector<double>> s2;
    std::vector<double> v2;
    for (std::size_t i : idx) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex.swap(s2);
    values.swap(v2);
  };

  int it = 0;
  for (; it < budget; ++it) {
    order();
    if (values.back() - values.front() <= 1e-16 * (1.0 + std::abs(values.front()))) {
      result.converged = true;
      break;
    }
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t s = 0; s + 1 < simplex.size(); ++s)
      for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[s][i];
    for (double& c : centroid) c /= static_cast<double>(dim);

    const auto blend = [&](double coeff) {
      std::vector<double> p(dim);
      for (std::size_t i = 0; i < dim; ++i)
        p[i] = centroid[i] + coeff * (centroid[i] - simplex.back()[i]);
      project(p);
      return p;
    };

    auto reflected = blend(1.0);
    const double fr = f(reflected);
    if (fr < values.front()) {
      auto expanded = blend(2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex.back() = std::move(expanded);
        values.back() = fe;
      } else {
        simplex.back() = std::move(reflected);
        values.back() = fr;
      }
    } else if (fr < values[values.size() - 2]) {
      simplex.back() = std::move(reflected);
      values.back() = fr;
    } else {
      auto contracted = blend(-0.5);
      const double fc = f(contracted);
      if (fc < values.back()) {
        simplex.back() = std::move(contracted);
        values.back() = fc;
      } else {
        for (std::size_t s = 1; s < simplex.size(); ++s) {
          for (std::size_t i = 0; i < dim; ++i)
            simplex[s][i] = simplex[0][i] + 0.5 * (simplex[s][i] - simplex[0][i]);
          project(simplex[s]);
          values[s] = f(simplex[s]);
        }
      }
    }
  }
  order();
  result.x = simplex.front();
  result.value = values.front();
  result.iterations = it;
  return result;
}

}  // namespace fit_detail

/// Derivative-free bounded fit: Nelder-Mead with boundary projection, restarted from
/// the caller's initial guess plus seeded random interior points. Restarts run in
/// parallel; the winner is the lowest loss with ties broken by restart index, so the
/// result is deterministic for a given seed and budget.
inline FitReport fit_parameters(const std::vector<FitTarget>& targets,
                                const FitParameters& init, const FitOptions& options) {
  options.bounds.validate();
  if (targets.empty()) throw config_error("fit_parameters: no targets");
  if (options.budget < 0) throw config_error("fit_parameters: budget must be >= 0");
  if (options.restarts < 1) throw config_error("fit_parameters: need at least one restart");
  const Scenario scenario = targets[0].config.scenario;
  for (const auto& t : targets)
    if (t.config.scenario != scenario)
      throw config_error("fit_parameters: all targets must share one scenario");
  const std::size_t n_mzi = fitted_mzi_count(scenario);
  if (init.visibilities.size() != n_mzi || init.phase_offsets.size() != n_mzi)
    throw config_error("fit_parameters: init has the wrong parameter count");

  const std::size_t dim = 2 * n_mzi;
  std::vector<double> lo(dim), hi(dim);
  for (std::size_t i = 0; i < n_mzi; ++i) {
    lo[i] = options.bounds.visibility_lo;
    hi[i] = options.bounds.visibility_hi;
    lo[n_mzi + i] = -options.bounds.phase_limit;
    hi[n_mzi + i] = options.bounds.phase_limit;
  }

  const auto pack = [&](const FitParameters& p) {
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < n_mzi; ++i) {
      x[i] = p.visibilities[i];
      x[n_mzi + i] = p.phase_offsets[i];
    }
    return x;
  };
  const auto unpack = [&](const std::vector<double>& x) {
    FitParameters p;
    p.visibilities.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n_mzi));
    p.phase_offsets.assign(x.begin() + static_cast<std::ptrdiff_t>(n_mzi), x.end());
    return p;
  };
  const auto objective = [&](const std::vector<double>& x) {
    return curve_loss(unpack(x), targets);
  };

  FitReport report;
  report.initial_loss = objective(pack(init));

  if (options.budget == 0) {
    report.best = init;
    report.final_loss = report.initial_loss;
    report.converged = false;
  } else {
    std::vector<std::vector<double>> starts;
    starts.push_back(pack(init));
    for (int rstart = 1; rstart < options.restarts; ++rstart) {
      std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(rstart));
      std::vector<double> x(dim);
      for (std::size_t i = 0; i < dim; ++i)
        x[i] = std::uniform_real_distribution<double>(lo[i], hi[i])(rng);
      starts.push_back(std::move(x));
    }

    std::vector<std::future<fit_detail::SimplexResult>> futures;
    futures.reserve(starts.size());
    for (auto& start : starts)
      futures.push_back(std::async(std::launch::async, [&, start] {
        return fit_detail::nelder_mead(objective, start, lo, hi, options.budget);
      }));

    fit_detail::SimplexResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (auto& fut : futures) {
      auto r = fut.get();
      report.iterations += r.iterations;
      if (r.value < best.value) best = std::move(r);  // ties keep the earlier restart
    }
    report.best = unpack(best.x);
    report.final_loss = std::min(best.value, report.initial_loss);
    report.converged = best.converged;
    if (best.value > report.initial_loss) report.best = init;  // never worse than init
  }

  // Per-curve residuals at the reported parameters.
  for (const FitTarget& target : targets) {
    const auto cycles = reference_cycles(
        target.config, fit_parameters_to_table(target.config.scenario, report.best));
    for (std::size_t c = 0; c < cycles.size(); ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < cycles[c].points.size(); ++i) {
        const double dx = cycles[c].points[i].x - target.curves[c].points[i].x;
        const double dy = cycles[c].points[i].y - target.curves[c].points[i].y;
        acc += dx * dx + dy * dy;
      }
      report.curve_residuals.push_back(acc);
    }
  }
  return report;
}

}  // namespace pqm
