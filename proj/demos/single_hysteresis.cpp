// Single memristor under a sinusoidal drive: prints the steady hysteresis cycle and
// its diagnostics for a few memory depths.

#include <cstdio>

#include "pqm/geometry.hpp"

int main() {
  for (int memory : {1, 30, 100}) {
    pqm::ScenarioConfig cfg;
    cfg.memory_bins = memory;
    const pqm::TimeSeries series = pqm::run_trajectory(cfg);
    const pqm::HysteresisCurve cycle =
        pqm::extract_steady_cycle(series, pqm::Relation::intra(0));
    const pqm::CurveDiagnostics d = pqm::analyze_curve(cycle);
    std::printf("memory %3d bins: form factor %.4f, pinched %s, area %.4f\n", memory,
                d.form_factor, d.pinched_at_origin ? "yes" : "no", d.area);
  }

  std::puts("\nsteady cycle at memory 30 (n_in, n_out):");
  pqm::ScenarioConfig cfg;
  cfg.memory_bins = 30;
  const auto cycle =
      pqm::extract_steady_cycle(pqm::run_trajectory(cfg), pqm::Relation::intra(0));
  for (std::size_t i = 0; i < cycle.points.size(); i += 5)
    std::printf("  %.4f  %.4f\n", cycle.points[i].x, cycle.points[i].y);
  return 0;
}
