// Coarse form-factor map of two crossed-feedback memristors, printed as text.

#include <cstdio>

#include "pqm/geometry.hpp"

int main() {
  const pqm::SweepGrid grid = pqm::SweepGrid::regular(13, 12);
  const pqm::SweepMap map = pqm::sweep_map(pqm::SweepMetric::form_factor, grid);

  const auto names = pqm::sweep_relation_names();
  for (std::size_t rel = 0; rel < names.size(); ++rel) {
    std::printf("\n%s (rows: phi, columns: memory/period)\n", names[rel]);
    for (std::size_t i = 0; i < grid.phi_values.size(); ++i) {
      std::printf("phi %.2f |", grid.phi_values[i]);
      for (std::size_t j = 0; j < grid.t_ratio_values.size(); ++j)
        std::printf(" %.2f", map.at(rel, i, j));
      std::printf("\n");
    }
  }
  return 0;
}
