#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "pqm/dynamics.hpp"
#include "pqm/errors.hpp"
#include "pqm/point.hpp"

namespace pqm {

/// Closed polyline of (input, output) samples over exactly one drive period; the last
/// point connects back to the first.
struct HysteresisCurve {
  std::vector<Point> points;
};

/// Which device supplies each axis (0-based). Intra: same device; inter: crossed.
struct Relation {
  int input_device = 0;
  int output_device = 0;

  static Relation intra(int device) { return {device, device}; }
  static Relation inter(int input_device, int output_device) {
    return {input_device, output_device};
  }
};

/// The last complete drive period of (n_in, n_out) samples for the requested
/// relation, rotated so index j corresponds to bin j modulo the period. The rotation
/// makes cycles comparable across runs with different bin counts.
inline HysteresisCurve extract_steady_cycle(const TimeSeries& series, Relation rel) {
  const int p = series.period_bins;
  if (p < 2) throw data_error("extract_steady_cycle: series does not carry a drive period");
  const auto n_dev = static_cast<int>(series.devices.size());
  if (rel.input_device < 0 || rel.input_device >= n_dev || rel.output_device < 0 ||
      rel.output_device >= n_dev)
    throw data_error("extract_steady_cycle: relation names a device the series lacks");
  const auto n = static_cast<std::int64_t>(series.bins());
  if (n < series.memory_bins + p)
    throw data_error("extract_steady_cycle: series too short for a steady period");
  const std::int64_t start = n - p;
  HysteresisCurve curve;
  curve.points.resize(static_cast<std::size_t>(p));
  const auto& in = series.devices[rel.input_device].n_in;
  const auto& out = series.devices[rel.output_device].n_out;
  for (std::int64_t j = 0; j < p; ++j) {
    const std::int64_t b = start + (((j - start) % p) + p) % p;
    curve.points[static_cast<std::size_t>(j)] = {in[b], out[b]};
  }
  return curve;
}

namespace geom_detail {

// Sign of the cross product (b-a) x (c-a); |value| <= eps collapses to 0 so
// near-degenerate touches are treated as tangencies, not crossings.
inline int orientation(const Point& a, const Point& b, const Point& c,
                       double eps = 1e-12) {
  const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  if (std::abs(v) <= eps) return 0;
  return v > 0.0 ? 1 : -1;
}

struct Crossing {
  std::size_t seg_a = 0;
  std::size_t seg_b = 0;
  Point where;
  double t_a = 0.0;  // position along segment a in (0, 1)
  double t_b = 0.0;
};

// Proper (transversal) crossing of segments i and j of the closed polyline.
// Tangencies and collinear overlaps report no crossing.
inline std::optional<Crossing> proper_crossing(const std::vector<Point>& pts,
                                               std::size_t i, std::size_t j) {
  const std::size_t n = pts.size();
  const Point& a = pts[i];
  const Point& b = pts[(i + 1) % n];
  const Point& c = pts[j];
  const Point& d = pts[(j + 1) % n];
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  if (o1 * o2 >= 0) return std::nullopt;
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o3 * o4 >= 0) return std::nullopt;
  const double rx = b.x - a.x, ry = b.y - a.y;
  const double sx = d.x - c.x, sy = d.y - c.y;
  const double den = rx * sy - ry * sx;  // nonzero: orientations were strict
  const double qx = c.x - a.x, qy = c.y - a.y;
  const double t = (qx * sy - qy * sx) / den;
  const double u = (qx * ry - qy * rx) / den;
  return Crossing{i, j, {a.x + t * rx, a.y + t * ry}, t, u};
}

// All proper crossings among non-adjacent segment pairs, closing segment included.
inline std::vector<Crossing> find_crossings(const std::vector<Point>& pts) {
  std::vector<Crossing> out;
  const std::size_t n = pts.size();
  if (n < 4) return out;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // cyclically adjacent
      if (auto c = proper_crossing(pts, i, j)) out.push_back(*c);
    }
  }
  return out;
}

template <typename PointRange>
double signed_area(const PointRange& pts) {
  const std::size_t n = pts.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pts[i];
    const auto& q = pts[(i + 1) % n];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * acc;
}

}  // namespace geom_detail

/// Perimeter of the closed polyline, closing segment included.
inline double curve_perimeter(const HysteresisCurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    acc += distance(pts[i], pts[(i + 1) % pts.size()]);
  return acc;
}

/// Enclosed area. A simple loop gets the absolute shoelace value. A self-intersecting
/// loop is cut at every proper crossing and decomposed into simple loops along the
/// traversal; the absolute loop areas are summed, so a figure-eight with two unit
/// lobes reports 2 rather than the cancelled signed value.
inline double curve_area(const HysteresisCurve& curve) {
  const auto& pts = curve.points;
  if (pts.size() < 3) return 0.0;
  const auto crossings = geom_detail::find_crossings(pts);
  if (crossings.empty()) return std::abs(geom_detail::signed_area(pts));

  struct Node {
    Point p;
    int crossing = -1;
  };
  // Augmented traversal: each vertex followed by the crossings on its segment in
  // parametric order.
  std::vector<std::vector<std::pair<double, int>>> on_segment(pts.size());
  for (std::size_t cid = 0; cid < crossings.size(); ++cid) {
    on_segment[crossings[cid].seg_a].emplace_back(crossings[cid].t_a, static_cast<int>(cid));
    on_segment[crossings[cid].seg_b].emplace_back(crossings[cid].t_b, static_cast<int>(cid));
  }
  std::vector<Node> path;
  path.reserve(pts.size() + 2 * crossings.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    path.push_back({pts[i], -1});
    auto& here = on_segment[i];
    std::sort(here.begin(), here.end());
    for (const auto& [t, cid] : here) path.push_back({crossings[cid].where, cid});
  }

  // Walk the path keeping a stack; the second visit of a crossing closes the simple
  // loop opened at its first visit.
  double total = 0.0;
  std::vector<Node> stack;
  std::vector<std::ptrdiff_t> first_seen(crossings.size(), -1);
  auto loop_area = [](const std::vector<Node>& nodes, std::size_t from) {
    struct View {
      const std::vector<Node>& n;
      std::size_t off;
      std::size_t size() const { return n.size() - off; }
      const Point& operator[](std::size_t i) const { return n[off + i].p; }
    };
    return geom_detail::signed_area(View{nodes, from});
  };
  for (const auto& node : path) {
    if (node.crossing >= 0 && first_seen[node.crossing] >= 0) {
      const auto from = static_cast<std::size_t>(first_seen[node.crossing]);
      total += std::abs(loop_area(stack, from));
      for (std::size_t k = from + 1; k < stack.size(); ++k)
        if (stack[k].crossing >= 0) first_seen[stack[k].crossing] = -1;
      stack.resize(from + 1);
    } else {
      if (node.crossing >= 0) first_seen[node.crossing] = static_cast<std::ptrdiff_t>(stack.size());
      stack.push_back(node);
    }
  }
  total += std::abs(loop_area(stack, 0));
  return total;
}

/// 4 pi A / P^2: 1 for a circle, 0 for a collapsed loop.
inline double form_factor(const HysteresisCurve& curve) {
  const double p = curve_perimeter(curve);
  if (!(p > 0.0)) throw degenerate_curve_error("form_factor: curve has zero perimeter");
  return 4.0 * std::numbers::pi * curve_area(curve) / (p * p);
}

struct SelfIntersection {
  bool found = false;
  std::vector<Point> points;
};

/// Pairwise proper-crossing census over all non-adjacent segments. Tangencies (touch
/// without crossing) do not count, so a pinched loop is not self-intersecting.
inline SelfIntersection detect_self_intersection(const HysteresisCurve& curve) {
  SelfIntersection result;
  for (const auto& c : geom_detail::find_crossings(curve.points)) {
    result.found = true;
    result.points.push_back(c.where);
  }
  return result;
}

/// True when both traversal branches (split at the x-extrema, split vertices shared)
/// pass within `tolerance` of the origin.
inline bool detect_pinch(const HysteresisCurve& curve, double tolerance = 1e-3) {
  const auto& pts = curve.points;
  const std::size_t n = pts.size();
  if (n < 3) return false;
  std::size_t imin = 0, imax = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (pts[i].x < pts[imin].x) imin = i;
    if (pts[i].x > pts[imax].x) imax = i;
  }
  if (imin == imax) return false;
  const auto branch_reaches_origin = [&](std::size_t from, std::size_t to) {
    for (std::size_t k = from;; k = (k + 1) % n) {
      if (std::hypot(pts[k].x, pts[k].y) <= tolerance) return true;
      if (k == to) return false;
    }
  };
  return branch_reaches_origin(imin, imax) && branch_reaches_origin(imax, imin);
}

struct CurveDiagnostics {
  double area = 0.0;
  double perimeter = 0.0;
  double form_factor = 0.0;
  bool self_intersecting = false;
  std::vector<Point> intersection_points;
  bool pinched_at_origin = false;
};

inline CurveDiagnostics analyze_curve(const HysteresisCurve& curve,
                                      double pinch_tolerance = 1e-3) {
  CurveDiagnostics d;
  d.area = curve_area(curve);
  d.perimeter = curve_perimeter(curve);
  if (!(d.perimeter > 0.0))
    throw degenerate_curve_error("analyze_curve: curve has zero perimeter");
  d.form_factor = 4.0 * std::numbers::pi * d.area / (d.perimeter * d.perimeter);
  auto si = detect_self_intersection(curve);
  d.self_intersecting = si.found;
  d.intersection_points = std::move(si.points);
  d.pinched_at_origin = detect_pinch(curve, pinch_tolerance);
  return d;
}

// ---------------------------------------------------------------------------
// Parameter sweeps over (relative drive phase, memory-to-period ratio)
// ---------------------------------------------------------------------------

enum class SweepMetric { form_factor, self_intersection };

inline const char* to_string(SweepMetric m) {
  return m == SweepMetric::form_factor ? "form-factor" : "self-intersection";
}

struct SweepGrid {
  std::vector<double> phi_values;      // relative drive phase of device 2, radians
  std::vector<double> t_ratio_values;  // memory length over drive period
  int period_bins = 100;

  /// Regular grid, by default 60 x 60 over phi in [0, pi] and t in [0.01, 1].
  static SweepGrid regular(std::size_t n_phi = 60, std::size_t n_t = 60,
                           double phi_lo = 0.0, double phi_hi = std::numbers::pi,
                           double t_lo = 0.01, double t_hi = 1.0, int period_bins = 100) {
    if (n_phi == 0 || n_t == 0) throw config_error("SweepGrid: grid must be non-empty");
    SweepGrid g;
    g.period_bins = period_bins;
    g.phi_values.resize(n_phi);
    g.t_ratio_values.resize(n_t);
    for (std::size_t i = 0; i < n_phi; ++i)
      g.phi_values[i] =
          n_phi == 1 ? phi_lo : phi_lo + (phi_hi - phi_lo) * static_cast<double>(i) /
                                    static_cast<double>(n_phi - 1);
    for (std::size_t j = 0; j < n_t; ++j)
      g.t_ratio_values[j] =
          n_t == 1 ? t_lo : t_lo + (t_hi - t_lo) * static_cast<double>(j) /
                                static_cast<double>(n_t - 1);
    return g;
  }
};

/// Relation order used in sweep outputs: intra (1,1), intra (2,2), inter (2->1)
/// meaning (input of device 2, output of device 1), inter (1->2).
inline std::array<Relation, 4> sweep_relations() {
  return {Relation::intra(0), Relation::intra(1), Relation::inter(1, 0),
          Relation::inter(0, 1)};
}

inline std::array<const char*, 4> sweep_relation_names() {
  return {"intra_11", "intra_22", "inter_21", "inter_12"};
}

struct SweepMap {
  SweepGrid grid;
  SweepMetric metric = SweepMetric::form_factor;
  // values[rel][i * n_t + j] for grid cell (phi_values[i], t_ratio_values[j]).
  // Degenerate cells carry NaN instead of aborting the sweep.
  std::array<std::vector<double>, 4> values;

  double at(std::size_t relation, std::size_t phi_idx, std::size_t t_idx) const {
    return values[relation][phi_idx * grid.t_ratio_values.size() + t_idx];
  }
};

/// Metric value of all four relations on every grid cell, from noise-free coupled
/// dynamics. Cells are independent and evaluated in parallel; results land in fixed
/// slots so the assembly is order-independent.
inline SweepMap sweep_map(SweepMetric metric, const SweepGrid& grid,
                          unsigned threads = 0) {
  if (grid.phi_values.empty() || grid.t_ratio_values.empty())
    throw config_error("sweep_map: grid must be non-empty");
  SweepMap map;
  map.grid = grid;
  map.metric = metric;
  const std::size_t n_phi = grid.phi_values.size();
  const std::size_t n_t = grid.t_ratio_values.size();
  const std::size_t n_cells = n_phi * n_t;
  for (auto& v : map.values) v.assign(n_cells, 0.0);

  const auto relations = sweep_relations();
  auto evaluate_cell = [&](std::size_t cell) {
    const std::size_t i = cell / n_t;
    const std::size_t j = cell % n_t;
    ScenarioConfig cfg;
    cfg.scenario = Scenario::coupled;
    cfg.period_bins = grid.period_bins;
    cfg.memory_bins = std::max(
        1, static_cast<int>(std::lround(grid.t_ratio_values[j] * grid.period_bins)));
    cfg.phase_offset = grid.phi_values[i];
    const TimeSeries series = run_trajectory(cfg);
    for (std::size_t r = 0; r < relations.size(); ++r) {
      const HysteresisCurve curve = extract_steady_cycle(series, relations[r]);
      double value = 0.0;
      if (metric == SweepMetric::form_factor) {
        try {
          value = form_factor(curve);
        } catch (const degenerate_curve_error&) {
          value = std::numeric_limits<double>::quiet_NaN();
        }
      } else {
        value = detect_self_intersection(curve).found ? 1.0 : 0.0;
      }
      map.values[r][cell] = value;
    }
  };

  unsigned n_threads = threads != 0 ? threads : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(n_cells)));
  if (n_threads == 1) {
    for (std::size_t cell = 0; cell < n_cells; ++cell) evaluate_cell(cell);
    return map;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t cell = next.fetch_add(1); cell < n_cells;
           cell = next.fetch_add(1))
        evaluate_cell(cell);
    });
  }
  for (auto& th : pool) th.join();
  return map;
}

}  // namespace pqm
