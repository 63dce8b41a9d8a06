#pragma once

#include <array>
#include <cmath>
#include <string>

#include "pqm/errors.hpp"
#include "pqm/point.hpp"

namespace pqm {

struct collinear_references_error : data_error {
  using data_error::data_error;
};

struct inconsistent_radii_error : data_error {
  using data_error::data_error;
};

/// Three reference points plus the point of interest, in stage coordinates
/// (micrometers). References must be pairwise distinct and non-collinear; otherwise
/// the recovery in a new frame is not unique.
struct ReferenceFrame {
  std::array<Point, 3> refs;
  Point poi;

  void validate() const { require_usable_references(refs); }

  static void require_usable_references(const std::array<Point, 3>& refs) {
    double scale = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        const double d = distance(refs[static_cast<std::size_t>(i)],
                                  refs[static_cast<std::size_t>(j)]);
        if (d == 0.0)
          throw collinear_references_error(
              "reference points " + std::to_string(i + 1) + " and " +
              std::to_string(j + 1) + " coincide");
        scale = std::max(scale, d);
      }
    const double cross = (refs[1].x - refs[0].x) * (refs[2].y - refs[0].y) -
                         (refs[1].y - refs[0].y) * (refs[2].x - refs[0].x);
    if (std::abs(cross) <= 1e-12 * scale * scale)
      throw collinear_references_error("reference points are collinear");
  }
};

/// Distances from each reference point to the point of interest.
inline std::array<double, 3> compute_radii(const ReferenceFrame& frame) {
  frame.validate();
  return {distance(frame.refs[0], frame.poi), distance(frame.refs[1], frame.poi),
          distance(frame.refs[2], frame.poi)};
}

/// Recover the point of interest in a new frame from the recorded radii.
///
/// Subtracting the circle equations pairwise (circle 1 - circle 2, circle 1 - circle
/// 3) leaves a 2x2 linear system in the point coordinates; the solution is then
/// checked against all three circles. A residual above `tolerance` means the frame
/// change did not preserve distances, which is reported rather than absorbed. Note
/// that distances cannot distinguish a mirrored frame: reflected references yield the
/// reflected point.
inline Point relocate(const std::array<Point, 3>& new_refs,
                      const std::array<double, 3>& radii, double tolerance) {
  ReferenceFrame::require_usable_references(new_refs);
  for (double r : radii)
    if (!(r >= 0.0) || !std::isfinite(r))
      throw data_error("relocate: radii must be finite and >= 0");
  if (!(tolerance >= 0.0))
    throw data_error("relocate: tolerance must be >= 0");

  const auto& c1 = new_refs[0];
  const auto& c2 = new_refs[1];
  const auto& c3 = new_refs[2];
  // 2 (c_k - c_1) . p = (r_1^2 - r_k^2) + (|c_k|^2 - |c_1|^2), k = 2, 3
  const double a11 = 2.0 * (c2.x - c1.x);
  const double a12 = 2.0 * (c2.y - c1.y);
  const double a21 = 2.0 * (c3.x - c1.x);
  const double a22 = 2.0 * (c3.y - c1.y);
  const double b1 = radii[0] * radii[0] - radii[1] * radii[1] +
                    (c2.x * c2.x + c2.y * c2.y) - (c1.x * c1.x + c1.y * c1.y);
  const double b2 = radii[0] * radii[0] - radii[2] * radii[2] +
                    (c3.x * c3.x + c3.y * c3.y) - (c1.x * c1.x + c1.y * c1.y);
  const double det = a11 * a22 - a12 * a21;
  // Non-collinearity was established above, so det is bounded away from zero.
  const Point p{(b1 * a22 - b2 * a12) / det, (a11 * b2 - a21 * b1) / det};

  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    worst = std::max(worst, std::abs(distance(new_refs[i], p) - radii[i]));
  if (worst > tolerance)
    throw inconsistent_radii_error(
        "relocate: radii are inconsistent with the new references (max residual " +
        std::to_string(worst) + " exceeds tolerance " + std::to_string(tolerance) + ")");
  return p;
}

}  // namespace pqm
