#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace pqm {

// Single photon distributed over the two path modes A and B.
struct DualRailState {
  std::complex<double> alpha;  // amplitude on the bypass mode A
  std::complex<double> beta;   // amplitude on mode B, entering the interferometer

  double norm_sq() const { return std::norm(alpha) + std::norm(beta); }
  bool normalized(double tol = 1e-12) const { return std::abs(norm_sq() - 1.0) <= tol; }
};

// Non-ideality parameters of one Mach-Zehnder interferometer.
struct MziModel {
  double visibility = 1.0;           // fringe contrast V in [0, 1]
  double static_phase_offset = 0.0;  // systematic phase error, radians
  double phase_noise_sigma = 0.0;    // scale of the per-setting stochastic phase error, radians

  void validate() const {
    if (!(visibility >= 0.0 && visibility <= 1.0))
      throw std::domain_error("MziModel: visibility must lie in [0, 1]");
    if (!std::isfinite(static_phase_offset))
      throw std::domain_error("MziModel: static phase offset must be finite");
    if (!(phase_noise_sigma >= 0.0) || !std::isfinite(phase_noise_sigma))
      throw std::domain_error("MziModel: phase noise sigma must be finite and >= 0");
  }
};

// Observables of the output state after tracing out the reflected mode C.
struct ChannelOutput {
  double p_a = 0.0;  // photon stayed on mode A
  double p_b = 0.0;  // photon transmitted through the interferometer on mode B
  double p_c = 0.0;  // photon reflected onto mode C
  std::complex<double> coherence;  // off-diagonal term alpha * conj(beta) * sqrt(1 - r)
};

/// Reflectance of an ideal interferometer at relative phase `phase`: sin^2(phase / 2).
inline double ideal_reflectance(double phase) {
  if (!std::isfinite(phase)) throw std::domain_error("ideal_reflectance: phase must be finite");
  const double s = std::sin(0.5 * phase);
  return s * s;
}

/// Phase in [0, pi] realizing reflectance `r` on an ideal interferometer.
inline double phase_for_reflectance(double r) {
  if (!(r >= 0.0 && r <= 1.0))
    throw std::domain_error("phase_for_reflectance: reflectance must lie in [0, 1]");
  return 2.0 * std::asin(std::sqrt(r));
}

// Feedback rounding can push a reflectance a few ulp outside [0, 1].
inline double clamp_reflectance(double r) { return std::clamp(r, 0.0, 1.0); }

/// Effective reflectance of a non-ideal fringe: 1/2 [1 - V cos(phase + offset + noise)].
/// The stochastic draw is supplied by the caller (0 for noise-free runs) so the
/// function stays pure and runs are replayable from a single seed.
inline double effective_reflectance(const MziModel& model, double phase_theo,
                                    double noise_draw = 0.0) {
  model.validate();
  if (!std::isfinite(phase_theo))
    throw std::domain_error("effective_reflectance: phase must be finite");
  const double phase_real = phase_theo + model.static_phase_offset + noise_draw;
  return 0.5 * (1.0 - model.visibility * std::cos(phase_real));
}

/// Channel probabilities after the memristor interferometer acts on mode B with
/// reflectance r: p_a = |alpha|^2, p_b = |beta|^2 (1-r), p_c = |beta|^2 r.
inline ChannelOutput apply_memristor_channel(const DualRailState& state, double r) {
  if (!state.normalized())
    throw std::invalid_argument("apply_memristor_channel: state is not normalized");
  if (!(r >= 0.0 && r <= 1.0))
    throw std::domain_error("apply_memristor_channel: reflectance must lie in [0, 1]");
  const double p_in_b = std::norm(state.beta);
  ChannelOutput out;
  out.p_a = std::norm(state.alpha);
  out.p_b = p_in_b * (1.0 - r);
  out.p_c = p_in_b * r;
  out.coherence = state.alpha * std::conj(state.beta) * std::sqrt(1.0 - r);
  return out;
}

}  // namespace pqm
