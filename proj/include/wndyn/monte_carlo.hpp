#pragma once

// Independent stochastic oracle.  Two samplers:
//  - simulate_classical: the one-pair linear SDE driven by additive Gaussian
//    white noise with constant diffusion matrix D, integrated by EXACT
//    one-step updates  z' = J_dt (z + xi),  Cov xi = C_dt (state direction),
//    so there is no time-discretization bias for quadratic Hamiltonians;
//  - simulate_total_system: the (n+1)-oscillator system-plus-bath model with
//    the white-noise force on the system momentum, integrated exactly per
//    step in normal-mode coordinates (closed-form per-step noise covariance),
//    bath initial data drawn at the mode-wise effective temperatures.
//
// Both are deterministic for a fixed config: counter-based per-trajectory
// RNG streams and pairwise block reduction make the estimates independent of
// any execution schedule.

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wndyn/heat_bath.hpp"
#include "wndyn/noise_model.hpp"
#include "wndyn/phase_space.hpp"

namespace wndyn {

/// Initial law of the system pair (p, q): a Gaussian with the given mean and
/// covariance.  A zero covariance gives a deterministic point.
struct McInitialState {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
};

struct SimulationConfig {
  long n_traj = 0;                     ///< >= 2
  std::vector<double> times;           ///< strictly increasing, >= 0
  std::uint64_t seed = 0;
  QuadraticHamiltonian H = QuadraticHamiltonian::free_particle(1.0, 1.0);
  CovarianceSpec noise;                ///< defaults to zero noise
  std::optional<BathSpec> bath;        ///< total-system route only
  double beta = 1.0;                   ///< bath inverse temperature
  double hbar = 1.0;                   ///< enters only through beta_eff
  McInitialState initial;

  void validate() const;
};

/// Per-time estimates for one scalar observable: mean and central moments up
/// to order 4, each with a standard error.  mean/variance errors are the
/// asymptotic formulas; the order-3/4 errors come from the spread over the
/// 16 deterministic trajectory groups (index mod 16).
struct ObservableMoments {
  std::vector<double> mean, mean_se;
  std::vector<double> var, var_se;
  std::vector<double> m3, m3_se;
  std::vector<double> m4, m4_se;
};

struct MomentEstimate {
  std::vector<double> times;
  ObservableMoments p, q;
  /// Least-squares slope of the system energy over the time grid, averaged
  /// over trajectories (per-trajectory regression, so the error is correct).
  double slope_H = 0.0;
  double slope_H_se = 0.0;
  long n_traj = 0;
  std::uint64_t seed = 0;

  /// Consistency check of the reduction bookkeeping: largest relative
  /// difference between the overall mean and the group-weighted mean.
  double batch_mean_discrepancy = 0.0;
};

/// Classical white-noise SDE oracle (one canonical pair).
MomentEstimate simulate_classical(const SimulationConfig& config);

/// Finite-n total-system oracle.  Requires config.bath with n >= 1 and a
/// position-only (or constant) noise spec; the white-noise force strength is
/// q_curvature(config.noise).
MomentEstimate simulate_total_system(const SimulationConfig& config);

}  // namespace wndyn
