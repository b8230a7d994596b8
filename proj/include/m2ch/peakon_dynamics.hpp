#pragma once

// Multipeakon ODE system
//   q_i' = u(q_i)
//   p_i' = sum_{j != i} (p_i p_j + s_i s_j) sign(q_i - q_j) exp(-|q_i - q_j|)
//   s_i' = 0
// integrated with Dormand-Prince 5(4) until the first collision of neighbouring peaks.

#include "m2ch/peakon.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace m2ch {

struct PeakonDeriv {
  Eigen::VectorXd dq;
  Eigen::VectorXd dp;
  Eigen::VectorXd ds;  // identically zero
};

/// Thrown by rhs() when positions are not strictly increasing, i.e. a collision was stepped over.
class OrderingViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

PeakonDeriv rhs(const PeakonState& state);

struct CollisionEvent {
  Eigen::Index left = 0;  // the colliding pair is (left, left + 1)
  double time = 0.0;      // estimated collision time
  double gap = 0.0;       // gap of the pair at the last accepted state
  bool step_underflow = false;
};

/// Looks at two consecutive accepted states. Reports an event when a neighbour gap
/// changes sign or drops below `gap_threshold`; the time is located on a cubic
/// Hermite interpolant (sign change) or extrapolated from the quadratic touch-down
/// gap ~ a (t - t*)^2 (threshold crossing).
std::optional<CollisionEvent> detect_collision(const PeakonState& before, const PeakonState& after,
                                               double gap_threshold = 1e-9);

struct IntegrateOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.1;
  double sample_dt = 0.1;
  double initial_step = 1e-3;
  double gap_threshold = 1e-9;
  std::size_t max_steps = 2'000'000;
  /// Additional output times (dense output), merged with the sample_dt grid.
  std::vector<double> extra_times;
};

struct TrajectoryRecord {
  std::vector<PeakonState> states;  // time-monotone in the integration direction
  std::vector<double> energy;
  std::optional<CollisionEvent> collision;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  std::vector<double> times() const;
};

/// Integrates from state.t to t_end (either direction). Stops at the first collision.
TrajectoryRecord integrate(const PeakonState& state, double t_end, const IntegrateOptions& opts = {});

struct DriftSeries {
  std::vector<double> drift;  // |E(t) - E(t0)| / E(t0)
  double max = 0.0;
};

/// Throws std::domain_error when the initial energy is zero.
DriftSeries energy_drift(const TrajectoryRecord& traj);

}  // namespace m2ch
