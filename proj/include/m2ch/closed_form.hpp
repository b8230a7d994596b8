#pragma once

// Exact antisymmetric peakon-antipeakon solutions (q2 = -q1, p2 = -p1, s2 = -s1),
// normalised to total energy 1/2. In the reduced variables q = q1 - q2 <= 0,
// p = p1 - p2 and s = s1 - s2 (constant) they solve
//   q' = p (1 - e^q),   p' = (p^2 + C) / 2,   C = s^2 - 1,
// with the energy identity (p^2 + s^2)(1 - e^q) = 1.

#include "m2ch/peakon.hpp"

#include <optional>

namespace m2ch {

enum class Regime { Subcritical, Critical, Supercritical };

const char* to_string(Regime r);

struct AntisymCase {
  double s = 0.0;
  double energy = 0.5;
  double C = -1.0;
  Regime regime = Regime::Subcritical;
  double p_inf = 1.0;  // sqrt(1 - s^2); NaN outside the subcritical regime
};

struct AntisymPoint {
  double t = 0.0;
  double p = 0.0;  // reduced momentum p1 - p2
  double q = 0.0;  // reduced gap q1 - q2, never positive
  double u_peak = 0.0;
  double rho_bar_peak = 0.0;
  bool p_infinite = false;  // evaluated exactly at a collision
};

/// |s - 1| < critical_band is classified as critical. Throws std::invalid_argument for s < 0.
AntisymCase classify(double s, double critical_band = 1e-13);

/// Solution with a collision at t = 0.
AntisymPoint eval_collision_centered(const AntisymCase& c, double t);

/// (p0^2 + s^2)(1 - e^{q0}) - 1.
double normalization_residual(double s, double p0, double q0);

/// Solution through (p0, q0) at t = 0. Throws std::invalid_argument unless q0 < 0 and
/// |normalization_residual| <= tol.
AntisymPoint eval_general(const AntisymCase& c, double p0, double q0, double t, double tol = 1e-12);

/// Collision time of the general-data branch: the unique one for s <= 1, the first one at
/// t >= 0 for the periodic regime.
double collision_time(const AntisymCase& c, double p0, double q0);

/// 2 pi / sqrt(C); throws std::domain_error outside the supercritical regime.
double period(const AntisymCase& c);

struct PeakLimits {
  double u_peak_plus = 0.0;   // t -> +inf
  double u_peak_minus = 0.0;  // t -> -inf
  double rho_bar_peak = 0.0;  // same at both ends
};

struct Asymptotics {
  std::optional<PeakLimits> limits;  // empty in the periodic regime
  bool limit_circle = false;         // limits satisfy u^2 + rhob^2 = 1/4
  bool periodic = false;
};

Asymptotics asymptotics(const AntisymCase& c);

/// u^2 + (rhob - 1/(4s))^2 - (1/(4s))^2; throws std::invalid_argument unless s > 0.
double circle_residual(const AntisymPoint& point, double s);

/// Residual of (p^2 + s^2)(1 - e^q) = 1 for a point (zero at collisions by convention).
double energy_identity_residual(const AntisymPoint& point, double s);

/// The two-peakon state of a reduced point: q = (q/2, -q/2), p = (p/2, -p/2), s = (s/2, -s/2).
PeakonState to_peakon_state(const AntisymCase& c, const AntisymPoint& point);

}  // namespace m2ch
