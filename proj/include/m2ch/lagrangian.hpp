#pragma once

// Semi-linear Lagrangian formulation on a truncated, uniform xi-grid.
//
// Value fields:       y, U, H, rbar, sbar, lambda
// Derivative fields:  y_xi, U_xi, H_xi, rbar_xi, lambda_xi  (evolved, never differenced)
//
//   y_t = U                     y_xi,t    = U_xi
//   U_t = -Q                    U_xi,t    = H_xi/2 + (U^2/2 - sbar^2 - P) y_xi
//   H_t = U^3 - 2PU - 2 rbar (S + V)
//                               H_xi,t    = (3U^2 - 2P + 2 rbar^2) U_xi
//                                           - 2 (Q U + rbar (R + W)) y_xi - 2 (S + V) rbar_xi
//   rbar_t = -(R + W)           rbar_xi,t = sbar U_xi - (S + V) y_xi
//   sbar_t = -(S + V)
//   lambda_t = rbar             lambda_xi,t = rbar_xi
//
// with P, Q from the density (H_xi + (U^2 - 2 sbar^2) y_xi)/4 and R, V (resp. S, W)
// from U_xi rbar / 2 (resp. U_xi sbar / 2), see compute_integrals().

#include "m2ch/peakon.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

namespace m2ch {

/// Kernel tails beyond this distance from the outermost peak are below e^{-20}.
inline constexpr double kMinMargin = 20.0;

struct GridSpec {
  double xi_min = -25.0;
  double xi_max = 25.0;
  Eigen::Index n = 1024;

  double dxi() const { return (xi_max - xi_min) / static_cast<double>(n - 1); }
};

/// Uniform grid of `n` nodes covering the peaks with at least `margin` on each side,
/// spaced so that the first and last peak sit at cell midpoints. Interior peaks are
/// aligned only when their offsets are commensurate with the spacing.
GridSpec aligned_grid(const PeakonState& state, Eigen::Index n, double margin = kMinMargin);

struct LagrangianFields {
  Eigen::ArrayXd y, U, H, rbar, sbar, lambda;
  Eigen::ArrayXd y_xi, U_xi, H_xi, rbar_xi, lambda_xi;

  using Member = Eigen::ArrayXd LagrangianFields::*;
  static constexpr std::array<Member, 11> kMembers{
      &LagrangianFields::y,    &LagrangianFields::U,       &LagrangianFields::H,
      &LagrangianFields::rbar, &LagrangianFields::sbar,    &LagrangianFields::lambda,
      &LagrangianFields::y_xi, &LagrangianFields::U_xi,    &LagrangianFields::H_xi,
      &LagrangianFields::rbar_xi, &LagrangianFields::lambda_xi};
};

struct LagrangianGrid : LagrangianFields {
  double t = 0.0;
  double xi_min = 0.0;
  double dxi = 1.0;

  Eigen::Index size() const { return y.size(); }
  double xi(Eigen::Index i) const { return xi_min + dxi * static_cast<double>(i); }
  Eigen::ArrayXd xi() const;
  /// Total energy 2E = H(xi_max) - H(xi_min).
  double energy_integral() const { return size() ? H[size() - 1] - H[0] : 0.0; }
};

struct IntegralBundle {
  Eigen::ArrayXd P, Q, R, S, V, W;
};

struct EulerianField {
  Eigen::ArrayXd x, u, rho_bar, rho_bar_x, energy_density;
};

/// Eulerian initial profile u, u_x, rhob, rhob_x as functions of x.
struct InitialProfile {
  std::function<double(double)> u, u_x, rho_bar, rho_bar_x;
};

/// Identity flow y = xi, U = u0, rbar = rhob0, sbar = rhob0_x, H_xi from the constraint
/// with y_xi = 1, H by cumulative trapezoid from H(xi_min) = 0, lambda = 0.
LagrangianGrid init_from_profile(const InitialProfile& profile, const GridSpec& spec, double t0 = 0.0);

/// As init_from_profile with the peakon sums (sign(0) = 0 at nodes on a peak).
/// Throws std::invalid_argument if the grid leaves less than kMinMargin beyond the peaks.
LagrangianGrid init_from_peakons(const PeakonState& state, const GridSpec& spec);

IntegralBundle compute_integrals(const LagrangianGrid& grid);

/// Time derivative of every field.
LagrangianFields rhs(const LagrangianGrid& grid);

class SolverAbort : public std::runtime_error {
 public:
  SolverAbort(const std::string& what, LagrangianGrid last_valid)
      : std::runtime_error(what), last_valid_(std::move(last_valid)) {}
  const LagrangianGrid& last_valid() const { return last_valid_; }

 private:
  LagrangianGrid last_valid_;
};

/// One classical RK4 step. Throws SolverAbort (carrying the input grid) on non-finite
/// values or when max|U_xi| grows more than tenfold within the step.
LagrangianGrid step(const LagrangianGrid& grid, double dt);

/// Largest step with dt * max|U_xi / y_xi| <= courant over nodes with y_xi >= mask_eps,
/// capped at courant. Advisory only; step() does not enforce it.
double suggested_dt(const LagrangianGrid& grid, double courant = 0.5, double mask_eps = 1e-6);

/// max |y_xi H_xi - (U^2 + rbar^2 + sbar^2) y_xi^2 - U_xi^2| / max(1, max H_xi).
double constraint_residual(const LagrangianGrid& grid);

struct MaskedField {
  Eigen::ArrayXd value;
  Eigen::Array<bool, Eigen::Dynamic, 1> valid;
};

struct RField {
  Eigen::ArrayXd r;            // -sbar_xi + rbar y_xi, sbar_xi by central differences
  Eigen::ArrayXd consistency;  // rbar_xi - sbar y_xi
};

RField compute_r(const LagrangianGrid& grid);

/// I = U y_xi^2 - U_xi,xi + (y_xi,xi / y_xi) U_xi + lambda_xi r, second derivatives by
/// central differences of the evolved derivative fields. Nodes with y_xi < mask_eps and
/// the two end nodes are invalid.
MaskedField pointwise_invariant(const LagrangianGrid& grid, double mask_eps = 1e-6);

/// Read-back through x = y(xi). Plateaus of y resolve to the leftmost node; x outside
/// [y_0, y_{N-1}] reads as zero.
EulerianField to_eulerian(const LagrangianGrid& grid, const Eigen::ArrayXd& x_grid);

struct LabelSample {
  double y = 0.0, U = 0.0, rbar = 0.0, sbar = 0.0, H = 0.0;
};

/// Fields at a label xi between nodes. y, U, rbar, H use one-sided Taylor extrapolation
/// with the evolved derivatives from both neighbours, which stays second order when a
/// kink sits inside the cell; sbar is interpolated linearly.
LabelSample sample_label(const LagrangianGrid& grid, double xi);

}  // namespace m2ch
