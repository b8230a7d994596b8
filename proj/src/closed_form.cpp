#include "m2ch/closed_form.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace m2ch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// X / (1 + X) == 1 - e^q for q = -log1p(X).
double one_minus_eq(double x) { return std::isinf(x) ? 1.0 : x / (1.0 + x); }

AntisymPoint collision_point(double t) { return {t, kInf, 0.0, 0.0, 0.0, true}; }

}  // namespace

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Subcritical: return "subcritical";
    case Regime::Critical: return "critical";
    case Regime::Supercritical: return "supercritical";
  }
  return "unknown";
}

AntisymCase classify(double s, double critical_band) {
  if (!(s >= 0.0) || !std::isfinite(s))
    throw std::invalid_argument("classify: density amplitude s must be finite and non-negative");
  AntisymCase c;
  c.s = s;
  c.energy = 0.5;
  if (std::abs(s - 1.0) < critical_band) {
    c.regime = Regime::Critical;
    c.C = 0.0;
    c.p_inf = kNaN;
  } else if (s < 1.0) {
    c.regime = Regime::Subcritical;
    c.C = (s - 1.0) * (s + 1.0);
    c.p_inf = std::sqrt(-c.C);
  } else {
    c.regime = Regime::Supercritical;
    c.C = (s - 1.0) * (s + 1.0);
    c.p_inf = kNaN;
  }
  return c;
}

AntisymPoint eval_collision_centered(const AntisymCase& c, double t) {
  if (t == 0.0) return collision_point(t);
  AntisymPoint pt;
  pt.t = t;
  double x = 0.0;  // e^{-q} - 1
  switch (c.regime) {
    case Regime::Subcritical: {
      const double k = c.p_inf;
      const double h = 0.5 * k * t;
      const double sh = std::sinh(h);
      x = sh * sh / (k * k);
      pt.p = -k / std::tanh(h);
      // -k sinh(kt) / (4k^2 + 2(cosh(kt) - 1)), rewritten to avoid overflow for large |t|.
      const double ch = std::cosh(h);
      pt.u_peak = -0.5 * k * std::tanh(h) / (1.0 + (k * k - 1.0) / (ch * ch));
      break;
    }
    case Regime::Critical: {
      x = 0.25 * t * t;
      pt.p = -2.0 / t;
      pt.u_peak = -t / (t * t + 4.0);
      break;
    }
    case Regime::Supercritical: {
      const double r = std::sqrt(c.C);
      const double th = 0.5 * r * t;
      const double sn = std::sin(th);
      x = sn * sn / c.C;
      if (sn == 0.0) {
        pt.p = kInf;
        pt.p_infinite = true;
      } else {
        pt.p = -r * std::cos(th) / sn;
      }
      pt.u_peak = -0.25 * r * (std::sin(r * t) / c.C) / (1.0 + x);
      break;
    }
  }
  pt.q = -std::log1p(x);
  pt.rho_bar_peak = 0.5 * c.s * one_minus_eq(x);
  return pt;
}

double normalization_residual(double s, double p0, double q0) {
  return (p0 * p0 + s * s) * (-std::expm1(q0)) - 1.0;
}

AntisymPoint eval_general(const AntisymCase& c, double p0, double q0, double t, double tol) {
  if (!(q0 < 0.0))
    throw std::invalid_argument("eval_general: initial gap q0 must be negative (peaks apart)");
  const double res = normalization_residual(c.s, p0, q0);
  if (!(std::abs(res) <= tol)) {
    std::ostringstream msg;
    msg << "eval_general: energy normalisation violated, residual " << res;
    throw std::invalid_argument(msg.str());
  }
  AntisymPoint pt;
  pt.t = t;
  if (t == 0.0) {
    pt.p = p0;
    pt.q = q0;
    pt.u_peak = 0.5 * p0 * (-std::expm1(q0));
    pt.rho_bar_peak = 0.5 * c.s * (-std::expm1(q0));
    return pt;
  }

  const double K = std::expm1(-q0);  // e^{-q0} - 1 > 0
  double x = 0.0;                    // e^{-q(t)} - 1
  switch (c.regime) {
    case Regime::Subcritical: {
      const double k = c.p_inf;
      const double A = (p0 - k) / (p0 + k);
      // 1 - A e^{kt} = -expm1(log A + kt), accurate near the collision.
      const double one_minus = A > 0.0 ? -std::expm1(std::log(A) + k * t) : 1.0 - A * std::exp(k * t);
      const double one_plus = 2.0 - one_minus;
      const double em = std::exp(-k * t);
      x = em * one_minus * one_minus / ((1.0 - A) * (1.0 - A)) * K;
      if (one_minus == 0.0) {
        pt.p = kInf;
        pt.p_infinite = true;
      } else {
        pt.p = k * one_plus / one_minus;
      }
      pt.u_peak = 0.5 * k * em * one_minus * one_plus * K /
                  ((1.0 - A) * (1.0 - A) + em * one_minus * one_minus * K);
      break;
    }
    case Regime::Critical: {
      const double a = 1.0 - 0.5 * t * p0;  // (2 - t p0) / 2
      x = a * a * K;
      if (a == 0.0) {
        pt.p = kInf;
        pt.p_infinite = true;
      } else {
        pt.p = p0 / a;
      }
      pt.u_peak = 0.5 * p0 * a * K / (1.0 + x);
      break;
    }
    case Regime::Supercritical: {
      const double r = std::sqrt(c.C);
      const double D = std::atan(p0 / r);
      const double cd = std::cos(D);
      const double B = K / (cd * cd);
      const double phi = 0.5 * r * t + D;
      const double cp = std::cos(phi);
      x = B * cp * cp;
      if (cp == 0.0) {
        pt.p = kInf;
        pt.p_infinite = true;
      } else {
        pt.p = r * std::tan(phi);
      }
      pt.u_peak = 0.25 * r * B * std::sin(2.0 * phi) / (1.0 + x);
      break;
    }
  }
  pt.q = -std::log1p(x);
  pt.rho_bar_peak = 0.5 * c.s * one_minus_eq(x);
  if (x == 0.0) {
    pt.p = kInf;
    pt.p_infinite = true;
  }
  return pt;
}

double collision_time(const AntisymCase& c, double p0, double q0) {
  switch (c.regime) {
    case Regime::Subcritical: {
      const double k = c.p_inf;
      const double A = (p0 - k) / (p0 + k);
      if (!(A > 0.0)) return kInf;
      return std::log(1.0 / A) / k;
    }
    case Regime::Critical:
      return p0 == 0.0 ? kInf : 2.0 / p0;
    case Regime::Supercritical: {
      const double r = std::sqrt(c.C);
      const double D = std::atan(p0 / r);
      return (0.5 * std::numbers::pi - D) * 2.0 / r;
    }
  }
  (void)q0;
  return kInf;
}

double period(const AntisymCase& c) {
  if (c.regime != Regime::Supercritical)
    throw std::domain_error("period: only the supercritical regime (s > 1) is periodic");
  return 2.0 * std::numbers::pi / std::sqrt(c.C);
}

Asymptotics asymptotics(const AntisymCase& c) {
  Asymptotics a;
  switch (c.regime) {
    case Regime::Subcritical:
      a.limits = PeakLimits{-0.5 * c.p_inf, 0.5 * c.p_inf, 0.5 * c.s};
      a.limit_circle = true;
      break;
    case Regime::Critical:
      a.limits = PeakLimits{0.0, 0.0, 0.5 * c.s};
      a.limit_circle = true;
      break;
    case Regime::Supercritical:
      a.periodic = true;
      break;
  }
  return a;
}

double circle_residual(const AntisymPoint& point, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("circle_residual: s must be positive");
  // u^2 + (rhob - a)^2 - a^2 expanded to avoid cancellation against a^2.
  return point.u_peak * point.u_peak + point.rho_bar_peak * (point.rho_bar_peak - 0.5 / s);
}

double energy_identity_residual(const AntisymPoint& point, double s) {
  if (point.p_infinite) return 0.0;
  return (point.p * point.p + s * s) * (-std::expm1(point.q)) - 1.0;
}

PeakonState to_peakon_state(const AntisymCase& c, const AntisymPoint& point) {
  if (!(point.q < 0.0) || point.p_infinite)
    throw std::invalid_argument("to_peakon_state: point is at a collision");
  Eigen::VectorXd q(2), p(2), s(2);
  q << 0.5 * point.q, -0.5 * point.q;
  p << 0.5 * point.p, -0.5 * point.p;
  s << 0.5 * c.s, -0.5 * c.s;
  return make_peakon_state<double>(q, p, s, point.t);
}

}  // namespace m2ch
