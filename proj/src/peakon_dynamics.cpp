#include "m2ch/peakon_dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace m2ch {

PeakonDeriv rhs(const PeakonState& state) {
  const Eigen::Index n = state.size();
  if (!state.strictly_increasing())
    throw OrderingViolation("peakon positions are not strictly increasing");
  PeakonDeriv d{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    double dq = state.p[i];
    double dp = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double diff = state.q[i] - state.q[j];
      const double e = std::exp(-std::abs(diff));
      dq += state.p[j] * e;
      dp += (state.p[i] * state.p[j] + state.s[i] * state.s[j]) * sign0(diff) * e;
    }
    d.dq[i] = dq;
    d.dp[i] = dp;
  }
  return d;
}

namespace {

// Gap rate of pair (i, i+1); valid for any ordering since it only evaluates u.
double gap_rate(const PeakonState& s, Eigen::Index i) {
  return eval_u(s, s.q[i + 1]) - eval_u(s, s.q[i]);
}

double gap(const PeakonState& s, Eigen::Index i) { return s.q[i + 1] - s.q[i]; }

// Touch-down gap g ~ a (t - t*)^2 gives t* = t - 2 g / g'.
double extrapolate_touchdown(const PeakonState& s, Eigen::Index i, double direction) {
  const double g = gap(s, i);
  const double rate = gap_rate(s, i);
  if (rate * direction < 0.0) return s.t - 2.0 * g / rate;
  return s.t;
}

}  // namespace

std::optional<CollisionEvent> detect_collision(const PeakonState& before, const PeakonState& after,
                                               double gap_threshold) {
  const Eigen::Index n = after.size();
  if (n < 2) return std::nullopt;
  const double direction = after.t >= before.t ? 1.0 : -1.0;
  std::optional<CollisionEvent> best;
  auto consider = [&](CollisionEvent ev) {
    if (!best || (ev.time - best->time) * direction < 0.0) best = ev;
  };

  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double ga = gap(after, i);
    if (ga == 0.0) {
      consider({i, after.t, 0.0, false});
    } else if (ga < 0.0) {
      // Cubic Hermite on the gap over the step, then bisection for the first root.
      const double gb = gap(before, i);
      const double h = after.t - before.t;
      const double db = gap_rate(before, i) * h;
      const double da = gap_rate(after, i) * h;
      auto g_at = [&](double th) {
        const double th2 = th * th, th3 = th2 * th;
        return (2 * th3 - 3 * th2 + 1) * gb + (th3 - 2 * th2 + th) * db + (-2 * th3 + 3 * th2) * ga +
               (th3 - th2) * da;
      };
      double lo = 0.0, hi = 1.0;
      if (gb <= 0.0) {
        hi = 0.0;
      } else {
        for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
          const double mid = 0.5 * (lo + hi);
          (g_at(mid) > 0.0 ? lo : hi) = mid;
        }
      }
      consider({i, before.t + hi * h, ga, false});
    } else if (ga < gap_threshold) {
      consider({i, extrapolate_touchdown(after, i, direction), ga, false});
    }
  }
  return best;
}

std::vector<double> TrajectoryRecord::times() const {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.t);
  return out;
}

namespace {

// Dormand-Prince 5(4) tableau with Hairer's dense output coefficients.
namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dp

class PeakonOde {
 public:
  explicit PeakonOde(const PeakonState& s0) : n_(s0.size()), s_(s0.s) {}

  Eigen::VectorXd pack(const PeakonState& s) const {
    Eigen::VectorXd y(2 * n_);
    y << s.q, s.p;
    return y;
  }

  PeakonState unpack(const Eigen::VectorXd& y, double t) const {
    return PeakonState{t, y.head(n_), y.tail(n_), s_};
  }

  Eigen::VectorXd operator()(double t, const Eigen::VectorXd& y) const {
    const auto d = rhs(unpack(y, t));
    Eigen::VectorXd f(2 * n_);
    f << d.dq, d.dp;
    return f;
  }

 private:
  Eigen::Index n_;
  Eigen::VectorXd s_;
};

struct DenseStep {
  double t0, h;
  Eigen::VectorXd r1, r2, r3, r4, r5;

  Eigen::VectorXd at(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

std::vector<double> output_times(double t0, double t_end, const IntegrateOptions& opts) {
  const double dir = t_end >= t0 ? 1.0 : -1.0;
  std::vector<double> out{t0};
  if (opts.sample_dt > 0.0) {
    const double span = std::abs(t_end - t0);
    const auto count = static_cast<long long>(std::floor(span / opts.sample_dt + 1e-9));
    for (long long k = 1; k <= count; ++k) out.push_back(t0 + dir * static_cast<double>(k) * opts.sample_dt);
  }
  for (double t : opts.extra_times)
    if ((t - t0) * dir > 0.0 && (t_end - t) * dir >= 0.0) out.push_back(t);
  out.push_back(t_end);
  std::sort(out.begin(), out.end(), [dir](double a, double b) { return (a - b) * dir < 0.0; });
  // Merge times closer than rounding of the sample grid.
  std::vector<double> merged;
  for (double t : out)
    if (merged.empty() || std::abs(t - merged.back()) > 1e-12 * std::max(1.0, std::abs(t))) merged.push_back(t);
  if (std::abs(merged.back() - t_end) <= 1e-12 * std::max(1.0, std::abs(t_end))) merged.back() = t_end;
  return merged;
}

}  // namespace

TrajectoryRecord integrate(const PeakonState& state, double t_end, const IntegrateOptions& opts) {
  if (!state.strictly_increasing())
    throw std::invalid_argument("integrate: peakon positions must be strictly increasing");
  if (!(opts.rel_tol > 0.0) || !(opts.abs_tol >= 0.0) || !(opts.max_step > 0.0))
    throw std::invalid_argument("integrate: tolerances and max_step must be positive");

  TrajectoryRecord rec;
  auto push = [&rec](PeakonState s) {
    rec.energy.push_back(total_energy(s));
    rec.states.push_back(std::move(s));
  };

  if (t_end == state.t) {
    push(state);
    return rec;
  }

  const double dir = t_end > state.t ? 1.0 : -1.0;
  const auto outs = output_times(state.t, t_end, opts);
  std::size_t next_out = 1;
  push(state);

  const PeakonOde ode(state);
  const Eigen::Index dim = 2 * state.size();
  double t = state.t;
  Eigen::VectorXd y = ode.pack(state);
  Eigen::VectorXd k1 = ode(t, y);
  double h = dir * std::min(opts.initial_step, opts.max_step);
  double err_old = 1e-4;
  PeakonState last = state;

  constexpr double beta = 0.04, expo = 0.2 - beta * 0.75, safe = 0.9;

  auto error_norm = [&](const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, const Eigen::VectorXd& e) {
    if (dim == 0) return 0.0;
    const Eigen::ArrayXd scale = opts.abs_tol + opts.rel_tol * y0.array().abs().max(y1.array().abs());
    return std::sqrt((e.array() / scale).square().mean());
  };

  auto underflow_event = [&]() -> std::optional<CollisionEvent> {
    if (state.size() < 2) return std::nullopt;
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i + 1 < last.size(); ++i)
      if (gap(last, i) < gap(last, best)) best = i;
    if (gap_rate(last, best) * dir >= 0.0) return std::nullopt;
    return CollisionEvent{best, extrapolate_touchdown(last, best, dir), gap(last, best), true};
  };

  while ((t_end - t) * dir > 0.0) {
    if (rec.accepted_steps + rec.rejected_steps >= opts.max_steps)
      throw std::runtime_error("integrate: maximum number of steps exceeded");

    if (std::abs(h) > opts.max_step) h = dir * opts.max_step;
    if ((t + h - t_end) * dir > 0.0) h = t_end - t;

    const double h_min = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (std::abs(h) < h_min && h != t_end - t) {
      if (auto ev = underflow_event()) {
        rec.collision = ev;
        break;
      }
      throw std::runtime_error("integrate: step size underflow away from any collision");
    }

    using namespace dp;
    Eigen::VectorXd k2, k3, k4, k5, k6, k7, y1;
    try {
      k2 = ode(t + c2 * h, y + h * (a21 * k1));
      k3 = ode(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
      k4 = ode(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = ode(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = ode(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      k7 = ode(t + h, y1);
    } catch (const OrderingViolation&) {
      // A stage crossed a collision; retry with a smaller step.
      ++rec.rejected_steps;
      h *= 0.25;
      continue;
    }

    const Eigen::VectorXd e = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = error_norm(y, y1, e);
    if (!std::isfinite(err)) {
      ++rec.rejected_steps;
      h *= 0.25;
      continue;
    }

    double fac = std::pow(std::max(err, 1e-300), expo);
    if (err <= 1.0) {
      fac = std::clamp(fac / std::pow(err_old, beta) / safe, 0.1, 5.0);
      err_old = std::max(err, 1e-4);

      DenseStep dense{t, h, y, y1 - y, Eigen::VectorXd(), Eigen::VectorXd(), Eigen::VectorXd()};
      dense.r3 = h * k1 - dense.r2;
      dense.r4 = dense.r2 - h * k7 - dense.r3;
      dense.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

      const double t_new = (t + h - t_end) * dir >= 0.0 ? t_end : t + h;
      while (next_out < outs.size() && (outs[next_out] - t_new) * dir < 0.0) {
        push(ode.unpack(dense.at(outs[next_out]), outs[next_out]));
        ++next_out;
      }
      PeakonState current = ode.unpack(y1, t_new);
      if (next_out < outs.size() && outs[next_out] == t_new) {
        push(current);
        ++next_out;
      }

      ++rec.accepted_steps;
      auto ev = detect_collision(last, current, opts.gap_threshold);
      last = current;
      t = t_new;
      y = y1;
      k1 = k7;
      if (ev) {
        rec.collision = ev;
        break;
      }
      h = h / fac;
    } else {
      ++rec.rejected_steps;
      h = h / std::min(1.0 / 0.2, fac / safe);
    }
  }

  if (rec.collision && rec.states.back().t != last.t) push(last);
  return rec;
}

DriftSeries energy_drift(const TrajectoryRecord& traj) {
  if (traj.energy.empty()) return {};
  const double e0 = traj.energy.front();
  if (e0 == 0.0) throw std::domain_error("energy_drift: zero initial energy (degenerate scenario)");
  DriftSeries out;
  out.drift.reserve(traj.energy.size());
  for (double e : traj.energy) {
    const double d = std::abs(e - e0) / std::abs(e0);
    out.drift.push_back(d);
    out.max = std::max(out.max, d);
  }
  return out;
}

}  // namespace m2ch
