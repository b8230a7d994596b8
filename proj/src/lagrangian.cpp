#include "m2ch/lagrangian.hpp"

#include "m2ch/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace m2ch {

Eigen::ArrayXd LagrangianGrid::xi() const {
  return Eigen::ArrayXd::LinSpaced(size(), xi_min, xi_min + dxi * static_cast<double>(size() - 1));
}

GridSpec aligned_grid(const PeakonState& state, Eigen::Index n, double margin) {
  if (n < 8) throw std::invalid_argument("aligned_grid: need at least 8 nodes");
  if (!(margin > 0.0)) throw std::invalid_argument("aligned_grid: margin must be positive");
  const double lo = state.size() ? state.q[0] : 0.0;
  const double hi = state.size() ? state.q[state.size() - 1] : 0.0;
  const double gap = hi - lo;
  const double dx0 = (gap + 2.0 * margin) / static_cast<double>(n - 5);

  double dx = dx0;
  Eigen::Index k = 0;
  if (state.size() >= 2 && gap >= dx0) {
    k = static_cast<Eigen::Index>(std::floor(gap / dx0));
    dx = gap / static_cast<double>(k);
  } else if (gap > 0.0) {
    k = static_cast<Eigen::Index>(std::ceil(gap / dx));
  }
  const Eigen::Index m = (n - 2 - k) / 2;
  GridSpec spec;
  spec.n = n;
  spec.xi_min = lo - (static_cast<double>(m) + 0.5) * dx;
  spec.xi_max = spec.xi_min + static_cast<double>(n - 1) * dx;
  return spec;
}

namespace {

LagrangianGrid allocate(const GridSpec& spec, double t0) {
  if (spec.n < 3) throw std::invalid_argument("grid needs at least 3 nodes");
  if (!(spec.xi_max > spec.xi_min)) throw std::invalid_argument("grid needs xi_max > xi_min");
  LagrangianGrid g;
  g.t = t0;
  g.xi_min = spec.xi_min;
  g.dxi = spec.dxi();
  for (auto m : LagrangianFields::kMembers) g.*m = Eigen::ArrayXd::Zero(spec.n);
  return g;
}

void finish_init(LagrangianGrid& g) {
  g.y_xi.setOnes();
  g.rbar_xi = g.sbar;
  g.H_xi = (g.U.square() + g.rbar.square() + g.sbar.square()) * g.y_xi + g.U_xi.square() / g.y_xi;
  g.H[0] = 0.0;
  for (Eigen::Index i = 1; i < g.size(); ++i) g.H[i] = g.H[i - 1] + 0.5 * g.dxi * (g.H_xi[i - 1] + g.H_xi[i]);
  g.lambda.setZero();
  g.lambda_xi.setZero();
}

}  // namespace

LagrangianGrid init_from_profile(const InitialProfile& profile, const GridSpec& spec, double t0) {
  LagrangianGrid g = allocate(spec, t0);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double x = g.xi(i);
    g.y[i] = x;
    g.U[i] = profile.u(x);
    g.U_xi[i] = profile.u_x(x);
    g.rbar[i] = profile.rho_bar(x);
    g.sbar[i] = profile.rho_bar_x(x);
  }
  finish_init(g);
  return g;
}

LagrangianGrid init_from_peakons(const PeakonState& state, const GridSpec& spec) {
  if (state.size() > 0) {
    const double slack = 1e-9 * kMinMargin;
    if (spec.xi_min > state.q[0] - kMinMargin + slack || spec.xi_max < state.q[state.size() - 1] + kMinMargin - slack)
      throw std::invalid_argument("init_from_peakons: grid must extend at least 20 beyond the outermost peaks");
  }
  LagrangianGrid g = allocate(spec, state.t);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const auto smp = sample(state, g.xi(i));
    g.y[i] = smp.x;
    g.U[i] = smp.u;
    g.U_xi[i] = smp.u_x;
    g.rbar[i] = smp.rho_bar;
    g.sbar[i] = smp.rho_bar_x;
  }
  finish_init(g);
  return g;
}

IntegralBundle compute_integrals(const LagrangianGrid& g) {
  const auto factors = decay_factors(g.y);
  IntegralBundle b;

  const auto pq = convolve_with_factors(factors, 0.25 * (g.H_xi + (g.U.square() - 2.0 * g.sbar.square()) * g.y_xi), g.dxi);
  b.P = pq.sym;
  b.Q = -pq.asym;

  const auto rv = convolve_with_factors(factors, 0.5 * g.U_xi * g.rbar, g.dxi);
  b.R = rv.sym;
  b.V = -rv.asym;

  const auto sw = convolve_with_factors(factors, 0.5 * g.U_xi * g.sbar, g.dxi);
  b.S = sw.sym;
  b.W = -sw.asym;
  return b;
}

LagrangianFields rhs(const LagrangianGrid& g) {
  const IntegralBundle b = compute_integrals(g);
  const Eigen::ArrayXd SV = b.S + b.V;
  const Eigen::ArrayXd RW = b.R + b.W;

  LagrangianFields d;
  d.y = g.U;
  d.U = -b.Q;
  d.H = g.U.cube() - 2.0 * b.P * g.U - 2.0 * g.rbar * SV;
  d.H[0] = 0.0;  // H(xi_min) = 0 is pinned
  d.rbar = -RW;
  d.sbar = -SV;
  d.lambda = g.rbar;

  d.y_xi = g.U_xi;
  d.U_xi = 0.5 * g.H_xi + (0.5 * g.U.square() - g.sbar.square() - b.P) * g.y_xi;
  d.H_xi = (3.0 * g.U.square() - 2.0 * b.P + 2.0 * g.rbar.square()) * g.U_xi -
           2.0 * (b.Q * g.U + g.rbar * RW) * g.y_xi - 2.0 * SV * g.rbar_xi;
  d.rbar_xi = g.sbar * g.U_xi - SV * g.y_xi;
  d.lambda_xi = g.rbar_xi;
  return d;
}

namespace {

LagrangianGrid advanced(const LagrangianGrid& g, const LagrangianFields& rate, double h) {
  LagrangianGrid out = g;
  for (auto m : LagrangianFields::kMembers) out.*m += h * (rate.*m);
  out.t = g.t + h;
  return out;
}

bool all_finite(const LagrangianFields& f) {
  for (auto m : LagrangianFields::kMembers)
    if (!(f.*m).allFinite()) return false;
  return true;
}

}  // namespace

LagrangianGrid step(const LagrangianGrid& g, double dt) {
  if (!(dt > 0.0) && !(dt < 0.0)) throw std::invalid_argument("step: dt must be non-zero");
  LagrangianGrid out = g;
  try {
    const LagrangianFields k1 = rhs(g);
    const LagrangianFields k2 = rhs(advanced(g, k1, 0.5 * dt));
    const LagrangianFields k3 = rhs(advanced(g, k2, 0.5 * dt));
    const LagrangianFields k4 = rhs(advanced(g, k3, dt));
    for (auto m : LagrangianFields::kMembers)
      out.*m += (dt / 6.0) * ((k1.*m) + 2.0 * (k2.*m) + 2.0 * (k3.*m) + (k4.*m));
  } catch (const std::invalid_argument& e) {
    throw SolverAbort(std::string("step: ") + e.what(), g);
  }
  out.t = g.t + dt;

  if (!all_finite(out)) throw SolverAbort("step: non-finite values", g);
  const double before = g.U_xi.size() ? g.U_xi.abs().maxCoeff() : 0.0;
  const double after = out.U_xi.size() ? out.U_xi.abs().maxCoeff() : 0.0;
  if (after > 10.0 * std::max(before, 1.0)) throw SolverAbort("step: max|U_xi| grew more than tenfold", g);
  return out;
}

double suggested_dt(const LagrangianGrid& g, double courant, double mask_eps) {
  double rate = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (g.y_xi[i] >= mask_eps) rate = std::max(rate, std::abs(g.U_xi[i] / g.y_xi[i]));
  return courant * std::min(1.0, rate > 0.0 ? 1.0 / rate : 1.0);
}

double constraint_residual(const LagrangianGrid& g) {
  if (g.size() == 0) return 0.0;
  const Eigen::ArrayXd res =
      g.y_xi * g.H_xi - (g.U.square() + g.rbar.square() + g.sbar.square()) * g.y_xi.square() - g.U_xi.square();
  return res.abs().maxCoeff() / std::max(1.0, g.H_xi.maxCoeff());
}

namespace {

// Central differences inside, second-order one-sided at the ends.
Eigen::ArrayXd derivative(const Eigen::ArrayXd& f, double h) {
  const Eigen::Index n = f.size();
  Eigen::ArrayXd d(n);
  if (n < 3) return Eigen::ArrayXd::Zero(n);
  d.segment(1, n - 2) = (f.tail(n - 2) - f.head(n - 2)) / (2.0 * h);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return d;
}

}  // namespace

RField compute_r(const LagrangianGrid& g) {
  RField out;
  out.r = -derivative(g.sbar, g.dxi) + g.rbar * g.y_xi;
  out.consistency = g.rbar_xi - g.sbar * g.y_xi;
  return out;
}

MaskedField pointwise_invariant(const LagrangianGrid& g, double mask_eps) {
  const Eigen::Index n = g.size();
  MaskedField out{Eigen::ArrayXd::Zero(n), Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false)};
  if (n < 3) return out;
  const Eigen::ArrayXd U_xixi = derivative(g.U_xi, g.dxi);
  const Eigen::ArrayXd y_xixi = derivative(g.y_xi, g.dxi);
  const Eigen::ArrayXd r = compute_r(g).r;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (!(g.y_xi[i] >= mask_eps)) continue;
    const double k = g.U[i] * g.y_xi[i] * g.y_xi[i] - U_xixi[i] + y_xixi[i] / g.y_xi[i] * g.U_xi[i];
    out.value[i] = k + g.lambda_xi[i] * r[i];
    out.valid[i] = true;
  }
  return out;
}

EulerianField to_eulerian(const LagrangianGrid& g, const Eigen::ArrayXd& x_grid) {
  const Eigen::Index m = x_grid.size();
  const Eigen::Index n = g.size();
  EulerianField f{x_grid, Eigen::ArrayXd::Zero(m), Eigen::ArrayXd::Zero(m), Eigen::ArrayXd::Zero(m),
                  Eigen::ArrayXd::Zero(m)};
  if (n < 2) return f;
  const double* yb = g.y.data();
  const double* ye = yb + n;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double x = x_grid[j];
    if (x < yb[0] || x > ye[-1]) continue;
    const auto k = static_cast<Eigen::Index>(std::lower_bound(yb, ye, x) - yb);
    if (g.y[k] == x) {
      f.u[j] = g.U[k];
      f.rho_bar[j] = g.rbar[k];
      f.rho_bar_x[j] = g.sbar[k];
    } else {
      const double w = (x - g.y[k - 1]) / (g.y[k] - g.y[k - 1]);
      f.u[j] = (1.0 - w) * g.U[k - 1] + w * g.U[k];
      f.rho_bar[j] = (1.0 - w) * g.rbar[k - 1] + w * g.rbar[k];
      f.rho_bar_x[j] = (1.0 - w) * g.sbar[k - 1] + w * g.sbar[k];
    }
    // Cell average dH/dy of the first non-degenerate cell containing x.
    Eigen::Index c = std::max<Eigen::Index>(k, 1);
    while (c < n && g.y[c] == g.y[c - 1] && g.y[c] == x) ++c;
    if (c < n && g.y[c] > g.y[c - 1])
      f.energy_density[j] = (g.H[c] - g.H[c - 1]) / (g.y[c] - g.y[c - 1]);
    else
      f.energy_density[j] = std::numeric_limits<double>::infinity();
  }
  return f;
}

LabelSample sample_label(const LagrangianGrid& g, double xi) {
  const Eigen::Index n = g.size();
  if (n < 2) throw std::invalid_argument("sample_label: grid too small");
  const double pos = (xi - g.xi_min) / g.dxi;
  const auto k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), 0, n - 2);
  const double a = (pos - static_cast<double>(k)) * g.dxi;
  const double b = g.dxi - a;
  const double w = a / g.dxi;
  auto taylor = [&](const Eigen::ArrayXd& f, const Eigen::ArrayXd& fx) {
    return (1.0 - w) * (f[k] + a * fx[k]) + w * (f[k + 1] - b * fx[k + 1]);
  };
  LabelSample s;
  s.y = taylor(g.y, g.y_xi);
  s.U = taylor(g.U, g.U_xi);
  s.rbar = taylor(g.rbar, g.rbar_xi);
  s.H = taylor(g.H, g.H_xi);
  s.sbar = (1.0 - w) * g.sbar[k] + w * g.sbar[k + 1];
  return s;
}

}  // namespace m2ch
