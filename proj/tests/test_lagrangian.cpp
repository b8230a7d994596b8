#include "m2ch/closed_form.hpp"
#include "m2ch/lagrangian.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace m2ch;

namespace {

PeakonState antisym_start(double s, double t) {
  const auto c = classify(s);
  return to_peakon_state(c, eval_collision_centered(c, t));
}

InitialProfile gaussian(double au, double ar) {
  return {[=](double x) { return au * std::exp(-x * x); }, [=](double x) { return -2 * x * au * std::exp(-x * x); },
          [=](double x) { return ar * std::exp(-x * x); }, [=](double x) { return -2 * x * ar * std::exp(-x * x); }};
}

// Camassa-Holm in Lagrangian variables, O(N^2) sums and plain RK4.
struct ChState {
  std::vector<double> y, U, H, yx, Ux, Hx;
};

ChState ch_rhs(const ChState& s, double dxi) {
  const std::size_t n = s.y.size();
  std::vector<double> P(n, 0.0), Q(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double w = 0.25 * (s.Hx[j] + s.U[j] * s.U[j] * s.yx[j]) * dxi * std::exp(-std::abs(s.y[i] - s.y[j]));
      P[i] += w;
      Q[i] -= (i > j ? 1.0 : i < j ? -1.0 : 0.0) * w;
    }
  ChState d{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
            std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    d.y[i] = s.U[i];
    d.U[i] = -Q[i];
    d.H[i] = i == 0 ? 0.0 : s.U[i] * s.U[i] * s.U[i] - 2.0 * P[i] * s.U[i];
    d.yx[i] = s.Ux[i];
    d.Ux[i] = 0.5 * s.Hx[i] + (0.5 * s.U[i] * s.U[i] - P[i]) * s.yx[i];
    d.Hx[i] = (3.0 * s.U[i] * s.U[i] - 2.0 * P[i]) * s.Ux[i] - 2.0 * Q[i] * s.U[i] * s.yx[i];
  }
  return d;
}

ChState axpy(const ChState& a, double h, const ChState& d) {
  ChState o = a;
  auto f = [h](std::vector<double>& x, const std::vector<double>& dx) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += h * dx[i];
  };
  f(o.y, d.y), f(o.U, d.U), f(o.H, d.H), f(o.yx, d.yx), f(o.Ux, d.Ux), f(o.Hx, d.Hx);
  return o;
}

ChState ch_step(const ChState& s, double dxi, double dt) {
  const auto k1 = ch_rhs(s, dxi);
  const auto k2 = ch_rhs(axpy(s, dt / 2, k1), dxi);
  const auto k3 = ch_rhs(axpy(s, dt / 2, k2), dxi);
  const auto k4 = ch_rhs(axpy(s, dt, k3), dxi);
  return axpy(axpy(axpy(axpy(s, dt / 6, k1), dt / 3, k2), dt / 3, k3), dt / 6, k4);
}

std::vector<double> vec(const Eigen::ArrayXd& a) { return {a.data(), a.data() + a.size()}; }

}  // namespace

TEST_CASE("aligned grid places the outer peaks at cell midpoints") {
  const auto st = antisym_start(0.5, -2.0);
  const auto spec = aligned_grid(st, 1024);
  CHECK(spec.n == 1024);
  for (Eigen::Index i = 0; i < st.size(); ++i) {
    const double pos = (st.q[i] - spec.xi_min) / spec.dxi();
    CHECK(std::abs(pos - std::floor(pos) - 0.5) < 1e-9);
  }
  CHECK(spec.xi_min <= st.q[0] - kMinMargin);
  CHECK(spec.xi_max >= st.q[1] + kMinMargin);
  CHECK_THROWS_AS(init_from_peakons(st, GridSpec{-5.0, 5.0, 512}), std::invalid_argument);
}

TEST_CASE("initial data from peakons") {
  const auto st = antisym_start(0.5, -3.0);
  const auto g = init_from_peakons(st, aligned_grid(st, 2048));
  CHECK(constraint_residual(g) < 1e-14);
  CHECK((g.y - g.xi()).abs().maxCoeff() == 0.0);
  CHECK((g.y_xi == 1.0).all());
  CHECK((g.lambda == 0.0).all());
  CHECK(g.H[0] == 0.0);
  CHECK((g.H.tail(g.size() - 1) - g.H.head(g.size() - 1)).minCoeff() >= 0.0);
  CHECK(g.energy_integral() == doctest::Approx(2.0 * total_energy(st)).epsilon(1e-3));
  CHECK(g.t == -3.0);
}

TEST_CASE("integrals against direct sums") {
  const auto st = antisym_start(0.5, -1.0);
  auto g = init_from_peakons(st, aligned_grid(st, 512));
  for (int k = 0; k < 50; ++k) g = step(g, 0.01);
  const auto ib = compute_integrals(g);
  for (Eigen::Index i = 0; i < g.size(); i += 17) {
    double P = 0, Q = 0, R = 0, V = 0, S = 0, W = 0;
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      const double e = std::exp(-std::abs(g.y[i] - g.y[j])) * g.dxi;
      const double sg = i > j ? 1.0 : i < j ? -1.0 : 0.0;
      const double wp = 0.25 * (g.H_xi[j] + (g.U[j] * g.U[j] - 2 * g.sbar[j] * g.sbar[j]) * g.y_xi[j]);
      const double wr = 0.5 * g.U_xi[j] * g.rbar[j], ws = 0.5 * g.U_xi[j] * g.sbar[j];
      P += e * wp, Q -= sg * e * wp, R += e * wr, V -= sg * e * wr, S += e * ws, W -= sg * e * ws;
    }
    CHECK(std::abs(ib.P[i] - P) < 1e-12);
    CHECK(std::abs(ib.Q[i] - Q) < 1e-12);
    CHECK(std::abs(ib.R[i] - R) < 1e-12);
    CHECK(std::abs(ib.V[i] - V) < 1e-12);
    CHECK(std::abs(ib.S[i] - S) < 1e-12);
    CHECK(std::abs(ib.W[i] - W) < 1e-12);
  }
  const auto d = rhs(g);
  CHECK((d.y == g.U).all());
  CHECK((d.lambda == g.rbar).all());
  CHECK((d.U == -ib.Q).all());
  CHECK(d.H[0] == 0.0);
}

TEST_CASE("without density the solver reproduces an independent CH run") {
  const auto st = make_peakon_state({-0.8, 0.8}, {0.6, -0.6}, {0.0, 0.0}, -1.0);
  auto g = init_from_peakons(st, aligned_grid(st, 200));
  ChState ch{vec(g.y), vec(g.U), vec(g.H), vec(g.y_xi), vec(g.U_xi), vec(g.H_xi)};
  for (int k = 0; k < 300; ++k) {
    g = step(g, 0.01);
    ch = ch_step(ch, g.dxi, 0.01);
  }
  CHECK((g.rbar == 0.0).all());
  CHECK((g.sbar == 0.0).all());
  double diff = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    diff = std::max({diff, std::abs(g.y[i] - ch.y[k]), std::abs(g.U[i] - ch.U[k]), std::abs(g.H[i] - ch.H[k]),
                     std::abs(g.U_xi[i] - ch.Ux[k]), std::abs(g.H_xi[i] - ch.Hx[k])});
  }
  CHECK(diff < 1e-10);
}

TEST_CASE("antisymmetric run through the collision") {
  const double s = 0.5;
  const auto c = classify(s);
  const auto st = antisym_start(s, -1.0);
  auto g = init_from_peakons(st, aligned_grid(st, 1024));
  const double e0 = g.energy_integral();
  const auto r0 = compute_r(g).r;
  double res = 0.0, drift = 0.0, sbar_max = g.sbar.abs().maxCoeff();
  for (int k = 0; k < 1000; ++k) {
    g = step(g, 2e-3);
    res = std::max(res, constraint_residual(g));
    drift = std::max(drift, std::abs(g.energy_integral() - e0) / e0);
    CHECK((g.y.tail(g.size() - 1) - g.y.head(g.size() - 1)).minCoeff() >= -1e-9);
  }
  CHECK(g.t == doctest::Approx(1.0));
  CHECK(res < 1e-6);
  CHECK(drift < 1e-6);
  CHECK(g.sbar.abs().maxCoeff() <= sbar_max + 1e-6);
  const auto peak = sample_label(g, st.q[0]);
  const auto ref = eval_collision_centered(c, g.t);
  CHECK(std::abs(peak.U - ref.u_peak) < 1e-3);
  CHECK(std::abs(peak.rbar - ref.rho_bar_peak) < 1e-3);
  CHECK(std::abs(2.0 * peak.y - ref.q) < 1e-3);
  const auto r = compute_r(g).r;
  CHECK(std::abs(r[10] - r0[10]) < 1e-8 + 10 * g.dxi * g.dxi);
}

TEST_CASE("r consistency and invariant converge for smooth data") {
  double prev_cons = 0.0, prev_res = 0.0, prev_inv = 0.0;
  for (int lev = 0; lev < 3; ++lev) {
    const Eigen::Index n = 250 * (1 << lev) + 1;
    const double dt = 0.04 / (1 << lev);
    auto g = init_from_profile(gaussian(0.5, 0.4), GridSpec{-25.0, 25.0, n});
    const auto i0 = pointwise_invariant(g);
    CHECK(!i0.valid[0]);
    CHECK(!i0.valid[n - 1]);
    for (int k = 0; k < static_cast<int>(std::lround(0.5 / dt)); ++k) g = step(g, dt);
    const double cons = compute_r(g).consistency.abs().maxCoeff();
    const double res = constraint_residual(g);
    const auto i1 = pointwise_invariant(g);
    double inv = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (i0.valid[i] && i1.valid[i]) inv = std::max(inv, std::abs(i1.value[i] - i0.value[i]));
    if (lev > 0) {
      CHECK(prev_cons / cons > 3.5);
      CHECK(prev_res / res > 4.0);
      CHECK(std::log2(prev_inv / inv) > 1.8);
    }
    prev_cons = cons, prev_res = res, prev_inv = inv;
  }
}

TEST_CASE("Eulerian read-back") {
  const auto st = antisym_start(0.5, -2.0);
  const auto g = init_from_peakons(st, aligned_grid(st, 1024));
  Eigen::ArrayXd x(4);
  x << g.y[100], 0.5 * (g.y[200] + g.y[201]), g.y[0] - 1.0, g.y[g.size() - 1] + 1.0;
  const auto f = to_eulerian(g, x);
  CHECK(f.u[0] == g.U[100]);
  CHECK(f.rho_bar[0] == g.rbar[100]);
  CHECK(f.u[1] == doctest::Approx(0.5 * (g.U[200] + g.U[201])));
  CHECK(f.u[2] == 0.0);
  CHECK(f.u[3] == 0.0);
  CHECK(f.energy_density[1] == doctest::Approx((g.H[201] - g.H[200]) / g.dxi));
  const auto at = sample_label(g, g.xi(300));
  CHECK(at.y == doctest::Approx(g.y[300]));
  CHECK(at.U == doctest::Approx(g.U[300]));
}

TEST_CASE("solver aborts keep the last valid grid") {
  const auto st = antisym_start(0.5, -1.0);
  auto g = init_from_peakons(st, aligned_grid(st, 256));
  g.U[40] = NAN;
  try {
    (void)step(g, 1e-3);
    FAIL("expected SolverAbort");
  } catch (const SolverAbort& e) {
    CHECK(std::isnan(e.last_valid().U[40]));
    CHECK(e.last_valid().t == g.t);
  }
  const auto ok = init_from_peakons(st, aligned_grid(st, 256));
  CHECK(suggested_dt(ok) > 0.0);
  CHECK(suggested_dt(ok) <= 0.5);
}
