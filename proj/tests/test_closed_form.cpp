#include "m2ch/closed_form.hpp"

#include <boost/numeric/odeint.hpp>
#include <doctest.h>

#include <array>
#include <cmath>

using namespace m2ch;

namespace {

// reduced system integrated numerically: q' = p (1 - e^q), p' = (p^2 + C) / 2
std::array<double, 2> reduced_flow(double s, double q0, double p0, double t0, double t1) {
  namespace ode = boost::numeric::odeint;
  const double C = s * s - 1.0;
  std::array<double, 2> x{q0, p0};
  auto f = [C](const std::array<double, 2>& y, std::array<double, 2>& dy, double) {
    dy[0] = -y[1] * std::expm1(y[0]);
    dy[1] = 0.5 * (y[1] * y[1] + C);
  };
  ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_dopri5<std::array<double, 2>>>(1e-14, 1e-14), f, x,
                          t0, t1, 1e-4);
  return x;
}

}  // namespace

TEST_CASE("classification") {
  CHECK(classify(0.5).regime == Regime::Subcritical);
  CHECK(classify(0.5).C == -0.75);
  CHECK(classify(0.5).p_inf == doctest::Approx(std::sqrt(0.75)).epsilon(1e-15));
  CHECK(classify(1.0).regime == Regime::Critical);
  CHECK(classify(1.0 + 1e-14).regime == Regime::Critical);
  CHECK(classify(1.0 + 1e-12).regime == Regime::Supercritical);
  CHECK(classify(2.0).regime == Regime::Supercritical);
  CHECK(std::isnan(classify(2.0).p_inf));
  CHECK_THROWS_AS(classify(-0.1), std::invalid_argument);
  CHECK(std::string(to_string(Regime::Critical)) == "critical");
}

TEST_CASE("reference values") {
  CHECK(eval_collision_centered(classify(0.0), 2.0).q == doctest::Approx(-0.86756166096605437).epsilon(1e-13));
  CHECK(eval_collision_centered(classify(0.0), -2.0).q == doctest::Approx(-0.86756166096605437).epsilon(1e-13));
  CHECK(period(classify(1.5)) == doctest::Approx(5.6198517848325811).epsilon(1e-15));
  CHECK_THROWS_AS(period(classify(0.5)), std::domain_error);
  CHECK_THROWS_AS(period(classify(1.0)), std::domain_error);
}

TEST_CASE("closed forms agree with a numerical integration of the reduced system") {
  for (double s : {0.0, 0.25, 0.5, 1.0, 1.5, 2.0}) {
    const auto c = classify(s);
    const auto a = eval_collision_centered(c, -2.0);
    for (double t : {-1.5, -0.7, -0.2}) {
      const auto num = reduced_flow(s, a.q, a.p, -2.0, t);
      const auto ref = eval_collision_centered(c, t);
      CHECK(std::abs(num[0] - ref.q) < 1e-9);
      CHECK(std::abs(num[1] - ref.p) < 1e-8 * std::max(1.0, std::abs(ref.p)));
    }
  }
}

TEST_CASE("energy identity, sign of q and circle along every branch") {
  for (double s : {0.0, 0.25, 0.5, 1.0, 1.5, 2.0}) {
    const auto c = classify(s);
    for (int k = 0; k < 1000; ++k) {
      const double t = -30.0 + 60.0 * (k + 0.5) / 1000.0;
      const auto pt = eval_collision_centered(c, t);
      CHECK(std::abs(energy_identity_residual(pt, s)) <= 1e-10);
      CHECK(pt.q <= 0.0);
      if (s > 0) CHECK(std::abs(circle_residual(pt, s)) <= 1e-12);
      CHECK(pt.u_peak == doctest::Approx(-0.5 * pt.p * std::expm1(pt.q)).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(circle_residual(AntisymPoint{}, 0.0), std::invalid_argument);
}

TEST_CASE("value at the collision instant") {
  const auto pt = eval_collision_centered(classify(0.5), 0.0);
  CHECK(pt.p_infinite);
  CHECK(pt.q == 0.0);
  CHECK(std::isinf(pt.p));
  CHECK(energy_identity_residual(pt, 0.5) == 0.0);
}

TEST_CASE("supercritical periodicity") {
  const auto c = classify(1.5);
  const double T = period(c);
  for (int k = 0; k < 200; ++k) {
    const double t = -3.0 + 0.031 * k;
    if (std::abs(std::remainder(t, T)) < 1e-3) continue;
    const auto a = eval_collision_centered(c, t), b = eval_collision_centered(c, t + T);
    CHECK(std::abs(a.q - b.q) <= 1e-12);
    CHECK(std::abs(a.u_peak - b.u_peak) <= 1e-12);
    CHECK(std::abs(a.rho_bar_peak - b.rho_bar_peak) <= 1e-12);
  }
}

TEST_CASE("general data matches the shifted centred solution") {
  for (double s : {0.0, 0.5, 1.0, 1.5}) {
    const auto c = classify(s);
    const auto p0 = eval_collision_centered(c, -0.8);
    const double ts = collision_time(c, p0.p, p0.q);
    CHECK(ts == doctest::Approx(0.8).epsilon(1e-10));
    const auto same = eval_general(c, p0.p, p0.q, 0.0);
    CHECK(same.q == p0.q);
    CHECK(same.p == p0.p);
    for (double t : {-2.0, 0.3, 0.79, 1.5, 3.0}) {
      const auto g = eval_general(c, p0.p, p0.q, t);
      const auto r = eval_collision_centered(c, t - 0.8);
      CHECK(std::abs(g.q - r.q) <= 1e-10);
    }
  }
}

TEST_CASE("general data is validated") {
  const auto c = classify(1.5);
  const double q0 = std::log(0.56);
  CHECK(normalization_residual(1.5, 0.5, q0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_THROWS_AS(eval_general(c, 0.5, q0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(eval_general(c, 0.5, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("asymptotic limits") {
  for (double s : {0.25, 0.5, 0.9}) {
    const auto c = classify(s);
    const auto as = asymptotics(c);
    REQUIRE(as.limits.has_value());
    CHECK(as.limit_circle);
    CHECK(!as.periodic);
    const auto& l = *as.limits;
    CHECK(l.u_peak_plus == doctest::Approx(-0.5 * c.p_inf));
    CHECK(l.u_peak_minus == doctest::Approx(0.5 * c.p_inf));
    CHECK(l.u_peak_plus * l.u_peak_plus + l.rho_bar_peak * l.rho_bar_peak == doctest::Approx(0.25));
    const auto far = eval_collision_centered(c, 50.0), back = eval_collision_centered(c, -50.0);
    CHECK(std::abs(far.u_peak - l.u_peak_plus) < 1e-3);
    CHECK(std::abs(back.u_peak - l.u_peak_minus) < 1e-3);
    CHECK(std::abs(far.rho_bar_peak - l.rho_bar_peak) < 1e-3);
  }
  CHECK(asymptotics(classify(1.5)).periodic);
  CHECK(!asymptotics(classify(1.5)).limits);
}

TEST_CASE("finite differences satisfy the reduced equations") {
  for (double s : {0.0, 0.5, 1.0, 1.5}) {
    const auto c = classify(s);
    for (double t : {-2.5, -1.0, -0.6, 0.7, 2.0}) {
      const double h = 1e-4;
      const auto a = eval_collision_centered(c, t - h), b = eval_collision_centered(c, t + h),
                 m = eval_collision_centered(c, t);
      CHECK(std::abs((b.q - a.q) / (2 * h) + m.p * std::expm1(m.q)) < 1e-6);
      CHECK(std::abs((b.p - a.p) / (2 * h) - 0.5 * (m.p * m.p + c.C)) < 1e-6);
    }
  }
}

TEST_CASE("two-peakon state of a reduced point") {
  const auto c = classify(0.5);
  const auto pt = eval_collision_centered(c, -1.0);
  const auto st = to_peakon_state(c, pt);
  CHECK(st.t == -1.0);
  CHECK(st.q[0] == -st.q[1]);
  CHECK(st.q[0] - st.q[1] == doctest::Approx(pt.q));
  CHECK(st.p[0] == -st.p[1]);
  CHECK(st.s[0] == 0.25);
  CHECK(total_energy(st) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(eval_u(st, st.q[0]) == doctest::Approx(pt.u_peak).epsilon(1e-13));
  CHECK(eval_rho_bar(st, st.q[0]) == doctest::Approx(pt.rho_bar_peak).epsilon(1e-13));
}
