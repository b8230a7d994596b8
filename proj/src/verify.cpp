#include "m2ch/verify.hpp"

#include "m2ch/closed_form.hpp"
#include "m2ch/kernel.hpp"
#include "m2ch/lagrangian.hpp"
#include "m2ch/peakon_dynamics.hpp"
#include "m2ch/run.hpp"
#include "m2ch/scenario.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

namespace m2ch {

bool Report::ok() const { return failures() == 0; }

std::size_t Report::failures() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.pass ? 0 : 1;
  return n;
}

std::string Report::to_text() const {
  std::ostringstream out;
  out << "suite\toperation\tcheck\tmeasured\tthreshold\tstatus\n";
  out.precision(6);
  for (const auto& e : entries)
    out << e.suite << '\t' << e.operation << '\t' << e.check << '\t' << e.measured << '\t' << e.threshold << '\t'
        << (e.pass ? "PASS" : "FAIL") << '\n';
  out << "summary: " << entries.size() << " checks, " << failures() << " failed\n";
  return out.str();
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"core", "dynamics", "closed-form", "lagrangian", "all"};
  return names;
}

namespace {

class Suite {
 public:
  Suite(Report& r, std::string name) : r_(r), name_(std::move(name)) {}
  void at_most(const std::string& op, const std::string& check, double measured, double threshold) {
    r_.entries.push_back({name_, op, check, measured, threshold, measured <= threshold});
  }
  void at_least(const std::string& op, const std::string& check, double measured, double threshold) {
    r_.entries.push_back({name_, op, check, measured, threshold, measured >= threshold});
  }

 private:
  Report& r_;
  std::string name_;
};

PeakonState random_state(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> pos(-5.0, 5.0), gap(1e-3, 3.0), amp(-2.0, 2.0);
  Eigen::VectorXd q(n), p(n), s(n);
  q[0] = pos(rng);
  for (int i = 1; i < n; ++i) q[i] = q[i - 1] + gap(rng);
  for (int i = 0; i < n; ++i) {
    p[i] = amp(rng);
    s[i] = amp(rng);
  }
  return make_peakon_state<double>(q, p, s);
}

void core_suite(Report& r) {
  Suite s(r, "core");
  std::mt19937_64 rng(20240601);

  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto st = random_state(rng, 2);
    const double e = std::exp(-std::abs(st.q[0] - st.q[1]));
    const double ref = st.p[0] * st.p[0] + st.p[1] * st.p[1] + st.s[0] * st.s[0] + st.s[1] * st.s[1] +
                       2.0 * (st.p[0] * st.p[1] + st.s[0] * st.s[1]) * e;
    worst = std::max(worst, std::abs(total_energy(st) - ref) / std::abs(ref));
  }
  s.at_most("total_energy", "n=2 energy matches the two-peakon Hamiltonian", worst, 1e-14);

  double jump_u = 0.0, jump_r = 0.0, dmax = 0.0, trans = 0.0, split = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto st = random_state(rng, 4);
    for (Eigen::Index i = 0; i < st.size(); ++i) {
      const double x = st.q[i], eps = 1e-9 * std::max(1.0, std::abs(x));
      jump_u = std::max(jump_u, std::abs(eval_u(st, x + eps) - eval_u(st, x - eps)));
      jump_r = std::max(jump_r, std::abs(eval_rho_bar(st, x + eps) - eval_rho_bar(st, x - eps)));
    }
    for (int j = 0; j < 5; ++j) {
      const double x = 0.5 * (st.q[j % 3] + st.q[j % 3 + 1]), h = 1e-5;
      const auto d = eval_derivatives(st, x);
      const double fu = (eval_u(st, x + h) - eval_u(st, x - h)) / (2 * h);
      const double fr = (eval_rho_bar(st, x + h) - eval_rho_bar(st, x - h)) / (2 * h);
      dmax = std::max({dmax, std::abs(d.u_x - fu), std::abs(d.rho_bar_x - fr)});
    }
    PeakonState moved = st;
    moved.q.array() += 7.25;
    trans = std::max(trans, std::abs(total_energy(moved) - total_energy(st)) / total_energy(st));
    PeakonState far = st;
    far.q.array() += (st.q[3] - st.q[0]) + 50.0;
    Eigen::VectorXd q(8), p(8), sv(8);
    q << st.q, far.q;
    p << st.p, st.p;
    sv << st.s, st.s;
    const auto both = make_peakon_state<double>(q, p, sv);
    split = std::max(split, std::abs(total_energy(both) - 2.0 * total_energy(st)) / total_energy(both));
  }
  s.at_most("eval_u", "u continuous across peaks (jump at +-1e-9)", jump_u, 1e-6);
  s.at_most("eval_rho_bar", "rho_bar continuous across peaks (jump at +-1e-9)", jump_r, 1e-6);
  s.at_most("eval_derivatives", "slopes match central differences off the peaks", dmax, 1e-6);
  s.at_most("total_energy", "translation invariance (relative)", trans, 1e-13);
  s.at_most("total_energy", "separation 50 splits energy additively", split, 1e-12);
}

void dynamics_suite(Report& r) {
  Suite s(r, "dynamics");
  std::mt19937_64 rng(77);

  double ch = 0.0, ds = 0.0;
  for (int k = 0; k < 200; ++k) {
    auto st = random_state(rng, 5);
    st.s.setZero();
    const auto d = rhs(st);
    for (Eigen::Index i = 0; i < st.size(); ++i) {
      double dq = 0.0, dp = 0.0;
      for (Eigen::Index j = 0; j < st.size(); ++j) {
        const double e = std::exp(-std::abs(st.q[i] - st.q[j]));
        dq += st.p[j] * e;
        if (j != i) dp += st.p[i] * st.p[j] * (st.q[i] > st.q[j] ? 1.0 : -1.0) * e;
      }
      ch = std::max({ch, std::abs(d.dq[i] - dq), std::abs(d.dp[i] - dp)});
    }
    auto st2 = random_state(rng, 5);
    ds = std::max(ds, rhs(st2).ds.cwiseAbs().maxCoeff());
  }
  s.at_most("rhs", "s = 0 reduces to the CH multipeakon rhs", ch, 1e-13);
  s.at_most("rhs", "ds identically zero", ds, 0.0);

  IntegrateOptions o;
  const auto st = make_peakon_state({-3.0, 0.0, 3.0}, {0.5, 0.8, 1.1}, {0.3, -0.2, 0.1});
  const auto fwd = integrate(st, 2.0, o);
  const auto back = integrate(fwd.states.back(), 0.0, o);
  const auto& b = back.states.back();
  const double rev = std::max((b.q - st.q).cwiseAbs().maxCoeff(), (b.p - st.p).cwiseAbs().maxCoeff());
  const double scale = std::max(st.q.cwiseAbs().maxCoeff(), st.p.cwiseAbs().maxCoeff());
  s.at_most("integrate", "time reversibility t -> 2 -> 0 within 10x tolerance", rev, 10.0 * (o.abs_tol + o.rel_tol * scale));
  double sconst = 0.0;
  for (const auto& x : fwd.states) sconst = std::max(sconst, (x.s - st.s).cwiseAbs().maxCoeff());
  s.at_most("integrate", "s unchanged bitwise along the trajectory", sconst, 0.0);
  s.at_most("energy_drift", "non-colliding drift <= 100 rel_tol", energy_drift(fwd).max, 100.0 * o.rel_tol);

  for (double sv : {0.5, 0.0}) {
    const auto c = classify(sv);
    const auto start = to_peakon_state(c, eval_collision_centered(c, -3.0));
    const auto pre = integrate(start, -0.1, o);
    double asym = 0.0, dq = 0.0;
    for (const auto& x : pre.states) {
      asym = std::max({asym, std::abs(x.q[0] + x.q[1]), std::abs(x.p[0] + x.p[1]), std::abs(x.s[0] + x.s[1])});
      dq = std::max(dq, std::abs((x.q[0] - x.q[1]) - eval_collision_centered(c, x.t).q));
    }
    const std::string tag = "s=" + std::string(sv == 0.0 ? "0" : "0.5");
    s.at_most("integrate", tag + " antisymmetry preserved", asym, 1e-12);
    s.at_most("integrate", tag + " q matches the closed form", dq, 1e-6);
    const auto full = integrate(start, 1.0, o);
    const double err = full.collision ? std::abs(full.collision->time) : INFINITY;
    s.at_most("detect_collision", tag + " collision detected at t = 0", err, 1e-6);
  }
}

void closed_form_suite(Report& r) {
  Suite s(r, "closed-form");
  const std::vector<double> ss{0.25, 0.5, 1.0, 1.5, 2.0};

  double regimes = 0.0;
  regimes += classify(0.5).regime == Regime::Subcritical ? 0 : 1;
  regimes += classify(1.0).regime == Regime::Critical ? 0 : 1;
  regimes += classify(1.5).regime == Regime::Supercritical ? 0 : 1;
  regimes += std::abs(classify(1.5).C - 1.25) < 1e-15 ? 0 : 1;
  s.at_most("classify", "regimes and C for s in {0.5, 1, 1.5}", regimes, 0.0);

  double circ = 0.0, ident = 0.0, qpos = 0.0, ode = 0.0;
  for (double sv : ss) {
    const auto c = classify(sv);
    const double span = c.regime == Regime::Supercritical ? period(c) : 20.0;
    for (int k = 0; k < 1000; ++k) {
      const double t = -0.5 * span + span * (k + 0.5) / 1000.0;
      const auto p = eval_collision_centered(c, t);
      circ = std::max(circ, std::abs(circle_residual(p, sv)));
      ident = std::max(ident, std::abs(energy_identity_residual(p, sv)));
      qpos = std::max(qpos, p.q);
      if (k % 50 == 0 && std::abs(t) > 0.5) {
        const double h = 1e-4;
        const auto a = eval_collision_centered(c, t - h), b = eval_collision_centered(c, t + h);
        ode = std::max({ode, std::abs((b.q - a.q) / (2 * h) + p.p * std::expm1(p.q)),
                        std::abs((b.p - a.p) / (2 * h) - 0.5 * (p.p * p.p + c.C))});
      }
    }
  }
  s.at_most("circle_residual", "circle residual <= 1e-12", circ, 1e-12);
  s.at_most("eval_collision_centered", "energy identity <= 1e-10", ident, 1e-10);
  s.at_most("eval_collision_centered", "q <= 0", qpos, 0.0);
  s.at_most("eval_collision_centered", "finite differences satisfy the reduced ODE", ode, 1e-6);

  const auto sup = classify(1.5);
  const double T = period(sup);
  s.at_most("period", "T(s=1.5) = 2 pi / sqrt(1.25)", std::abs(T - 5.6198517848325811) / T, 1e-14);
  double per = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double t = -2.7 + 0.0537 * k;
    const auto a = eval_collision_centered(sup, t), b = eval_collision_centered(sup, t + T);
    per = std::max({per, std::abs(a.q - b.q), std::abs(a.u_peak - b.u_peak), std::abs(a.rho_bar_peak - b.rho_bar_peak)});
  }
  s.at_most("period", "periodicity of q, u, rho_bar", per, 1e-12);

  double gen = 0.0;
  for (double sv : {0.0, 0.5, 1.0, 1.5}) {
    const auto c = classify(sv);
    const auto p0 = eval_collision_centered(c, -1.3);
    const double ts = collision_time(c, p0.p, p0.q);
    for (int k = 0; k < 50; ++k) {
      const double t = -1.0 + 0.037 * k;
      const auto a = eval_general(c, p0.p, p0.q, t), b = eval_collision_centered(c, t - ts);
      gen = std::max({gen, std::abs(a.q - b.q), std::abs(a.u_peak - b.u_peak)});
    }
  }
  s.at_most("eval_general", "time-shifted general solution matches the centred one", gen, 1e-10);

  double lim = 0.0;
  for (double sv : {0.25, 0.5}) {
    const auto c = classify(sv);
    const auto as = asymptotics(c);
    const auto a = eval_collision_centered(c, 50.0), b = eval_collision_centered(c, -50.0);
    lim = std::max({lim, std::abs(a.u_peak - as.limits->u_peak_plus), std::abs(b.u_peak - as.limits->u_peak_minus),
                    std::abs(a.rho_bar_peak - as.limits->rho_bar_peak),
                    std::abs(a.u_peak * a.u_peak + a.rho_bar_peak * a.rho_bar_peak - 0.25),
                    std::abs(as.limits->u_peak_plus + 0.5 * c.p_inf)});
  }
  s.at_most("asymptotics", "limits at |t| = 50 on u^2 + rho_bar^2 = 1/4", lim, 1e-3);
}

struct LagrangianRun {
  double max_residual = 0.0, energy_drift = 0.0, r_drift = 0.0, r_bound = 0.0, min_dy = 0.0, dxi = 0.0;
};

LagrangianRun antisym_lagrangian(double s_val, double t0, double t1, Eigen::Index n, double dt) {
  const auto c = classify(s_val);
  const auto st = to_peakon_state(c, eval_collision_centered(c, t0));
  auto g = init_from_peakons(st, aligned_grid(st, n));
  LagrangianRun out;
  out.dxi = g.dxi;
  out.r_bound = 1e-8 + 10.0 * g.dxi * g.dxi;
  const double e0 = g.energy_integral();
  const Eigen::ArrayXd r0 = compute_r(g).r;
  const auto steps = static_cast<long>(std::lround((t1 - t0) / dt));
  for (long k = 0; k < steps; ++k) {
    g = step(g, dt);
    out.max_residual = std::max(out.max_residual, constraint_residual(g));
    out.energy_drift = std::max(out.energy_drift, std::abs(g.energy_integral() - e0) / e0);
    const Eigen::ArrayXd r = compute_r(g).r;
    for (Eigen::Index i = 2; i + 2 < g.size(); ++i) {
      const double x = g.xi(i);
      if (std::abs(x - st.q[0]) < 2.5 * g.dxi || std::abs(x - st.q[1]) < 2.5 * g.dxi) continue;
      out.r_drift = std::max(out.r_drift, std::abs(r[i] - r0[i]));
    }
    out.min_dy = std::min(out.min_dy, (g.y.tail(g.size() - 1) - g.y.head(g.size() - 1)).minCoeff());
  }
  return out;
}

double gaussian_invariant_drift(Eigen::Index n, double dt, double t_end) {
  InitialProfile pr{[](double x) { return 0.5 * std::exp(-x * x); },
                    [](double x) { return -x * std::exp(-x * x); },
                    [](double x) { return 0.4 * std::exp(-x * x); },
                    [](double x) { return -0.8 * x * std::exp(-x * x); }};
  auto g = init_from_profile(pr, GridSpec{-25.0, 25.0, n});
  const auto i0 = pointwise_invariant(g);
  const auto steps = static_cast<long>(std::lround(t_end / dt));
  for (long k = 0; k < steps; ++k) g = step(g, dt);
  const auto i1 = pointwise_invariant(g);
  double d = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (i0.valid[i] && i1.valid[i]) d = std::max(d, std::abs(i1.value[i] - i0.value[i]));
  return d;
}

void lagrangian_suite(Report& r) {
  Suite s(r, "lagrangian");
  std::mt19937_64 rng(4242);

  double kern = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index n = 256;
    std::uniform_real_distribution<double> inc(0.0, 0.2), w(-1.0, 1.0);
    Eigen::ArrayXd y(n), wt(n);
    y[0] = -10.0;
    for (Eigen::Index i = 1; i < n; ++i) y[i] = y[i - 1] + inc(rng);
    for (Eigen::Index i = 0; i < n; ++i) wt[i] = w(rng);
    const auto ks = kernel_convolve(y, wt, 0.1);
    for (Eigen::Index i = 0; i < n; ++i) {
      double sy = 0.0, as = 0.0, scale = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double e = std::exp(-std::abs(y[i] - y[j])) * wt[j] * 0.1;
        sy += e;
        as += (i > j ? 1.0 : i < j ? -1.0 : 0.0) * e;
        scale += std::abs(e);
      }
      kern = std::max({kern, std::abs(ks.sym[i] - sy) / scale, std::abs(ks.asym[i] - as) / scale});
    }
  }
  s.at_most("kernel_convolve", "O(N) sweeps match direct summation (N=256)", kern, 1e-13);

  const auto c = classify(0.5);
  const auto st = to_peakon_state(c, eval_collision_centered(c, -1.0));
  const auto g0 = init_from_peakons(st, aligned_grid(st, 1024));
  s.at_most("init_from_peakons", "initial constraint residual", constraint_residual(g0), 1e-12);

  const auto ib = compute_integrals(g0);
  double pq = 0.0;
  for (Eigen::Index i = 0; i < g0.size(); i += 37) {
    double P = 0.0, Q = 0.0;
    for (Eigen::Index j = 0; j < g0.size(); ++j) {
      const double w = 0.25 * (g0.H_xi[j] + (g0.U[j] * g0.U[j] - 2.0 * g0.sbar[j] * g0.sbar[j]) * g0.y_xi[j]);
      const double e = std::exp(-std::abs(g0.y[i] - g0.y[j])) * w * g0.dxi;
      P += e;
      Q -= (i > j ? 1.0 : i < j ? -1.0 : 0.0) * e;
    }
    pq = std::max({pq, std::abs(ib.P[i] - P), std::abs(ib.Q[i] - Q)});
  }
  s.at_most("compute_integrals", "P, Q match direct quadrature", pq, 1e-12);

  const auto d = rhs(g0);
  s.at_most("rhs", "y_t = U and H_t(xi_min) = 0", std::max((d.y - g0.U).abs().maxCoeff(), std::abs(d.H[0])), 0.0);

  Eigen::ArrayXd xs = Eigen::ArrayXd::LinSpaced(201, -5.0, 5.0);
  const auto ef = to_eulerian(g0, xs);
  double eu = 0.0;
  for (Eigen::Index i = 0; i < xs.size(); ++i)
    eu = std::max({eu, std::abs(ef.u[i] - eval_u(st, xs[i])), std::abs(ef.rho_bar[i] - eval_rho_bar(st, xs[i]))});
  s.at_most("to_eulerian", "read-back of the initial peakons within dxi", eu, g0.dxi);

  const auto run = antisym_lagrangian(0.5, -1.0, 1.0, 1024, 2e-3);
  s.at_most("step", "energy H(xi_max) drift across the collision", run.energy_drift, 1e-6);
  s.at_least("step", "y stays nondecreasing", run.min_dy, -1e-9);
  s.at_most("constraint_residual", "constraint residual < 1e-6 across the collision", run.max_residual, 1e-6);
  s.at_most("compute_r", "off-peak |r(t) - r(0)| <= 1e-8 + 10 dxi^2", run.r_drift, run.r_bound);

  const double d1 = gaussian_invariant_drift(251, 0.04, 0.5);
  const double d2 = gaussian_invariant_drift(501, 0.02, 0.5);
  s.at_least("pointwise_invariant", "invariant drift order under refinement", std::log2(d1 / d2), 1.8);
}

std::filesystem::path scratch_dir() {
  return std::filesystem::temp_directory_path() / ("m2ch-verify-" + std::to_string(::getpid()));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void cli_suite(Report& r) {
  Suite s(r, "all");
  double bad = 0.0;
  try {
    const auto sc = parse_scenario("[scenario]\nkind = peakons\nt0 = 0\nt1 = 2\n[peakons]\nq = 0\np = 1\n");
    bad += sc.kind == ScenarioKind::Peakons && sc.peakons && sc.peakons->size() == 1 ? 0 : 1;
  } catch (const ScenarioError&) {
    bad += 1;
  }
  double residual_err = 1.0;
  try {
    // (p0^2 + s^2)(1 - e^q0) = 2.5 * 0.44 = 1.1
    parse_scenario("[scenario]\nkind = closed-form\n[antisym]\ns = 1.5\np0 = 0.5\nq0 = -0.579818495252942\n");
    bad += 1;
  } catch (const ScenarioError& e) {
    residual_err = e.residual() ? std::abs(*e.residual() - 0.1) : 1.0;
  }
  s.at_most("parse_scenario", "minimal single-peakon config parses", bad, 0.0);
  s.at_most("parse_scenario", "normalisation error carries the residual 0.1", residual_err, 1e-12);

  const auto dir = scratch_dir();
  const auto sc = parse_scenario("[scenario]\nkind = peakons\nt0 = 0\nt1 = 2\n[peakons]\nq = 0\np = 1\n");
  const auto res1 = run(sc, dir / "a");
  const auto res2 = run(sc, dir / "b");
  std::istringstream traj(slurp(dir / "a" / "trajectory.csv"));
  std::string line, last;
  while (std::getline(traj, line))
    if (!line.empty()) last = line;
  double q2 = std::nan("");
  if (auto comma = last.find(','); comma != std::string::npos) {
    const auto t = std::stod(last.substr(0, comma));
    if (t == 2.0) q2 = std::stod(last.substr(comma + 1));
  }
  s.at_most("run", "free single peakon reaches q(2) = 2", std::abs(q2 - 2.0), 1e-8);
  double diff = res1.files.size() == res2.files.size() && !res1.aborted ? 0.0 : 1.0;
  for (const auto& f : res1.files)
    diff += slurp(f) == slurp(dir / "b" / f.filename()) ? 0.0 : 1.0;
  s.at_most("run", "repeated run gives byte-identical CSVs", diff, 0.0);
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);

  const auto empty = verify(std::vector<std::string>{});
  s.at_most("verify", "empty suite list gives zero entries and success",
            empty.entries.empty() && empty.ok() ? 0.0 : 1.0, 0.0);
}

}  // namespace

Report verify(const std::vector<std::string>& suites) {
  Report r;
  for (const auto& name : suites) {
    if (name == "core") core_suite(r);
    else if (name == "dynamics") dynamics_suite(r);
    else if (name == "closed-form") closed_form_suite(r);
    else if (name == "lagrangian") lagrangian_suite(r);
    else if (name == "all") {
      core_suite(r);
      dynamics_suite(r);
      closed_form_suite(r);
      lagrangian_suite(r);
      cli_suite(r);
    } else {
      throw std::invalid_argument("unknown suite '" + name + "'");
    }
  }
  return r;
}

Report verify(std::string_view suite) { return verify(std::vector<std::string>{std::string(suite)}); }

}  // namespace m2ch
