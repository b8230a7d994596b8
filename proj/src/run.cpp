#include "m2ch/run.hpp"

#include "m2ch/csv.hpp"
#include "m2ch/lagrangian.hpp"
#include "m2ch/peakon_dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace m2ch {

namespace fs = std::filesystem;

std::string time_tag(double t) {
  if (t == 0.0) t = 0.0;  // drop the sign of -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), t);
  return std::string(buf, res.ptr);
}

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

bool within(double t, double a, double b) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  return t >= lo - 1e-12 * std::max(1.0, std::abs(lo)) && t <= hi + 1e-12 * std::max(1.0, std::abs(hi));
}

/// t0 + k * sample_dt toward t1, the requested extra times inside the window, and t1.
std::vector<double> output_times(double t0, double t1, double sample_dt, const std::vector<double>& extra) {
  std::vector<double> ts;
  const double dir = t1 >= t0 ? 1.0 : -1.0;
  const auto n = static_cast<long>(std::floor(std::abs(t1 - t0) / sample_dt + 1e-9));
  for (long k = 0; k <= n; ++k) ts.push_back(t0 + dir * static_cast<double>(k) * sample_dt);
  for (double t : extra)
    if (within(t, t0, t1)) ts.push_back(t);
  ts.push_back(t1);
  std::sort(ts.begin(), ts.end(), [dir](double a, double b) { return dir * a < dir * b; });
  std::vector<double> out;
  for (double t : ts) {
    if (!out.empty() && same_time(t, out.back())) {
      if (same_time(t, t1)) out.back() = t1;
      continue;
    }
    out.push_back(t);
  }
  return out;
}

Eigen::ArrayXd x_grid(const OutputSettings& o) {
  return Eigen::ArrayXd::LinSpaced(o.nx, o.x_min, o.x_max);
}

std::vector<std::string> indexed(const std::string& name, long n) {
  std::vector<std::string> out;
  for (long i = 1; i <= n; ++i) out.push_back(name + "_" + std::to_string(i));
  return out;
}

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

const std::vector<std::string> kInvariantHeader{"t", "energy_drift", "constraint_residual", "max_r_drift",
                                                "invariant_drift"};
const std::vector<std::string> kCircleHeader{"t", "u_dagger", "rho_bar_dagger"};
const std::vector<std::string> kEulerianHeader{"x", "u", "rho_bar", "rho_bar_x"};

void write_eulerian(RunResult& res, const fs::path& dir, double t, const Eigen::ArrayXd& x,
                    const Eigen::ArrayXd& u, const Eigen::ArrayXd& rb, const Eigen::ArrayXd& rbx) {
  CsvWriter w(dir / ("eulerian_" + time_tag(t) + ".csv"), kEulerianHeader);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    w << x[i] << u[i] << rb[i] << rbx[i];
    w.end_row();
  }
  res.files.push_back(w.path());
}

void write_events(RunResult& res, const fs::path& dir) {
  CsvWriter w(dir / "events.csv", {"t", "kind", "left", "right", "gap", "reason"});
  for (const auto& e : res.events) {
    w << e.t << e.kind;
    if (e.left >= 0) w << static_cast<double>(e.left + 1) << static_cast<double>(e.left + 2);
    else w.empty().empty();
    w << e.gap << e.reason;
    w.end_row();
  }
  res.files.push_back(w.path());
}

void abort_with(RunResult& res, double t, const std::string& reason) {
  res.aborted = true;
  res.abort_reason = reason;
  res.events.push_back({t, "abort", -1, 0.0, reason});
}

// ---- lagrangian ----------------------------------------------------------------

struct LagrangianStart {
  LagrangianGrid grid;
  std::vector<double> labels;  // peak labels (identity flow at t0)
  bool peaked = false;
};

LagrangianStart start_from_peakons(const PeakonState& st, const SolverSettings& so) {
  LagrangianStart s;
  s.grid = init_from_peakons(st, aligned_grid(st, so.n, so.margin));
  s.labels.assign(st.q.data(), st.q.data() + st.size());
  s.peaked = true;
  return s;
}

LagrangianStart start_from_gaussian(const GaussianData& g, const SolverSettings& so, double t0) {
  const double c = g.center, au = g.u_amplitude, wu = g.u_width, ar = g.rho_amplitude, wr = g.rho_width;
  InitialProfile pr;
  pr.u = [=](double x) { return au * std::exp(-std::pow((x - c) / wu, 2)); };
  pr.u_x = [=](double x) { return -2.0 * (x - c) / (wu * wu) * au * std::exp(-std::pow((x - c) / wu, 2)); };
  pr.rho_bar = [=](double x) { return ar * std::exp(-std::pow((x - c) / wr, 2)); };
  pr.rho_bar_x = [=](double x) { return -2.0 * (x - c) / (wr * wr) * ar * std::exp(-std::pow((x - c) / wr, 2)); };
  const double half = so.margin + 5.0 * std::max(wu, wr);
  LagrangianStart s;
  s.grid = init_from_profile(pr, GridSpec{c - half, c + half, so.n}, t0);
  s.labels = {c};
  return s;
}

void run_lagrangian(const Scenario& sc, LagrangianStart start, double t0, bool circle, const fs::path& dir,
                    RunResult& res) {
  fs::create_directories(dir);
  const auto& so = sc.solver;
  const auto& out = sc.output;
  LagrangianGrid g = std::move(start.grid);
  g.t = t0;
  const auto& labels = start.labels;
  const long np = static_cast<long>(labels.size());
  const Eigen::Index n = g.size();

  const double e0 = g.energy_integral();
  const Eigen::ArrayXd r0 = compute_r(g).r;
  const MaskedField inv0 = pointwise_invariant(g, so.mask_eps);
  Eigen::Array<bool, Eigen::Dynamic, 1> off_peak = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true);
  off_peak.head(std::min<Eigen::Index>(2, n)) = false;
  off_peak.tail(std::min<Eigen::Index>(2, n)) = false;
  if (start.peaked)
    for (Eigen::Index i = 0; i < n; ++i)
      for (double l : labels)
        if (std::abs(g.xi(i) - l) < 2.5 * g.dxi) off_peak[i] = false;

  const Eigen::ArrayXd xs = x_grid(out);
  std::optional<CsvWriter> traj, invw, circ;
  if (out.trajectory)
    traj.emplace(dir / "trajectory.csv",
                 concat({{"t"}, indexed("y", np), indexed("u", np), indexed("rho_bar", np), {"E"}}));
  if (out.invariants) invw.emplace(dir / "invariants.csv", kInvariantHeader);
  if (circle) circ.emplace(dir / "circle.csv", kCircleHeader);

  auto emit = [&](const LagrangianGrid& gr) {
    std::vector<LabelSample> ls;
    for (double l : labels) ls.push_back(sample_label(gr, l));
    if (traj) {
      *traj << gr.t;
      for (const auto& s : ls) *traj << s.y;
      for (const auto& s : ls) *traj << s.U;
      for (const auto& s : ls) *traj << s.rbar;
      *traj << 0.5 * gr.energy_integral();
      traj->end_row();
    }
    if (invw) {
      const Eigen::ArrayXd r = compute_r(gr).r;
      double rd = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (off_peak[i]) rd = std::max(rd, std::abs(r[i] - r0[i]));
      const MaskedField inv = pointwise_invariant(gr, so.mask_eps);
      double id = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        if (inv.valid[i] && inv0.valid[i]) id = std::max(id, std::abs(inv.value[i] - inv0.value[i]));
      const double ed = e0 != 0.0 ? std::abs(gr.energy_integral() - e0) / std::abs(e0) : std::abs(gr.energy_integral());
      *invw << gr.t << ed << constraint_residual(gr) << rd << id;
      invw->end_row();
    }
    if (circ) {
      *circ << gr.t << ls.front().U << ls.front().rbar;
      circ->end_row();
    }
    for (double te : out.eulerian_times)
      if (same_time(gr.t, te)) {
        const EulerianField f = to_eulerian(gr, xs);
        write_eulerian(res, dir, te, xs, f.u, f.rho_bar, f.rho_bar_x);
      }
  };

  // Collisions: parabola through a discrete local minimum of a label gap.
  const double gap_tol = std::max(so.gap_threshold, 10.0 * g.dxi * g.dxi);
  std::vector<std::array<double, 3>> gap_hist(static_cast<std::size_t>(std::max(0L, np - 1)));
  std::array<double, 3> t_hist{};
  int filled = 0;
  auto track = [&](const LagrangianGrid& gr) {
    if (np < 2) return;
    t_hist = {t_hist[1], t_hist[2], gr.t};
    for (long k = 0; k + 1 < np; ++k) {
      // Nodes just inside the pair; the whole interval between colliding peaks collapses.
      const double a = labels[static_cast<std::size_t>(k)], b = labels[static_cast<std::size_t>(k + 1)];
      const auto i1 = static_cast<Eigen::Index>(std::floor((a - gr.xi_min) / gr.dxi)) + 1;
      const auto i2 = static_cast<Eigen::Index>(std::ceil((b - gr.xi_min) / gr.dxi)) - 1;
      const double gap = i2 > i1 && i1 >= 0 && i2 < n ? gr.y[i2] - gr.y[i1]
                                                       : sample_label(gr, b).y - sample_label(gr, a).y;
      auto& h = gap_hist[static_cast<std::size_t>(k)];
      h = {h[1], h[2], gap};
    }
    filled = std::min(filled + 1, 3);
    if (filled < 3) return;
    for (long k = 0; k + 1 < np; ++k) {
      const auto& h = gap_hist[static_cast<std::size_t>(k)];
      if (!(h[1] <= h[0] && h[1] < h[2] && h[1] < gap_tol)) continue;
      const double ta = t_hist[0], tb = t_hist[1], tc = t_hist[2];
      const double den = (ta - tb) * (ta - tc) * (tb - tc);
      const double A = (tc * (h[1] - h[0]) + tb * (h[0] - h[2]) + ta * (h[2] - h[1])) / den;
      const double B = (tc * tc * (h[0] - h[1]) + tb * tb * (h[2] - h[0]) + ta * ta * (h[1] - h[2])) / den;
      double ts = tb, gs = h[1];
      if (A > 0.0) {
        ts = -B / (2.0 * A);
        const double Cc = h[1] - A * tb * tb - B * tb;
        gs = A * ts * ts + B * ts + Cc;
      }
      res.events.push_back({ts, "collision", k, gs, "label gap minimum"});
    }
  };

  const auto times = output_times(t0, sc.t1, out.sample_dt, out.eulerian_times);
  emit(g);
  track(g);
  try {
    for (std::size_t k = 1; k < times.size(); ++k) {
      const double span = times[k] - times[k - 1];
      const auto steps = std::max(1L, static_cast<long>(std::ceil(std::abs(span) / so.dt - 1e-9)));
      const double h = span / static_cast<double>(steps);
      for (long j = 0; j < steps; ++j) {
        g = step(g, h);
        if (j + 1 == steps) g.t = times[k];
        track(g);
      }
      emit(g);
    }
  } catch (const SolverAbort& e) {
    abort_with(res, e.last_valid().t, e.what());
  }

  for (double te : out.eulerian_times)
    if (within(te, t0, sc.t1) && !fs::exists(dir / ("eulerian_" + time_tag(te) + ".csv")))
      res.events.push_back({te, "skipped", -1, 0.0, "eulerian snapshot not reached"});
  if (traj) res.files.push_back(traj->path());
  if (invw) res.files.push_back(invw->path());
  if (circ) res.files.push_back(circ->path());
}

// ---- peakons -------------------------------------------------------------------

IntegrateOptions integrate_options(const Scenario& sc) {
  IntegrateOptions o;
  o.rel_tol = sc.solver.rel_tol;
  o.abs_tol = sc.solver.abs_tol;
  o.max_step = sc.solver.max_step;
  o.gap_threshold = sc.solver.gap_threshold;
  o.sample_dt = sc.output.sample_dt;
  for (double t : sc.output.eulerian_times)
    if (within(t, sc.t0, sc.t1)) o.extra_times.push_back(t);
  return o;
}

void run_peakons(const Scenario& sc, const fs::path& dir, RunResult& res) {
  const PeakonState st = initial_peakons(sc);
  const long np = static_cast<long>(st.size());
  const auto opts = integrate_options(sc);
  TrajectoryRecord rec;
  try {
    rec = integrate(st, sc.t1, opts);
  } catch (const std::exception& e) {
    abort_with(res, st.t, e.what());
    return;
  }

  if (sc.output.trajectory) {
    CsvWriter w(dir / "trajectory.csv", concat({{"t"}, indexed("q", np), indexed("p", np), indexed("s", np), {"E"}}));
    for (std::size_t k = 0; k < rec.states.size(); ++k) {
      const auto& s = rec.states[k];
      w << s.t;
      for (double v : s.q) w << v;
      for (double v : s.p) w << v;
      for (double v : s.s) w << v;
      w << rec.energy[k];
      w.end_row();
    }
    res.files.push_back(w.path());
  }
  if (sc.output.invariants) {
    CsvWriter w(dir / "invariants.csv", kInvariantHeader);
    const double e0 = rec.energy.front();
    for (std::size_t k = 0; k < rec.states.size(); ++k) {
      const double d = e0 != 0.0 ? std::abs(rec.energy[k] - e0) / std::abs(e0) : std::abs(rec.energy[k]);
      w << rec.states[k].t << d;
      w.empty().empty().empty();
      w.end_row();
    }
    res.files.push_back(w.path());
  }
  if (sc.antisym && sc.output.circle) {
    CsvWriter w(dir / "circle.csv", kCircleHeader);
    for (const auto& s : rec.states) {
      w << s.t << eval_u(s, s.q[0]) << eval_rho_bar(s, s.q[0]);
      w.end_row();
    }
    res.files.push_back(w.path());
  }

  const Eigen::ArrayXd xs = x_grid(sc.output);
  std::vector<double> written;
  for (double te : opts.extra_times) {
    for (const auto& s : rec.states) {
      if (!same_time(s.t, te)) continue;
      Eigen::ArrayXd u(xs.size()), rb(xs.size()), rbx(xs.size());
      for (Eigen::Index i = 0; i < xs.size(); ++i) {
        const auto e = sample(s, xs[i]);
        u[i] = e.u;
        rb[i] = e.rho_bar;
        rbx[i] = e.rho_bar_x;
      }
      write_eulerian(res, dir, te, xs, u, rb, rbx);
      written.push_back(te);
      break;
    }
  }

  if (rec.collision) {
    const auto& c = *rec.collision;
    res.events.push_back({c.time, "collision", c.left, c.gap,
                          c.step_underflow ? "step size underflow with closing gap" : "gap below threshold"});
  }

  const bool handoff = rec.collision && sc.continue_lagrangian;
  if (handoff) {
    const double dir_t = sc.t1 >= sc.t0 ? 1.0 : -1.0;
    double th = rec.collision->time - dir_t * sc.solver.handoff_lead;
    if ((th - st.t) * dir_t < 0.0) th = st.t;
    IntegrateOptions o2 = opts;
    o2.extra_times.clear();
    o2.sample_dt = std::abs(sc.t1 - sc.t0) + 1.0;
    PeakonState hs = st;
    try {
      hs = integrate(st, th, o2).states.back();
    } catch (const std::exception& e) {
      abort_with(res, st.t, e.what());
      return;
    }
    res.events.push_back({hs.t, "handoff", -1, 0.0, "lagrangian continuation in continuation/"});
    Scenario sub = sc;
    sub.kind = ScenarioKind::Lagrangian;
    sub.t0 = hs.t;
    sub.continue_lagrangian = false;
    sub.output.eulerian_times.clear();
    for (double te : sc.output.eulerian_times)
      if (within(te, hs.t, sc.t1)) sub.output.eulerian_times.push_back(te);
    RunResult cont;
    try {
      run_lagrangian(sub, start_from_peakons(hs, sc.solver), hs.t, sc.antisym && sc.output.circle,
                     dir / "continuation", cont);
    } catch (const std::invalid_argument& e) {
      abort_with(res, hs.t, e.what());
      return;
    }
    fs::create_directories(dir / "continuation");
    write_events(cont, dir / "continuation");
    res.files.insert(res.files.end(), cont.files.begin(), cont.files.end());
    if (cont.aborted) {
      res.aborted = true;
      res.abort_reason = cont.abort_reason;
    }
    for (double te : opts.extra_times)
      if (std::find(written.begin(), written.end(), te) == written.end() && !within(te, hs.t, sc.t1))
        res.events.push_back({te, "skipped", -1, 0.0, "eulerian snapshot after collision"});
  } else {
    for (double te : opts.extra_times)
      if (std::find(written.begin(), written.end(), te) == written.end())
        res.events.push_back({te, "skipped", -1, 0.0, "eulerian snapshot after collision"});
  }
}

// ---- closed form ----------------------------------------------------------------

void run_closed_form(const Scenario& sc, const fs::path& dir, RunResult& res) {
  const AntisymData& a = *sc.antisym;
  const AntisymCase c = classify(a.s);
  auto at = [&](double t) {
    AntisymPoint p = a.centered ? eval_collision_centered(c, t) : eval_general(c, a.p0, a.q0, t - sc.t0);
    p.t = t;
    return p;
  };
  const auto times = output_times(sc.t0, sc.t1, sc.output.sample_dt, sc.output.eulerian_times);
  std::vector<AntisymPoint> pts;
  for (double t : times) pts.push_back(at(t));

  if (sc.output.trajectory) {
    CsvWriter w(dir / "trajectory.csv", {"t", "q_1", "q_2", "p_1", "p_2", "s_1", "s_2", "E"});
    for (const auto& p : pts) {
      w << p.t << 0.5 * p.q << -0.5 * p.q << 0.5 * p.p << -0.5 * p.p << 0.5 * c.s << -0.5 * c.s << c.energy;
      w.end_row();
    }
    res.files.push_back(w.path());
  }
  if (sc.output.invariants) {
    CsvWriter w(dir / "invariants.csv", kInvariantHeader);
    for (const auto& p : pts) {
      w << p.t << std::abs(energy_identity_residual(p, c.s));
      w.empty().empty().empty();
      w.end_row();
    }
    res.files.push_back(w.path());
  }
  if (sc.output.circle) {
    CsvWriter w(dir / "circle.csv", kCircleHeader);
    for (const auto& p : pts) {
      w << p.t << p.u_peak << p.rho_bar_peak;
      w.end_row();
    }
    res.files.push_back(w.path());
  }

  const Eigen::ArrayXd xs = x_grid(sc.output);
  for (double te : sc.output.eulerian_times) {
    if (!within(te, sc.t0, sc.t1)) continue;
    const AntisymPoint p = at(te);
    if (p.p_infinite) {
      res.events.push_back({te, "skipped", -1, 0.0, "eulerian snapshot at a collision instant"});
      continue;
    }
    const PeakonState s = to_peakon_state(c, p);
    Eigen::ArrayXd u(xs.size()), rb(xs.size()), rbx(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
      const auto e = sample(s, xs[i]);
      u[i] = e.u;
      rb[i] = e.rho_bar;
      rbx[i] = e.rho_bar_x;
    }
    write_eulerian(res, dir, te, xs, u, rb, rbx);
  }

  // Collision instants inside the window.
  const double lo = std::min(sc.t0, sc.t1), hi = std::max(sc.t0, sc.t1);
  const double base = a.centered ? 0.0 : sc.t0 + collision_time(c, a.p0, a.q0);
  std::vector<double> hits;
  if (c.regime == Regime::Supercritical) {
    const double T = period(c);
    for (double k = std::ceil((lo - base) / T); base + k * T <= hi; k += 1.0) hits.push_back(base + k * T);
  } else if (within(base, lo, hi)) {
    hits.push_back(base);
  }
  if (sc.t1 < sc.t0) std::reverse(hits.begin(), hits.end());
  for (double t : hits) res.events.push_back({t, "collision", 0, 0.0, "closed form"});
}

}  // namespace

RunResult run(const Scenario& sc, const fs::path& out_dir) {
  RunResult res;
  fs::create_directories(out_dir);
  try {
    switch (sc.kind) {
      case ScenarioKind::Peakons:
        run_peakons(sc, out_dir, res);
        break;
      case ScenarioKind::ClosedForm:
        run_closed_form(sc, out_dir, res);
        break;
      case ScenarioKind::Lagrangian: {
        LagrangianStart start = sc.gaussian ? start_from_gaussian(*sc.gaussian, sc.solver, sc.t0)
                                            : start_from_peakons(initial_peakons(sc), sc.solver);
        run_lagrangian(sc, std::move(start), sc.t0, sc.antisym && sc.output.circle, out_dir, res);
        break;
      }
    }
  } catch (const std::invalid_argument& e) {
    abort_with(res, sc.t0, e.what());
  } catch (const std::domain_error& e) {
    abort_with(res, sc.t0, e.what());
  }
  write_events(res, out_dir);
  return res;
}

}  // namespace m2ch
