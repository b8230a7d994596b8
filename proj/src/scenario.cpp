#include "m2ch/scenario.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace m2ch {

namespace pt = boost::property_tree;

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Peakons: return "peakons";
    case ScenarioKind::Lagrangian: return "lagrangian";
    case ScenarioKind::ClosedForm: return "closed-form";
  }
  return "unknown";
}

ScenarioError::ScenarioError(std::string key, const std::string& message, std::optional<double> residual)
    : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)), residual_(residual) {}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"scenario", {"kind", "t0", "t1", "continue"}},
      {"peakons", {"q", "p", "s"}},
      {"antisym", {"s", "centered", "p0", "q0", "rescale"}},
      {"gaussian", {"u_amplitude", "u_width", "rho_amplitude", "rho_width", "center"}},
      {"solver", {"rel_tol", "abs_tol", "max_step", "gap_threshold", "n", "dt", "margin", "mask_eps", "handoff_lead"}},
      {"output", {"sample_dt", "trajectory", "invariants", "circle", "eulerian_times", "x_min", "x_max", "nx"}},
  };
  return s;
}

std::string trim(std::string_view v) {
  const auto b = v.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = v.find_last_not_of(" \t\r");
  return std::string(v.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ScenarioError(key, "expected a finite number, got '" + v + "'");
  return out;
}

long to_long(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
    throw ScenarioError(key, "expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& raw) {
  std::string v = trim(raw);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ScenarioError(key, "expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  const std::string v = trim(raw);
  if (v.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(to_double(key, v.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

class Section {
 public:
  Section(std::string name, const pt::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool present() const { return tree_ != nullptr; }
  std::string key(const std::string& k) const { return name_ + "." + k; }

  std::optional<std::string> raw(const std::string& k) const {
    if (!tree_) return std::nullopt;
    if (auto v = tree_->get_optional<std::string>(pt::ptree::path_type(k, '\0'))) return *v;
    return std::nullopt;
  }

  template <typename T>
  void read(const std::string& k, T& target) const {
    if (auto v = raw(k)) {
      if constexpr (std::is_same_v<T, double>) target = to_double(key(k), *v);
      else if constexpr (std::is_same_v<T, long>) target = to_long(key(k), *v);
      else if constexpr (std::is_same_v<T, bool>) target = to_bool(key(k), *v);
      else if constexpr (std::is_same_v<T, std::vector<double>>) target = to_list(key(k), *v);
    }
  }

  double required_double(const std::string& k) const {
    auto v = raw(k);
    if (!v) throw ScenarioError(key(k), "required key is missing");
    return to_double(key(k), *v);
  }

 private:
  std::string name_;
  const pt::ptree* tree_;
};

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ScenarioError(key, message);
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ScenarioError("", std::string("malformed document: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  for (const auto& [name, sub] : tree) {
    const auto it = schema().find(name);
    if (it == schema().end()) {
      if (sub.empty()) throw ScenarioError(name, "keys must belong to a section");
      throw ScenarioError(name, "unknown section");
    }
    for (const auto& [k, v] : sub) {
      if (!it->second.count(k)) throw ScenarioError(name + "." + k, "unknown key");
      (void)v;
    }
  }

  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
    return Section(name, child ? &*child : nullptr);
  };
  const Section sc = section("scenario"), pk = section("peakons"), as = section("antisym"),
                ga = section("gaussian"), so = section("solver"), out = section("output");

  Scenario s;
  require(sc.present(), "scenario", "section is required");
  const auto kind = sc.raw("kind");
  require(kind.has_value(), "scenario.kind", "required key is missing");
  const std::string k = trim(*kind);
  if (k == "peakons") s.kind = ScenarioKind::Peakons;
  else if (k == "lagrangian") s.kind = ScenarioKind::Lagrangian;
  else if (k == "closed-form") s.kind = ScenarioKind::ClosedForm;
  else throw ScenarioError("scenario.kind", "expected peakons, lagrangian or closed-form, got '" + k + "'");
  sc.read("t0", s.t0);
  sc.read("t1", s.t1);
  if (auto c = sc.raw("continue")) {
    const std::string v = trim(*c);
    require(v == "none" || v == "lagrangian", "scenario.continue", "expected none or lagrangian");
    s.continue_lagrangian = v == "lagrangian";
    require(!s.continue_lagrangian || s.kind == ScenarioKind::Peakons, "scenario.continue",
            "continuation applies to kind = peakons only");
  }

  so.read("rel_tol", s.solver.rel_tol);
  so.read("abs_tol", s.solver.abs_tol);
  so.read("max_step", s.solver.max_step);
  so.read("gap_threshold", s.solver.gap_threshold);
  so.read("n", s.solver.n);
  so.read("dt", s.solver.dt);
  so.read("margin", s.solver.margin);
  so.read("mask_eps", s.solver.mask_eps);
  so.read("handoff_lead", s.solver.handoff_lead);
  require(s.solver.rel_tol > 0, "solver.rel_tol", "must be positive");
  require(s.solver.abs_tol >= 0, "solver.abs_tol", "must be non-negative");
  require(s.solver.max_step > 0, "solver.max_step", "must be positive");
  require(s.solver.gap_threshold > 0, "solver.gap_threshold", "must be positive");
  require(s.solver.n >= 8, "solver.n", "must be at least 8");
  require(s.solver.dt > 0, "solver.dt", "must be positive");
  require(s.solver.margin > 0, "solver.margin", "must be positive");
  require(s.solver.mask_eps > 0, "solver.mask_eps", "must be positive");
  require(s.solver.handoff_lead >= 0, "solver.handoff_lead", "must be non-negative");

  out.read("sample_dt", s.output.sample_dt);
  out.read("trajectory", s.output.trajectory);
  out.read("invariants", s.output.invariants);
  out.read("circle", s.output.circle);
  out.read("eulerian_times", s.output.eulerian_times);
  out.read("x_min", s.output.x_min);
  out.read("x_max", s.output.x_max);
  out.read("nx", s.output.nx);
  require(s.output.sample_dt > 0, "output.sample_dt", "must be positive");
  require(s.output.nx >= 2, "output.nx", "must be at least 2");
  require(s.output.x_max > s.output.x_min, "output.x_max", "must exceed output.x_min");

  const int sources = int(pk.present()) + int(as.present()) + int(ga.present());
  require(sources == 1, "scenario", "exactly one of [peakons], [antisym], [gaussian] must be given");

  if (pk.present()) {
    require(s.kind != ScenarioKind::ClosedForm, "peakons", "closed-form scenarios need [antisym] data");
    std::vector<double> q, p, sv;
    pk.read("q", q);
    pk.read("p", p);
    pk.read("s", sv);
    require(pk.raw("q").has_value(), "peakons.q", "required key is missing");
    require(pk.raw("p").has_value(), "peakons.p", "required key is missing");
    if (!pk.raw("s")) sv.assign(q.size(), 0.0);
    require(p.size() == q.size(), "peakons.p", "must have as many entries as peakons.q");
    require(sv.size() == q.size(), "peakons.s", "must have as many entries as peakons.q");
    const auto n = static_cast<Eigen::Index>(q.size());
    try {
      s.peakons = make_peakon_state<double>(Eigen::Map<Eigen::VectorXd>(q.data(), n),
                                            Eigen::Map<Eigen::VectorXd>(p.data(), n),
                                            Eigen::Map<Eigen::VectorXd>(sv.data(), n), s.t0);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError("peakons.q", e.what());
    }
  }

  if (ga.present()) {
    require(s.kind == ScenarioKind::Lagrangian, "gaussian", "smooth data is supported by kind = lagrangian only");
    GaussianData g;
    ga.read("u_amplitude", g.u_amplitude);
    ga.read("u_width", g.u_width);
    ga.read("rho_amplitude", g.rho_amplitude);
    ga.read("rho_width", g.rho_width);
    ga.read("center", g.center);
    require(g.u_width > 0, "gaussian.u_width", "must be positive");
    require(g.rho_width > 0, "gaussian.rho_width", "must be positive");
    s.gaussian = g;
  }

  if (as.present()) {
    AntisymData a;
    a.s = as.required_double("s");
    require(a.s >= 0, "antisym.s", "must be non-negative (use rhob -> -rhob symmetry)");
    const bool has_p0 = as.raw("p0").has_value(), has_q0 = as.raw("q0").has_value();
    a.centered = !(has_p0 || has_q0);
    as.read("centered", a.centered);
    bool rescale = false;
    as.read("rescale", rescale);
    if (a.centered) {
      require(!has_p0 && !has_q0, "antisym.centered", "collision-centred data cannot also give p0/q0");
      require(s.kind == ScenarioKind::ClosedForm || s.t0 != 0.0, "scenario.t0",
              "collision-centred peakon data cannot start at the collision t0 = 0");
    } else {
      a.p0 = as.required_double("p0");
      a.q0 = as.required_double("q0");
      require(a.q0 < 0, "antisym.q0", "must be negative (q = q1 - q2)");
      const double res = normalization_residual(a.s, a.p0, a.q0);
      if (std::abs(res) > 1e-12) {
        if (!rescale) {
          std::ostringstream msg;
          msg << "energy normalisation (p0^2 + s^2)(1 - e^q0) = 1 violated by " << res
              << "; set rescale = true to apply the scaling symmetry";
          throw ScenarioError("antisym", msg.str(), res);
        }
        // u -> alpha u, rhob -> alpha rhob, t -> t / alpha maps the data to E = 1/2.
        a.alpha = 1.0 / std::sqrt(1.0 + res);
        a.s *= a.alpha;
        a.p0 *= a.alpha;
        s.t0 /= a.alpha;
        s.t1 /= a.alpha;
        s.output.sample_dt /= a.alpha;
        for (double& t : s.output.eulerian_times) t /= a.alpha;
        if (s.peakons) s.peakons->t = s.t0;
      }
    }
    if (s.kind == ScenarioKind::Peakons || s.kind == ScenarioKind::Lagrangian) {
      if (a.centered && classify(a.s).regime == Regime::Supercritical) {
        const double ph = s.t0 / period(classify(a.s));
        require(std::abs(ph - std::round(ph)) > 1e-12, "scenario.t0", "collision-centred data starts at a collision");
      }
    }
    s.antisym = a;
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("", "cannot read scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

PeakonState initial_peakons(const Scenario& sc) {
  if (sc.peakons) {
    PeakonState st = *sc.peakons;
    st.t = sc.t0;
    return st;
  }
  if (!sc.antisym) throw std::invalid_argument("initial_peakons: scenario has no peakon data");
  const auto& a = *sc.antisym;
  const auto c = classify(a.s);
  AntisymPoint pt = a.centered ? eval_collision_centered(c, sc.t0) : eval_general(c, a.p0, a.q0, 0.0);
  pt.t = sc.t0;
  return to_peakon_state(c, pt);
}

}  // namespace m2ch
