#pragma once

// Run configuration. The on-disk format is a flat INI document (sections of
// key = value lines, ';' or '#' comments); see README.md for the full key list.

#include "m2ch/closed_form.hpp"
#include "m2ch/peakon.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace m2ch {

enum class ScenarioKind { Peakons, Lagrangian, ClosedForm };

const char* to_string(ScenarioKind k);

/// Antisymmetric peakon-antipeakon data, always stored normalised to E = 1/2.
struct AntisymData {
  double s = 0.0;
  bool centered = true;  // collision at t = 0; otherwise (p0, q0) is the state at t0
  double p0 = 0.0;
  double q0 = 0.0;
  double alpha = 1.0;  // scaling applied to reach E = 1/2 (u, rhob -> alpha u, alpha rhob; t -> t / alpha)
};

/// u0 = a_u exp(-((x - c)/w_u)^2), rhob0 = a_rho exp(-((x - c)/w_rho)^2).
struct GaussianData {
  double u_amplitude = 0.5;
  double u_width = 1.0;
  double rho_amplitude = 0.0;
  double rho_width = 1.0;
  double center = 0.0;
};

struct SolverSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.1;
  double gap_threshold = 1e-9;
  long n = 2048;
  double dt = 1e-3;
  double margin = 20.0;
  double mask_eps = 1e-6;
  double handoff_lead = 1.0;
};

struct OutputSettings {
  double sample_dt = 0.1;
  bool trajectory = true;
  bool invariants = true;
  bool circle = true;
  std::vector<double> eulerian_times;
  double x_min = -10.0;
  double x_max = 10.0;
  long nx = 401;
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::Peakons;
  double t0 = 0.0;
  double t1 = 1.0;
  bool continue_lagrangian = false;
  std::optional<PeakonState> peakons;
  std::optional<AntisymData> antisym;
  std::optional<GaussianData> gaussian;
  SolverSettings solver;
  OutputSettings output;
};

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string key, const std::string& message, std::optional<double> residual = std::nullopt);
  const std::string& key() const { return key_; }
  std::optional<double> residual() const { return residual_; }

 private:
  std::string key_;
  std::optional<double> residual_;
};

/// Strict parse: unknown sections or keys, malformed numbers, missing initial data and
/// energy-normalisation violations (without rescale = true) raise ScenarioError.
Scenario parse_scenario(std::string_view text);

Scenario load_scenario(const std::filesystem::path& path);

/// Peakon configuration at t0 (explicit arrays or the antisymmetric closed form).
PeakonState initial_peakons(const Scenario& sc);

}  // namespace m2ch
