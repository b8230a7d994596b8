#pragma once

#include "m2ch/scenario.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace m2ch {

struct RunEvent {
  double t = 0.0;
  std::string kind;  // collision, abort, handoff, skipped
  long left = -1;    // colliding pair (left, left + 1); -1 when not applicable
  double gap = 0.0;
  std::string reason;
};

struct RunResult {
  std::vector<std::filesystem::path> files;
  std::vector<RunEvent> events;
  bool aborted = false;
  std::string abort_reason;
};

/// Runs a validated scenario and writes its CSV outputs into out_dir (created if needed).
/// Solver failures are recorded in events.csv and reported through RunResult::aborted.
RunResult run(const Scenario& sc, const std::filesystem::path& out_dir);

/// Shortest round-trip decimal form of t, used in snapshot file names.
std::string time_tag(double t);

}  // namespace m2ch
