#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace m2ch {

struct CheckResult {
  std::string suite;
  std::string operation;  // library operation exercised by the check
  std::string check;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct Report {
  std::vector<CheckResult> entries;
  bool ok() const;
  std::size_t failures() const;
  /// Tab-separated table (header suite, operation, check, measured, threshold, status)
  /// followed by a summary line.
  std::string to_text() const;
};

/// Known suite names: core, dynamics, closed-form, lagrangian, all.
const std::vector<std::string>& suite_names();

/// Runs the listed suites in order. Unknown names throw std::invalid_argument;
/// an empty list gives an empty, successful report.
Report verify(const std::vector<std::string>& suites);
Report verify(std::string_view suite);

}  // namespace m2ch
