#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ac/core.hpp"
#include "ac/fem.hpp"
#include "ac/potential.hpp"
#include "ac/profile.hpp"
#include "ac/sampler.hpp"

namespace ac {

// Joint scaling schedule L = eps^{-lambda}, a = nearest 1/n to eps^{alpha}.
struct ExperimentSchedule {
  int d = 1;
  double lambda = 0.3, alpha = 0.2, lambda1 = 0.15;
  double delta = 0.3;
  std::vector<double> eps_list = {0.5, 0.3, 0.2, 0.1};
  std::uint64_t seed = 1;
  long samples = 20000;
  double slack = 0.3;

  struct Row {
    double eps = 0, L = 0, a = 0, realized_alpha = 0;
    int n = 2;
    long N = 0;
  };
  std::vector<Row> rows;  // filled by validate_schedule
};

// Asserts lambda + (d+1) alpha < 1 and 0 < lambda1 < min(2 alpha, lambda);
// materializes (L, n, N) per eps. Throws InvalidExponents naming the violated
// inequality; warns above the desk-scale cap of 2e5 degrees of freedom.
ExperimentSchedule validate_schedule(ExperimentSchedule s);

struct TheoremRow {
  double eps = 0, L = 0;
  int n = 0;
  long N = 0;
  double delta = 0, p_hat = 0, ci_low = 0, ci_high = 0, eps_log_p = 0, c0_delta_sq = 0;
  bool pass = false;
};

struct TheoremReport {
  std::vector<TheoremRow> rows;
  double c0_estimate = 0;
  bool overall_pass = false;
  std::uint64_t seed = 0;
  double wall_seconds = 0;
  std::string version;
};

TheoremReport run_main_theorem(const ExperimentSchedule& s);

struct BatteryRow {
  std::string lemma;
  double eps = 0;
  double value = 0, bound = 0;
  bool pass = false;
  bool hard = false;  // exact identities fail the whole battery
  std::string detail;
};

struct BatteryReport {
  std::vector<BatteryRow> rows;
  bool overall_pass = false;  // no hard failures
  std::uint64_t seed = 0;
  double wall_seconds = 0;
  std::string version;
};

BatteryReport run_verification_battery(const ExperimentSchedule& s);

// serialization (JSON via the report writers, CSV with fixed columns)
std::string theorem_report_json(const TheoremReport& r, const ExperimentSchedule& s);
std::string theorem_report_csv(const TheoremReport& r);
std::string battery_report_json(const BatteryReport& r, const ExperimentSchedule& s);
std::string battery_report_csv(const BatteryReport& r);
ExperimentSchedule schedule_from_json(const std::string& text);

}  // namespace ac
