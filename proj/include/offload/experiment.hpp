#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offload/environment.hpp"
#include "offload/policies.hpp"

namespace offload {

struct RunSpec {
  std::string scenario_path;
  std::vector<PolicyKind> policies;
  int trials = 500;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir;
  bool dump_reference = false;
  bool strict_safeguard = false;
  bool paired = true;

  void validate() const;
};

/// Evaluates the policies on the scenario and writes trials.csv,
/// summary.json and one cdf_<policy>.csv per policy into spec.out_dir
/// (created if missing). Output bytes depend only on the scenario, the
/// policies, the seed, the trial count and the pairing mode.
EvaluationReport run_experiment(const RunSpec& spec, const ScenarioConfig& config);

/// Loads spec.scenario_path, then runs.
EvaluationReport run_experiment(const RunSpec& spec);

std::string trials_csv(const EvaluationReport& report);
std::string cdf_csv(const PolicySummary& summary);
std::string summary_json(const EvaluationReport& report, const RunSpec& spec);

}  // namespace offload
