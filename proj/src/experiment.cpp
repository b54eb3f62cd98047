#include "offload/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "offload/preallocation.hpp"
#include "offload/reference.hpp"
#include "offload/scenario_io.hpp"

namespace offload {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << content;
  if (!out) throw std::runtime_error(fmt::format("error while writing {}", path.string()));
}

}  // namespace

void RunSpec::validate() const {
  if (trials < 1) throw std::invalid_argument("trial count must be at least 1");
  if (policies.empty()) throw std::invalid_argument("at least one policy is required");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  if (out_dir.empty()) throw std::invalid_argument("an output directory is required");
}

std::string trials_csv(const EvaluationReport& report) {
  std::string out = "trial,policy,seed,total_cost,latency,energy,residual\n";
  const std::size_t trials = report.policies.empty() ? 0 : report.policies.front().trials.size();
  for (std::size_t t = 0; t < trials; ++t)
    for (const auto& p : report.policies) {
      const EpisodeResult& r = p.trials[t];
      out += fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", t, p.name, r.seed, r.total_cost,
                         r.cost.latency, r.cost.energy, r.cost.residual);
    }
  return out;
}

std::string cdf_csv(const PolicySummary& summary) {
  std::string out = "cost,quantile\n";
  const double n = static_cast<double>(summary.sorted_costs.size());
  for (std::size_t i = 0; i < summary.sorted_costs.size(); ++i)
    out += fmt::format("{:.17g},{:.17g}\n", summary.sorted_costs[i], static_cast<double>(i + 1) / n);
  return out;
}

std::string summary_json(const EvaluationReport& report, const RunSpec& spec) {
  nlohmann::ordered_json j;
  j["trials"] = spec.trials;
  j["seed"] = spec.seed;
  j["paired"] = spec.paired;
  nlohmann::ordered_json pols = nlohmann::ordered_json::array();
  for (const auto& p : report.policies) {
    nlohmann::ordered_json e;
    const double k = static_cast<double>(p.trials.size());
    double latency = 0.0, energy = 0.0, residual = 0.0;
    for (const auto& r : p.trials) {
      latency += r.cost.latency;
      energy += r.cost.energy;
      residual += r.cost.residual;
    }
    e["name"] = p.name;
    e["mean_cost"] = p.mean;
    e["stddev"] = p.stddev;
    e["ci95_half_width"] = 1.959963984540054 * p.stddev / std::sqrt(k);
    e["min_cost"] = p.sorted_costs.front();
    e["median_cost"] = p.sorted_costs[p.sorted_costs.size() / 2];
    e["max_cost"] = p.sorted_costs.back();
    e["mean_latency"] = latency / k;
    e["mean_energy"] = energy / k;
    e["mean_residual_bits"] = residual / k;
    e["safeguard"] = {{"slots_checked", p.safeguard.slots_checked},
                      {"violations", p.safeguard.violations},
                      {"improved", p.safeguard.improved}};
    pols.push_back(std::move(e));
  }
  j["policies"] = std::move(pols);
  nlohmann::ordered_json sup = nlohmann::ordered_json::object();
  for (std::size_t a = 0; a < report.policies.size(); ++a) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (std::size_t b = 0; b < report.policies.size(); ++b)
      if (a != b) row[report.policies[b].name] = report.suppression[a][b];
    sup[report.policies[a].name] = std::move(row);
  }
  // suppression[a][b]: relative reduction of a's mean cost against b's
  j["suppression"] = std::move(sup);
  return j.dump(2) + "\n";
}

EvaluationReport run_experiment(const RunSpec& spec, const ScenarioConfig& config) {
  spec.validate();
  PolicyOptions popts;
  popts.strict_safeguard = spec.strict_safeguard;
  const auto policies = make_policies(spec.policies, config, popts);

  EvaluationOptions eopts;
  eopts.trials = spec.trials;
  eopts.seed = spec.seed;
  eopts.jobs = spec.jobs;
  eopts.paired = spec.paired;
  EvaluationReport report = evaluate(policies, config, eopts);

  const std::filesystem::path dir(spec.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "trials.csv", trials_csv(report));
  write_file(dir / "summary.json", summary_json(report, spec));
  for (const auto& p : report.policies) write_file(dir / fmt::format("cdf_{}.csv", p.name), cdf_csv(p));
  if (spec.dump_reference) {
    write_file(dir / "reference_pre_allocation.txt", dump_reference(preallocate(config)));
    write_file(dir / "reference_maximum_power.txt", dump_reference(max_power_reference(config)));
  }
  return report;
}

EvaluationReport run_experiment(const RunSpec& spec) {
  spec.validate();
  return run_experiment(spec, load_scenario(spec.scenario_path));
}

}  // namespace offload
