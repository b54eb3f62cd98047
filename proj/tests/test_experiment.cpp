#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "offload/experiment.hpp"
#include "offload/scenario_io.hpp"

using namespace offload;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ScenarioConfig tiny_scenario() {
  GeneratorParams g;
  g.slots = 10;
  g.vehicles = 3;
  g.latest_arrival = 3;
  return generate_scenario(g, 5);
}

RunSpec tiny_spec(const std::string& out, int jobs) {
  RunSpec s;
  s.policies = {PolicyKind::DynamicImprovement, PolicyKind::MaximumPower};
  s.trials = 6;
  s.seed = 3;
  s.jobs = jobs;
  s.out_dir = out;
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("offload_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("run spec validation") {
    RunSpec s = tiny_spec("out", 1);
    CHECK_NOTHROW(s.validate());
    s.trials = 0;
    CHECK_THROWS(s.validate());
    s = tiny_spec("out", 1);
    s.policies.clear();
    CHECK_THROWS(s.validate());
    s = tiny_spec("", 1);
    CHECK_THROWS(s.validate());
  }

  TEST_CASE("outputs, determinism and suppression") {
    const ScenarioConfig c = tiny_scenario();
    const fs::path a = scratch("a"), b = scratch("b");
    RunSpec spec = tiny_spec(a.string(), 1);
    spec.dump_reference = true;
    const EvaluationReport report = run_experiment(spec, c);
    RunSpec spec_b = tiny_spec(b.string(), 2);
    spec_b.dump_reference = true;
    run_experiment(spec_b, c);

    for (const char* f : {"trials.csv", "summary.json", "cdf_dynamic-improvement.csv",
                          "cdf_maximum-power.csv", "reference_pre_allocation.txt",
                          "reference_maximum_power.txt"}) {
      REQUIRE(fs::exists(a / f));
      CHECK(slurp(a / f) == slurp(b / f));
    }
    int cdfs = 0;
    for (const auto& e : fs::directory_iterator(a))
      if (e.path().filename().string().rfind("cdf_", 0) == 0) ++cdfs;
    CHECK(cdfs == 2);

    // recompute means and suppression from the emitted rows
    std::istringstream rows(slurp(a / "trials.csv"));
    std::string line;
    std::getline(rows, line);
    CHECK(line == "trial,policy,seed,total_cost,latency,energy,residual");
    std::map<std::string, double> sum;
    std::map<std::string, int> count;
    while (std::getline(rows, line)) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string x;
      while (std::getline(ss, x, ',')) f.push_back(x);
      REQUIRE(f.size() == 7);
      sum[f[1]] += std::stod(f[3]);
      ++count[f[1]];
    }
    CHECK(count["dynamic-improvement"] == 6);
    const double di = sum["dynamic-improvement"] / 6, mp = sum["maximum-power"] / 6;
    const auto j = nlohmann::json::parse(slurp(a / "summary.json"));
    CHECK(j["trials"] == 6);
    CHECK(j["policies"][0]["mean_cost"].get<double>() == doctest::Approx(di).epsilon(1e-12));
    CHECK(j["suppression"]["dynamic-improvement"]["maximum-power"].get<double>() ==
          doctest::Approx((mp - di) / mp).epsilon(1e-12));
    CHECK(j["policies"][0]["safeguard"]["violations"] == 0);
    CHECK(report.policies[1].mean == doctest::Approx(mp).epsilon(1e-12));

    // CDF rows are sorted with quantiles in (0, 1]
    std::istringstream cdf(slurp(a / "cdf_maximum-power.csv"));
    std::getline(cdf, line);
    double prev = -1.0, q = 0.0;
    while (std::getline(cdf, line)) {
      const auto comma = line.find(',');
      const double cost = std::stod(line.substr(0, comma));
      q = std::stod(line.substr(comma + 1));
      CHECK(cost >= prev);
      CHECK(q > 0.0);
      CHECK(q <= 1.0);
      prev = cost;
    }
    CHECK(q == 1.0);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("paired trials share trajectories") {
    const ScenarioConfig c = tiny_scenario();
    const fs::path a = scratch("paired");
    RunSpec spec = tiny_spec(a.string(), 1);
    const auto paired = run_experiment(spec, c);
    for (int t = 0; t < spec.trials; ++t)
      CHECK(paired.policies[0].trials[t].seed == paired.policies[1].trials[t].seed);
    spec.paired = false;
    const auto indep = run_experiment(spec, c);
    CHECK(indep.policies[0].trials[0].seed != indep.policies[1].trials[0].seed);
    fs::remove_all(a);
  }

  TEST_CASE("loading from a path") {
    const fs::path dir = scratch("load");
    fs::create_directories(dir);
    const fs::path file = dir / "s.yaml";
    std::ofstream(file) << scenario_to_yaml(tiny_scenario());
    RunSpec spec = tiny_spec((dir / "out").string(), 1);
    spec.scenario_path = file.string();
    spec.trials = 2;
    const auto r = run_experiment(spec);
    CHECK(r.policies.size() == 2);
    spec.scenario_path = (dir / "missing.yaml").string();
    CHECK_THROWS_AS(run_experiment(spec), ScenarioError);
    fs::remove_all(dir);
  }
}
