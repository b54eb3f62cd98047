#include <doctest.h>

#include <string>

#include "offload/scenario_io.hpp"

using namespace offload;

namespace {

const std::string kOneVehicle = R"(slots: 3
channel:
  gain_const: 1.0e7
base_stations:
  - [0, 0]
vehicles:
  - task: {arrival_slot: 2, bits: 1000}
    route:
      initial: 1
      waypoints: [[0, 0], [10, 0]]
      transitions:
        - [0.5, 0.5]
        - [0.0, 1.0]
)";

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text, "test.yaml");
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_SUITE("scenario_io") {
  TEST_CASE("minimal file parses with defaults") {
    const ScenarioConfig c = parse_scenario(kOneVehicle);
    CHECK(c.slots == 3);
    CHECK(c.vehicles() == 1);
    CHECK(c.stations() == 1);
    CHECK(c.arrivals[0].slot == 2);
    CHECK(c.arrivals[0].bits == 1000.0);
    CHECK(c.routes[0].initial_index() == 1);
    CHECK(c.routes[0].transition(0, 1) == 0.5);
    CHECK(c.channel.bandwidth == 20e6);
    CHECK(c.channel.p_max == 5.0);
    CHECK(c.weights.energy == 2.0);
    CHECK(c.weights.residual == 5.0);
  }

  TEST_CASE("errors name the line and the problem") {
    std::string e = error_of(replace(kOneVehicle, "- [0.0, 1.0]", "- [0.0, 0.9]"));
    CHECK(e.find("test.yaml:13:") == 0);
    CHECK(e.find("transition row 1 sums to 0.9") != std::string::npos);

    e = error_of(replace(kOneVehicle, "  gain_const: 1.0e7\n", "  p_max: 5\n"));
    CHECK(e.find("missing field 'gain_const'") != std::string::npos);

    e = error_of(replace(kOneVehicle, "bits: 1000", "bits: -4"));
    CHECK(e.find("'bits' must be positive") != std::string::npos);

    e = error_of(replace(kOneVehicle, "arrival_slot: 2", "arrival_slot: 9"));
    CHECK(e.find("arrival slot 9 outside [1, 3]") != std::string::npos);

    e = error_of(replace(kOneVehicle, "initial: 1", "initial: 2"));
    CHECK(e.find("initial waypoint 2") != std::string::npos);

    e = error_of(replace(kOneVehicle, "- [0.5, 0.5]", "- [0.5, 0.5, 0.0]"));
    CHECK(e.find("needs 2 entries") != std::string::npos);

    e = error_of("slots: [1\n");
    CHECK(e.find("test.yaml:") == 0);

    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.yaml"), ScenarioError);
  }

  TEST_CASE("sparse rows") {
    const std::string sparse = replace(kOneVehicle,
                                       "      transitions:\n        - [0.5, 0.5]\n        - [0.0, 1.0]\n",
                                       "      sparse_transitions:\n        - [[0, 0.5], [1, 0.5]]\n        - [[1, 1.0]]\n");
    const ScenarioConfig c = parse_scenario(sparse);
    CHECK(c.routes[0].transition(1, 1) == 1.0);
    CHECK(c.routes[0].transition(1, 0) == 0.0);
    CHECK(error_of(replace(sparse, "[[1, 1.0]]", "[[3, 1.0]]")).find("transition index 3") != std::string::npos);
  }

  TEST_CASE("writer round-trips") {
    GeneratorParams g;
    g.slots = 10;
    const ScenarioConfig c = generate_scenario(g, 4);
    const std::string text = scenario_to_yaml(c, "generated\nfor a test");
    CHECK(text.rfind("# generated\n# for a test\n", 0) == 0);
    const ScenarioConfig back = parse_scenario(text);
    CHECK(scenario_to_yaml(back, "generated\nfor a test") == text);
    CHECK(back.slots == c.slots);
    REQUIRE(back.vehicles() == c.vehicles());
    for (std::size_t n = 0; n < c.vehicles(); ++n) {
      CHECK(back.arrivals[n].bits == c.arrivals[n].bits);
      for (std::size_t i = 0; i < c.routes[n].size(); ++i)
        for (std::size_t j = 0; j < c.routes[n].size(); ++j)
          CHECK(back.routes[n].transition(i, j) == c.routes[n].transition(i, j));
      CHECK(back.routes[n].waypoint(3).x == c.routes[n].waypoint(3).x);
    }
    CHECK(back.channel.gain_const == c.channel.gain_const);
  }

  TEST_CASE("generator") {
    GeneratorParams g;
    const ScenarioConfig a = generate_scenario(g, 1), b = generate_scenario(g, 1), d = generate_scenario(g, 2);
    CHECK(scenario_to_yaml(a) == scenario_to_yaml(b));
    CHECK(scenario_to_yaml(a) != scenario_to_yaml(d));
    CHECK(a.vehicles() == 5);
    CHECK(a.stations() == 3);
    CHECK(a.slots == 50);
    CHECK(a.channel.bandwidth == 20e6);
    CHECK(a.channel.p_max == 5.0);
    CHECK(a.weights.energy == 2.0);
    CHECK(a.weights.residual == 5.0);
    for (std::size_t n = 0; n < a.vehicles(); ++n) {
      CHECK(a.arrivals[n].bits == 3.6e8);
      CHECK(a.arrivals[n].slot >= 1);
      CHECK(a.arrivals[n].slot <= g.latest_arrival);
      const auto& r = a.routes[n];
      for (std::size_t i = 0; i < r.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) s += r.transition(i, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
    g.vehicles = 1;
    CHECK(generate_scenario(g, 3).vehicles() == 1);
    g.latest_arrival = 0;
    CHECK_THROWS(generate_scenario(g, 3));
  }

  TEST_CASE("shipped scenarios load") {
    const std::string dir = std::string(OFFLOAD_SOURCE_DIR) + "/scenarios/";
    const ScenarioConfig m = load_scenario(dir + "minimal.yaml");
    CHECK(m.vehicles() == 1);
    CHECK(m.stations() == 2);
    const ScenarioConfig t = load_scenario(dir + "town_grid.yaml");
    CHECK(t.vehicles() == 5);
    CHECK(t.stations() == 3);
    CHECK(t.slots == 50);
    CHECK(scenario_to_yaml(t) == scenario_to_yaml(generate_scenario(GeneratorParams{}, 1)));
  }
}
