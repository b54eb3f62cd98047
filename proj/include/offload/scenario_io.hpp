#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "offload/environment.hpp"

namespace offload {

/// Scenario file problem; the message starts with "source:line:column:".
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a YAML scenario. `source` names the input in error messages.
ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "<scenario>");
ScenarioConfig load_scenario(const std::string& path);

/// YAML text that parses back to the same config. Transition rows are written
/// sparsely as [index, probability] pairs, with doubles in round-trip precision.
std::string scenario_to_yaml(const ScenarioConfig& config, const std::string& header_comment = "");

/// Template for synthetic scenarios on a Manhattan grid.
struct GeneratorParams {
  int vehicles = 5;
  int stations = 3;
  int slots = 50;
  int grid_blocks = 3;           // blocks per side
  double block_length = 100.0;   // m
  double waypoint_spacing = 10.0;  // m between consecutive waypoints
  /// Per-slot probabilities of staying, advancing one and advancing two
  /// waypoints; jittered per vehicle.
  double stay = 0.2;
  double advance_one = 0.5;
  double advance_two = 0.3;
  double jitter = 0.05;
  double task_bits = 3.6e8;
  int latest_arrival = 10;  // arrival slots are drawn uniformly from [1, latest_arrival]
  ChannelParams channel = default_channel();
  Weights weights;

  static ChannelParams default_channel() {
    ChannelParams c;
    c.gain_const = 1.2e7;
    return c;
  }
};

/// Deterministic given (params, seed).
ScenarioConfig generate_scenario(const GeneratorParams& params, std::uint64_t seed);

}  // namespace offload
