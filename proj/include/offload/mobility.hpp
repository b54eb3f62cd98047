#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace offload {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(Vec2 a, Vec2 b);

/// Seeded random stream. Substreams are derived by mixing a master seed with
/// integer keys, so (trial, vehicle) streams do not depend on evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static std::uint64_t mix(std::uint64_t seed, std::uint64_t key);
  static Rng substream(std::uint64_t master, std::uint64_t a, std::uint64_t b);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Route of one vehicle: waypoints plus a row-stochastic transition matrix.
/// Immutable after construction.
class RouteModel {
 public:
  RouteModel(std::vector<Vec2> waypoints, std::vector<double> transition_row_major,
             std::size_t initial_index);

  std::size_t size() const { return waypoints_.size(); }
  const std::vector<Vec2>& waypoints() const { return waypoints_; }
  Vec2 waypoint(std::size_t i) const { return waypoints_.at(i); }
  std::size_t initial_index() const { return initial_index_; }
  double transition(std::size_t from, std::size_t to) const {
    return transition_[from * size() + to];
  }
  std::span<const double> row(std::size_t from) const {
    return {transition_.data() + from * size(), size()};
  }
  /// Non-zero entries of a row as (index, probability).
  const std::vector<std::pair<std::size_t, double>>& successors(std::size_t from) const {
    return successors_[from];
  }

 private:
  std::vector<Vec2> waypoints_;
  std::vector<double> transition_;
  std::size_t initial_index_;
  std::vector<std::vector<std::pair<std::size_t, double>>> successors_;
};

struct PositionDistribution {
  std::vector<double> probs;
};

PositionDistribution point_mass(const RouteModel& route, std::size_t index);

PositionDistribution propagate(const RouteModel& route, const PositionDistribution& dist,
                               int steps);

/// Mean position in slots 1..horizon, starting from the initial waypoint at slot 1.
std::vector<Vec2> average_trajectory(const RouteModel& route, int horizon);

/// Waypoints with positive probability in the given (1-based) slot.
std::vector<std::size_t> reachable_set(const RouteModel& route, int slot);

PositionDistribution conditional_distribution(const RouteModel& route, std::size_t at_index,
                                              int steps_ahead);

/// Waypoint indices for slots 1..horizon; slot 1 is the initial waypoint.
std::vector<std::size_t> sample_trajectory(const RouteModel& route, int horizon, Rng& rng);

}  // namespace offload
