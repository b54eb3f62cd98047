#include "offload/mobility.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace offload {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t key) {
  // splitmix64 finalizer over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng Rng::substream(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return Rng(mix(mix(master, a), b));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

RouteModel::RouteModel(std::vector<Vec2> waypoints, std::vector<double> transition_row_major,
                       std::size_t initial_index)
    : waypoints_(std::move(waypoints)),
      transition_(std::move(transition_row_major)),
      initial_index_(initial_index) {
  const std::size_t n = waypoints_.size();
  if (n == 0) throw std::invalid_argument("route has no waypoints");
  if (transition_.size() != n * n)
    throw std::invalid_argument("transition matrix must be " + std::to_string(n) + "x" +
                                std::to_string(n));
  if (initial_index_ >= n) throw std::invalid_argument("initial waypoint index out of range");
  successors_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = transition_[i * n + j];
      if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("transition row " + std::to_string(i) +
                                    " has an entry outside [0,1]");
      sum += p;
      if (p > 0.0) successors_[i].emplace_back(j, p);
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("transition row " + std::to_string(i) + " sums to " +
                                  std::to_string(sum) + ", expected 1");
  }
}

PositionDistribution point_mass(const RouteModel& route, std::size_t index) {
  if (index >= route.size()) throw std::out_of_range("waypoint index out of range");
  PositionDistribution d{std::vector<double>(route.size(), 0.0)};
  d.probs[index] = 1.0;
  return d;
}

PositionDistribution propagate(const RouteModel& route, const PositionDistribution& dist,
                               int steps) {
  if (steps < 0) throw std::invalid_argument("propagate: negative step count");
  if (dist.probs.size() != route.size())
    throw std::invalid_argument("propagate: distribution size does not match route");
  PositionDistribution cur = dist;
  std::vector<double> next(route.size());
  for (int s = 0; s < steps; ++s) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < route.size(); ++i) {
      const double p = cur.probs[i];
      if (p == 0.0) continue;
      for (const auto& [j, q] : route.successors(i)) next[j] += p * q;
    }
    cur.probs.swap(next);
  }
  return cur;
}

std::vector<Vec2> average_trajectory(const RouteModel& route, int horizon) {
  if (horizon < 1) throw std::invalid_argument("average_trajectory: horizon must be >= 1");
  std::vector<Vec2> out;
  out.reserve(horizon);
  PositionDistribution d = point_mass(route, route.initial_index());
  for (int t = 1; t <= horizon; ++t) {
    Vec2 mean;
    for (std::size_t i = 0; i < route.size(); ++i) {
      mean.x += d.probs[i] * route.waypoint(i).x;
      mean.y += d.probs[i] * route.waypoint(i).y;
    }
    out.push_back(mean);
    if (t < horizon) d = propagate(route, d, 1);
  }
  return out;
}

std::vector<std::size_t> reachable_set(const RouteModel& route, int slot) {
  if (slot < 1) throw std::invalid_argument("reachable_set: slots are 1-based");
  const auto d = propagate(route, point_mass(route, route.initial_index()), slot - 1);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.probs.size(); ++i)
    if (d.probs[i] > 0.0) out.push_back(i);
  return out;
}

PositionDistribution conditional_distribution(const RouteModel& route, std::size_t at_index,
                                              int steps_ahead) {
  return propagate(route, point_mass(route, at_index), steps_ahead);
}

std::vector<std::size_t> sample_trajectory(const RouteModel& route, int horizon, Rng& rng) {
  std::vector<std::size_t> out;
  if (horizon < 1) return out;
  out.reserve(horizon);
  std::size_t cur = route.initial_index();
  out.push_back(cur);
  for (int t = 2; t <= horizon; ++t) {
    const auto& succ = route.successors(cur);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = succ.back().first;
    for (const auto& [j, p] : succ) {
      acc += p;
      if (u < acc) {
        pick = j;
        break;
      }
    }
    cur = pick;
    out.push_back(cur);
  }
  return out;
}

}  // namespace offload
