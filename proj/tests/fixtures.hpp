#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "offload/environment.hpp"

namespace offload::testing {

/// Straight road along x: waypoint k at (x0 + k * spacing, y). Each slot the
/// vehicle advances one waypoint with probability `advance`; the last
/// waypoint is absorbing.
inline RouteModel line_route(std::size_t count, double spacing, double advance, double x0 = 0.0,
                             double y = 0.0, std::size_t initial = 0) {
  std::vector<Vec2> pts;
  for (std::size_t k = 0; k < count; ++k) pts.push_back({x0 + static_cast<double>(k) * spacing, y});
  std::vector<double> p(count * count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    if (i + 1 == count) {
      p[i * count + i] = 1.0;
    } else {
      p[i * count + i] = 1.0 - advance;
      p[i * count + i + 1] = advance;
    }
  }
  return RouteModel(std::move(pts), std::move(p), initial);
}

/// Random row-stochastic matrix with at most `support` non-zeros per row.
inline RouteModel random_route(std::mt19937_64& gen, std::size_t count, std::size_t support,
                               double extent) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts;
  for (std::size_t k = 0; k < count; ++k) pts.push_back({extent * u(gen), extent * u(gen)});
  std::vector<double> p(count * count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < support; ++k) {
      const std::size_t j = static_cast<std::size_t>(u(gen) * static_cast<double>(count)) % count;
      const double w = 0.1 + u(gen);
      p[i * count + j] += w;
      s += w;
    }
    for (std::size_t j = 0; j < count; ++j) p[i * count + j] /= s;
    // renormalize once more so the row sums to one within a few ulps
    double s2 = 0.0;
    for (std::size_t j = 0; j < count; ++j) s2 += p[i * count + j];
    for (std::size_t j = 0; j < count; ++j) p[i * count + j] /= s2;
  }
  return RouteModel(std::move(pts), std::move(p), 0);
}

/// One or more vehicles on straight roads near a row of base stations.
inline ScenarioConfig basic_config(int slots, std::vector<RouteModel> routes, std::vector<Vec2> bs,
                                   std::vector<Arrival> arrivals, double gain = 1e7) {
  ScenarioConfig c;
  c.slots = slots;
  c.routes = std::move(routes);
  c.bs.positions = std::move(bs);
  c.channel.gain_const = gain;
  c.arrivals = std::move(arrivals);
  c.validate();
  return c;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace offload::testing
