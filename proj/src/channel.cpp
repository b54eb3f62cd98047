#include "offload/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace offload {

void ChannelParams::validate() const {
  if (!(gain_const > 0 && noise_power > 0 && bandwidth > 0 && slot_length > 0 && p_max > 0 &&
        min_distance > 0))
    throw std::invalid_argument("channel parameters must be strictly positive");
  if (!(pathloss_exp >= 2.0)) throw std::invalid_argument("pathloss exponent must be >= 2");
}

void BsLayout::validate() const {
  if (positions.empty()) throw std::invalid_argument("at least one base station is required");
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      if (positions[i].x == positions[j].x && positions[i].y == positions[j].y)
        throw std::invalid_argument("base stations " + std::to_string(i) + " and " +
                                    std::to_string(j) + " share a position");
}

double distance_power(Vec2 a, Vec2 b, const ChannelParams& params) {
  const double d = std::max(distance(a, b), params.min_distance);
  return std::pow(d, params.pathloss_exp);
}

double pathloss(Vec2 vehicle_pos, Vec2 bs_pos, const ChannelParams& params) {
  return params.gain_const / distance_power(vehicle_pos, bs_pos, params);
}

namespace detail {

QuadratureRule gauss_laguerre(int order) {
  // Newton iteration on L_n with the usual asymptotic starting guesses.
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int n = order;
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == 0) {
      z = 3.0 / (1.0 + 2.4 * n);
    } else if (i == 1) {
      z += 15.0 / (1.0 + 2.5 * n);
    } else {
      const double ai = i - 1;
      z += ((1.0 + 2.55 * ai) / (1.9 * ai)) * (z - rule.nodes[i - 2]);
    }
    double p1 = 0, p2 = 0, pp = 0;
    for (int it = 0; it < 200; ++it) {
      p1 = 1.0;
      p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2 * j - 1 - z) * p2 - (j - 1) * p3) / j;
      }
      pp = (n * p1 - n * p2) / z;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::abs(z)) break;
    }
    rule.nodes[i] = z;
    rule.weights[i] = -1.0 / (pp * n * p2);
  }
  return rule;
}

const QuadratureRule& gauss_laguerre_64() {
  static const QuadratureRule rule = gauss_laguerre(64);
  return rule;
}

}  // namespace detail

double ergodic_rate(double power, double gain, double tau, const ChannelParams& params) {
  if (power <= 0.0 || tau <= 0.0) return 0.0;
  const double snr = power * gain / params.noise_power;
  const auto& rule = detail::gauss_laguerre_64();
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * std::log2(1.0 + snr * rule.nodes[i]);
  return tau * params.slot_bandwidth() * acc;
}

double fading_log_constant() { return std::exp(std::numbers::egamma_v<double>); }

double phi(double gain, const ChannelParams& params) {
  return params.noise_power / gain * fading_log_constant();
}

double required_power(double rate, double tau, double phi_value, const ChannelParams& params) {
  if (rate <= 0.0) return 0.0;
  if (tau <= 0.0) return std::numeric_limits<double>::infinity();
  return phi_value * std::exp2(rate / (tau * params.slot_bandwidth()));
}

double power_for_rate(double rate, double tau, double phi_value, const ChannelParams& params) {
  const double p = required_power(rate, tau, phi_value, params);
  if (p > params.p_max * (1.0 + 1e-9)) throw std::domain_error("rate exceeds peak-power cap");
  return p;
}

double rate_cap(double tau, double phi_value, const ChannelParams& params) {
  if (tau <= 0.0 || phi_value >= params.p_max) return 0.0;
  return tau * params.slot_bandwidth() * std::log2(params.p_max / phi_value);
}

double worst_position_rate(std::span<const Vec2> reachable, Vec2 bs_pos, double tau,
                           const ChannelParams& params) {
  if (reachable.empty()) throw std::invalid_argument("worst_position_rate: empty position set");
  double worst = std::numeric_limits<double>::infinity();
  for (const Vec2& p : reachable)
    worst = std::min(worst, ergodic_rate(params.p_max, pathloss(p, bs_pos, params), tau, params));
  return worst;
}

double worst_position_cap(std::span<const Vec2> reachable, Vec2 bs_pos, double tau,
                          const ChannelParams& params) {
  if (reachable.empty()) throw std::invalid_argument("worst_position_cap: empty position set");
  double worst = std::numeric_limits<double>::infinity();
  for (const Vec2& p : reachable)
    worst = std::min(worst, rate_cap(tau, phi(pathloss(p, bs_pos, params), params), params));
  return worst;
}

double conditional_phi(const RouteModel& route, std::size_t at_index, int steps_ahead,
                       Vec2 bs_pos, const ChannelParams& params) {
  const auto dist = conditional_distribution(route, at_index, steps_ahead);
  double expected = 0.0;
  for (std::size_t w = 0; w < route.size(); ++w)
    if (dist.probs[w] > 0.0)
      expected += dist.probs[w] * distance_power(route.waypoint(w), bs_pos, params);
  return params.noise_power / params.gain_const * fading_log_constant() * expected;
}

}  // namespace offload
