#pragma once

#include <span>
#include <vector>

#include "offload/mobility.hpp"

namespace offload {

/// Uplink parameters shared by every BS. Fading is unit-mean exponential
/// power (Rayleigh amplitude).
struct ChannelParams {
  double gain_const = 1.0;      // G
  double pathloss_exp = 4.0;    // gamma
  double noise_power = 1e-3;    // W
  double bandwidth = 20e6;      // Hz
  double slot_length = 1.0;     // s
  double p_max = 5.0;           // W
  double min_distance = 1.0;    // m, pathloss singularity guard

  /// T_s * B: bits per slot per unit of spectral efficiency.
  double slot_bandwidth() const { return slot_length * bandwidth; }
  void validate() const;
};

struct BsLayout {
  std::vector<Vec2> positions;
  std::size_t size() const { return positions.size(); }
  void validate() const;
};

/// G / max(distance, d_min)^gamma.
double pathloss(Vec2 vehicle_pos, Vec2 bs_pos, const ChannelParams& params);

/// tau * T_s * B * E_h[log2(1 + power * gain * |h|^2 / sigma^2)], 64-point Gauss-Laguerre.
double ergodic_rate(double power, double gain, double tau, const ChannelParams& params);

/// 2^{-E[log2|h|^2]} for the exponential fading model, i.e. e^{gamma_Euler}.
double fading_log_constant();

/// Effective noise constant: the power that buys zero bits/Hz under the
/// high-SNR map. (sigma^2 / gain) * e^{gamma_Euler}.
double phi(double gain, const ChannelParams& params);

/// High-SNR inverse: phi * 2^{rate / (tau T_s B)}, with 0 W for a zero rate.
/// Returns +inf when rate > 0 and tau == 0. Does not check the power cap.
double required_power(double rate, double tau, double phi_value, const ChannelParams& params);

/// Same as required_power but throws std::domain_error when the cap is exceeded.
double power_for_rate(double rate, double tau, double phi_value, const ChannelParams& params);

/// tau T_s B log2(p_max / phi) when phi < p_max, else 0.
double rate_cap(double tau, double phi_value, const ChannelParams& params);

/// Minimum over the positions of the ergodic rate at peak power.
double worst_position_rate(std::span<const Vec2> reachable, Vec2 bs_pos, double tau,
                           const ChannelParams& params);

/// Minimum over the positions of the high-SNR rate cap. This is the cap the
/// scheduler plans against, since accounting uses the high-SNR map.
double worst_position_cap(std::span<const Vec2> reachable, Vec2 bs_pos, double tau,
                          const ChannelParams& params);

/// max(distance, d_min)^gamma.
double distance_power(Vec2 a, Vec2 b, const ChannelParams& params);

/// Phi with the pathloss replaced by its conditional expectation over the
/// position steps_ahead transitions after waypoint at_index.
double conditional_phi(const RouteModel& route, std::size_t at_index, int steps_ahead,
                       Vec2 bs_pos, const ChannelParams& params);

namespace detail {
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
/// Gauss-Laguerre rule for weight e^{-x} on [0, inf).
const QuadratureRule& gauss_laguerre_64();
QuadratureRule gauss_laguerre(int order);
}  // namespace detail

}  // namespace offload
