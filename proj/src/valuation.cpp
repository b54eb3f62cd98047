#include "offload/valuation.hpp"

#include <cmath>

namespace offload {

ConditionalPhiTable::ConditionalPhiTable(const ScenarioConfig& config, const Association& assoc)
    : slots_(static_cast<std::size_t>(config.slots)) {
  const ChannelParams& ch = config.channel;
  const double scale = ch.noise_power / ch.gain_const * fading_log_constant();
  for (std::size_t n = 0; n < config.vehicles(); ++n) {
    const RouteModel& route = config.routes[n];
    const std::size_t w_count = route.size();
    sizes_.push_back(w_count);
    std::vector<double> data(slots_ * slots_ * w_count, 0.0);
    std::vector<double> h(w_count), next(w_count);
    for (int target = 1; target <= config.slots; ++target) {
      const Vec2 bs_pos = config.bs.positions[assoc.bs_of(n, target)];
      for (std::size_t w = 0; w < w_count; ++w)
        h[w] = scale * distance_power(route.waypoint(w), bs_pos, ch);
      // h_from = P^{target-from} h_target, built backwards from the target slot
      for (int from = target; from >= 1; --from) {
        const std::size_t base = (static_cast<std::size_t>(target - 1) * slots_ + (from - 1)) * w_count;
        std::copy(h.begin(), h.end(), data.begin() + static_cast<std::ptrdiff_t>(base));
        if (from == 1) break;
        for (std::size_t w = 0; w < w_count; ++w) {
          double acc = 0.0;
          for (const auto& [j, p] : route.successors(w)) acc += p * h[j];
          next[w] = acc;
        }
        h.swap(next);
      }
    }
    data_.push_back(std::move(data));
  }
}

TailPlan tail_plan(const ReferenceSchedule& sched, const ConditionalPhiTable& table, std::size_t n,
                   int from, std::size_t w) {
  TailPlan tail;
  for (int s = from; s <= sched.slots(); ++s) {
    tail.rates.push_back(auxiliary_rate(sched, n, s));
    tail.tau.push_back(sched.tau(n, s));
    tail.phibar.push_back(table(n, from, w, s));
  }
  return tail;
}

TailPlan expected_tail_plan(const ReferenceSchedule& sched, const ConditionalPhiTable& table,
                            std::size_t n, int t, std::size_t w) {
  TailPlan tail;
  for (int s = t + 1; s <= sched.slots(); ++s) {
    tail.rates.push_back(auxiliary_rate(sched, n, s));
    tail.tau.push_back(sched.tau(n, s));
    tail.phibar.push_back(table(n, t, w, s));
  }
  return tail;
}

double f1(double d, const TailPlan& tail, double residual_weight) {
  if (d <= kBitTolerance) return 0.0;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < tail.size(); ++k) {
    cumulative += tail.rates[k];
    if (d <= cumulative + kBitTolerance) return static_cast<double>(k + 1);
  }
  return static_cast<double>(tail.size()) + residual_weight * (d - cumulative);
}

double f2(double d, const TailPlan& tail, double bw) {
  if (d <= kBitTolerance) return 0.0;
  auto term = [&](std::size_t k, double rate) {
    return rate > 0.0 ? tail.tau[k] * tail.phibar[k] * std::exp2(rate / (tail.tau[k] * bw)) : 0.0;
  };
  double cumulative = 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < tail.size(); ++k) {
    const double before = cumulative;
    cumulative += tail.rates[k];
    if (d <= cumulative + kBitTolerance) {
      // demand runs out in this slot: full slot if within tolerance, else the remainder
      const double rate = d - cumulative >= -kBitTolerance ? tail.rates[k] : d - before;
      return acc + term(k, rate);
    }
    acc += term(k, tail.rates[k]);
  }
  return acc;
}

double vehicle_value(double d, std::size_t position, int from, std::size_t n,
                     const ReferenceSchedule& sched, const ConditionalPhiTable& table,
                     const ScenarioConfig& config) {
  if (d <= kBitTolerance || from > sched.slots()) return 0.0;
  const TailPlan tail = tail_plan(sched, table, n, from, position);
  return f1(d, tail, config.weights.residual) +
         config.weights.energy * f2(d, tail, config.channel.slot_bandwidth());
}

double state_value(const SystemState& state, const ReferenceSchedule& sched,
                   const ConditionalPhiTable& table, const ScenarioConfig& config) {
  if (state.slot > config.slots) return 0.0;
  double v = 0.0;
  for (std::size_t n = 0; n < config.vehicles(); ++n)
    v += vehicle_value(state.buffers[n], state.positions[n], state.slot, n, sched, table, config);
  return v;
}

double expected_next_value(const SystemState& state, const std::vector<double>& rates,
                           const ReferenceSchedule& sched, const ConditionalPhiTable& table,
                           const ScenarioConfig& config) {
  const int t = state.slot;
  if (t >= config.slots) return 0.0;
  double v = 0.0;
  for (std::size_t n = 0; n < config.vehicles(); ++n) {
    const double d_next = next_buffer(state.buffers[n], rates[n], t, config.arrivals[n]);
    if (d_next <= kBitTolerance) continue;
    for (const auto& [l, p] : config.routes[n].successors(state.positions[n]))
      v += p * vehicle_value(d_next, l, t + 1, n, sched, table, config);
  }
  return v;
}

}  // namespace offload
