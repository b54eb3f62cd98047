#include "offload/preallocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

namespace offload {

namespace {

constexpr double kLn2 = std::numbers::ln2;

double slot_energy(double rate, double tau, double phi_value, double bw) {
  return rate > 0.0 ? tau * phi_value * std::exp2(rate / (tau * bw)) : 0.0;
}

}  // namespace

Association reference_association(const std::vector<std::vector<Vec2>>& avg_trajectories,
                                  const BsLayout& bs, const ChannelParams& channel) {
  Association a;
  a.vehicles = avg_trajectories.size();
  a.slots = a.vehicles ? static_cast<int>(avg_trajectories.front().size()) : 0;
  a.bs.assign(static_cast<std::size_t>(a.slots) * a.vehicles, 0);
  a.tau.assign(a.bs.size(), 0.0);
  for (int t = 1; t <= a.slots; ++t) {
    std::vector<int> load(bs.size(), 0);
    for (std::size_t n = 0; n < a.vehicles; ++n) {
      const Vec2 pos = avg_trajectories[n].at(t - 1);
      std::size_t best = 0;
      double best_gain = -1.0;
      for (std::size_t m = 0; m < bs.size(); ++m) {
        const double g = pathloss(pos, bs.positions[m], channel);
        if (g > best_gain) {
          best_gain = g;
          best = m;
        }
      }
      a.bs[a.index(n, t)] = best;
      ++load[best];
    }
    for (std::size_t n = 0; n < a.vehicles; ++n)
      a.tau[a.index(n, t)] = 1.0 / load[a.bs[a.index(n, t)]];
  }
  return a;
}

ThroughputPlan solve_case1(const DeterministicPlanInput& in, int td) {
  const double bw = in.channel.slot_bandwidth();
  const double w1p = in.weights.energy / bw;
  const double demand = in.demand;

  std::vector<int> slots;
  double cap_sum = 0.0;
  double phi_min = std::numeric_limits<double>::infinity();
  for (int t = in.arrival_slot; t <= td; ++t) {
    if (in.cap[t - 1] > 0.0) {
      slots.push_back(t);
      cap_sum += in.cap[t - 1];
      phi_min = std::min(phi_min, in.phi[t - 1]);
    }
  }
  if (cap_sum < demand * (1.0 - 1e-12))
    throw InfeasibleDemand(fmt::format("infeasible demand: {} bits > {} bits of capacity by slot {}",
                                       demand, cap_sum, td));

  ThroughputPlan plan;
  plan.rates.assign(in.last_slot, 0.0);
  plan.completion_slot = td;
  plan.finished = true;

  auto rate_at = [&](int t, double log_nu) {
    const double r = in.tau[t - 1] * bw *
                     (log_nu - std::log(w1p * in.phi[t - 1] * kLn2)) / kLn2;
    return std::clamp(r, 0.0, in.cap[t - 1]);
  };
  auto total_at = [&](double log_nu) {
    double s = 0.0;
    for (int t : slots) s += rate_at(t, log_nu);
    return s;
  };

  double lo = std::log(w1p * phi_min * kLn2);
  double hi = std::log(w1p * in.channel.p_max * kLn2) + 1e-9;
  if (cap_sum <= demand * (1.0 + 1e-12)) {
    for (int t : slots) plan.rates[t - 1] = in.cap[t - 1];
  } else {
    // sum of rates is non-decreasing in the level; keep total_at(hi) >= demand
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (total_at(mid) >= demand)
        hi = mid;
      else
        lo = mid;
    }
    for (int t : slots) plan.rates[t - 1] = rate_at(t, hi);
    // remove the bisection overshoot along the water-level direction (dr/dlog nu ~ tau)
    double excess = -demand;
    for (int t : slots) excess += plan.rates[t - 1];
    for (int pass = 0; pass < 4 && excess > 0.0; ++pass) {
      double weight = 0.0;
      for (int t : slots)
        if (plan.rates[t - 1] > 0.0) weight += in.tau[t - 1];
      if (weight <= 0.0) break;
      double removed = 0.0;
      for (int t : slots) {
        double& r = plan.rates[t - 1];
        if (r <= 0.0) continue;
        const double cut = std::min(r, excess * in.tau[t - 1] / weight);
        r -= cut;
        removed += cut;
      }
      excess -= removed;
    }
  }
  plan.water_level = std::exp(hi);
  plan.objective = 0.0;
  for (int t : slots)
    plan.objective += in.weights.energy * slot_energy(plan.rates[t - 1], in.tau[t - 1], in.phi[t - 1], bw);
  return plan;
}

ThroughputPlan solve_case2(const DeterministicPlanInput& in) {
  const double bw = in.channel.slot_bandwidth();
  const double w1p = in.weights.energy / bw;
  ThroughputPlan plan;
  plan.rates.assign(in.last_slot, 0.0);
  plan.completion_slot = in.last_slot;
  plan.finished = false;
  double sent = 0.0;
  double energy = 0.0;
  for (int t = in.arrival_slot; t <= in.last_slot; ++t) {
    const double cap = in.cap[t - 1];
    if (cap <= 0.0) continue;
    const double ph = in.phi[t - 1];
    double r;
    if (w1p * ph * kLn2 >= in.weights.residual)
      r = 0.0;
    else if (w1p * in.channel.p_max * kLn2 <= in.weights.residual)
      r = cap;
    else
      r = in.tau[t - 1] * bw * std::log2(in.weights.residual / (w1p * ph * kLn2));
    r = std::clamp(r, 0.0, cap);
    plan.rates[t - 1] = r;
    sent += r;
    energy += slot_energy(r, in.tau[t - 1], ph, bw);
  }
  plan.residual = in.demand - sent;
  plan.objective = in.weights.energy * energy + in.weights.residual * std::max(plan.residual, 0.0);
  return plan;
}

double literal_energy_objective(const DeterministicPlanInput& in, const std::vector<double>& rates,
                                int td) {
  const double bw = in.channel.slot_bandwidth();
  double acc = 0.0;
  for (int t = in.arrival_slot; t <= td; ++t) {
    if (in.cap[t - 1] <= 0.0) continue;
    acc += in.tau[t - 1] * in.phi[t - 1] * std::exp2(rates[t - 1] / (in.tau[t - 1] * bw));
  }
  return in.weights.energy * acc;
}

VehiclePlan plan_vehicle(const DeterministicPlanInput& in) {
  VehiclePlan best;
  best.total_objective = std::numeric_limits<double>::infinity();
  for (int td = in.arrival_slot; td <= in.last_slot; ++td) {
    ThroughputPlan p;
    try {
      p = solve_case1(in, td);
    } catch (const InfeasibleDemand&) {
      continue;
    }
    const double total = (td - in.arrival_slot + 1) + p.objective;
    if (total < best.total_objective) {
      best.plan = std::move(p);
      best.total_objective = total;
      best.unfinished_case = false;
    }
  }
  ThroughputPlan p2 = solve_case2(in);
  if (p2.residual > kBitTolerance) {
    const double total = (in.last_slot - in.arrival_slot + 1) + p2.objective;
    if (total < best.total_objective) {
      best.plan = std::move(p2);
      best.total_objective = total;
      best.unfinished_case = true;
    }
  }
  return best;
}

namespace {

/// Positions reachable in each slot 1..T from the initial waypoint.
std::vector<std::vector<Vec2>> reachable_positions(const RouteModel& route, int slots) {
  std::vector<std::vector<Vec2>> out(slots);
  PositionDistribution d = point_mass(route, route.initial_index());
  for (int t = 1; t <= slots; ++t) {
    for (std::size_t w = 0; w < route.size(); ++w)
      if (d.probs[w] > 0.0) out[t - 1].push_back(route.waypoint(w));
    if (t < slots) d = propagate(route, d, 1);
  }
  return out;
}

std::vector<std::vector<Vec2>> all_average_trajectories(const ScenarioConfig& config) {
  std::vector<std::vector<Vec2>> avg;
  for (const auto& r : config.routes) avg.push_back(average_trajectory(r, config.slots));
  return avg;
}

}  // namespace

DeterministicPlanInput plan_input(const ScenarioConfig& config, const Association& assoc,
                                  const std::vector<Vec2>& avg_trajectory, std::size_t n) {
  DeterministicPlanInput in;
  in.arrival_slot = config.arrivals[n].slot;
  in.last_slot = config.slots;
  in.demand = config.arrivals[n].bits;
  in.channel = config.channel;
  in.weights = config.weights;
  const auto reach = reachable_positions(config.routes[n], config.slots);
  for (int t = 1; t <= config.slots; ++t) {
    const Vec2 bs_pos = config.bs.positions[assoc.bs_of(n, t)];
    const double tau = assoc.tau_of(n, t);
    const double ph = phi(pathloss(avg_trajectory[t - 1], bs_pos, config.channel), config.channel);
    const double worst = worst_position_cap(reach[t - 1], bs_pos, tau, config.channel);
    in.phi.push_back(ph);
    in.tau.push_back(tau);
    in.worst_cap.push_back(worst);
    in.cap.push_back(std::min(rate_cap(tau, ph, config.channel), worst));
  }
  return in;
}

ReferenceSchedule preallocate(const ScenarioConfig& config) {
  config.validate();
  const auto avg = all_average_trajectories(config);
  Association assoc = reference_association(avg, config.bs, config.channel);
  ReferenceSchedule sched(assoc, config.arrivals);
  for (std::size_t n = 0; n < config.vehicles(); ++n) {
    const auto in = plan_input(config, assoc, avg[n], n);
    const VehiclePlan vp = plan_vehicle(in);
    sched.set_plan(n, vp.plan.rates, in.worst_cap, vp.plan.completion_slot);
  }
  return sched;
}

ReferenceSchedule max_power_reference(const ScenarioConfig& config) {
  config.validate();
  const auto avg = all_average_trajectories(config);
  Association assoc = reference_association(avg, config.bs, config.channel);
  ReferenceSchedule sched(assoc, config.arrivals);
  for (std::size_t n = 0; n < config.vehicles(); ++n) {
    const auto in = plan_input(config, assoc, avg[n], n);
    std::vector<double> rates(config.slots, 0.0);
    double remaining = in.demand;
    int completion = config.slots;
    for (int t = in.arrival_slot; t <= config.slots; ++t) {
      const double r = std::min(in.worst_cap[t - 1], remaining);
      rates[t - 1] = r;
      remaining -= r;
      if (remaining <= kBitTolerance) {
        completion = t;
        break;
      }
    }
    sched.set_plan(n, rates, in.worst_cap, completion);
  }
  return sched;
}

}  // namespace offload
