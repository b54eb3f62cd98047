#include "offload/environment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

namespace offload {

void ScenarioConfig::validate() const {
  if (slots < 1) throw std::invalid_argument("scenario needs at least one slot");
  if (routes.empty()) throw std::invalid_argument("scenario needs at least one vehicle");
  if (arrivals.size() != routes.size())
    throw std::invalid_argument("one arrival per vehicle is required");
  bs.validate();
  channel.validate();
  for (std::size_t n = 0; n < arrivals.size(); ++n) {
    if (arrivals[n].slot < 1 || arrivals[n].slot > slots)
      throw std::invalid_argument(fmt::format("vehicle {}: arrival slot {} outside [1, {}]", n,
                                              arrivals[n].slot, slots));
    if (!(arrivals[n].bits > 0.0))
      throw std::invalid_argument(fmt::format("vehicle {}: task size must be positive", n));
  }
  if (!(weights.energy > 0.0) || !(weights.residual > 0.0))
    throw std::invalid_argument("cost weights must be positive");
}

std::vector<double> realized_phi(const SystemState& state, const ScenarioConfig& config) {
  const std::size_t n_veh = config.vehicles(), n_bs = config.stations();
  std::vector<double> out(n_veh * n_bs);
  for (std::size_t n = 0; n < n_veh; ++n) {
    const Vec2 pos = config.routes[n].waypoint(state.positions[n]);
    for (std::size_t m = 0; m < n_bs; ++m)
      out[n * n_bs + m] = phi(pathloss(pos, config.bs.positions[m], config.channel), config.channel);
  }
  return out;
}

void validate_action(const SystemState& state, const SlotAction& action,
                     const ScenarioConfig& config) {
  const std::size_t n_veh = config.vehicles(), n_bs = config.stations();
  if (action.bs.size() != n_veh || action.tau.size() != n_veh || action.rates.size() != n_veh)
    throw std::invalid_argument("action vectors must have one entry per vehicle");
  std::vector<double> cell_time(n_bs, 0.0);
  for (std::size_t n = 0; n < n_veh; ++n) {
    if (action.bs[n] >= n_bs)
      throw ConstraintViolation(Constraint::UniqueAssociation,
                                fmt::format("C1: vehicle {} associated with unknown BS {}", n,
                                            action.bs[n]));
    if (!(action.tau[n] >= 0.0) || !std::isfinite(action.tau[n]))
      throw ConstraintViolation(Constraint::NonNegativeTime,
                                fmt::format("C2: vehicle {} has time ratio {}", n, action.tau[n]));
    if (!(action.rates[n] >= 0.0) || !std::isfinite(action.rates[n]))
      throw std::invalid_argument(fmt::format("vehicle {} has invalid rate {}", n, action.rates[n]));
    cell_time[action.bs[n]] += action.tau[n];
  }
  for (std::size_t m = 0; m < n_bs; ++m)
    if (cell_time[m] > 1.0 + 1e-9)
      throw ConstraintViolation(Constraint::CellTime,
                                fmt::format("C3: BS {} time ratios sum to {}", m, cell_time[m]));
  for (std::size_t n = 0; n < n_veh; ++n) {
    const Vec2 pos = config.routes[n].waypoint(state.positions[n]);
    const double ph =
        phi(pathloss(pos, config.bs.positions[action.bs[n]], config.channel), config.channel);
    const double p = required_power(action.rates[n], action.tau[n], ph, config.channel);
    if (p > config.channel.p_max * (1.0 + 1e-9))
      throw ConstraintViolation(Constraint::PeakPower,
                                fmt::format("C4: vehicle {} needs {} W for {} bits", n, p,
                                            action.rates[n]));
  }
}

double queue_step(double d, double r, int t, const Arrival& arrival) {
  if (r < 0.0) throw std::invalid_argument("queue_step: negative rate");
  double next;
  if (t < arrival.slot)
    next = 0.0;
  else if (t == arrival.slot)
    next = std::max(arrival.bits - r, 0.0);
  else
    next = std::max(d - r, 0.0);
  return next <= kBitTolerance ? 0.0 : next;
}

double next_buffer(double d, double r, int t, const Arrival& arrival) {
  if (t + 1 == arrival.slot) return arrival.bits;
  return queue_step(d, r, t, arrival);
}

CostBreakdown vehicle_slot_cost(const SystemState& state, const SlotAction& action,
                                const ScenarioConfig& config, std::size_t n) {
  CostBreakdown c;
  const double d = state.buffers[n];
  if (d > kBitTolerance) c.latency = 1.0;
  const double r = action.rates[n];
  if (r > 0.0) {
    const Vec2 pos = config.routes[n].waypoint(state.positions[n]);
    const double ph =
        phi(pathloss(pos, config.bs.positions[action.bs[n]], config.channel), config.channel);
    c.energy = required_power(r, action.tau[n], ph, config.channel) * action.tau[n];
  }
  if (state.slot == config.slots) c.residual = queue_step(d, r, state.slot, config.arrivals[n]);
  return c;
}

CostBreakdown slot_cost(const SystemState& state, const SlotAction& action,
                        const ScenarioConfig& config) {
  validate_action(state, action, config);
  CostBreakdown total;
  for (std::size_t n = 0; n < config.vehicles(); ++n)
    total += vehicle_slot_cost(state, action, config, n);
  return total;
}

SystemState initial_state(const ScenarioConfig& config, std::span<const std::size_t> positions) {
  SystemState s;
  s.slot = 1;
  s.positions.assign(positions.begin(), positions.end());
  s.buffers.resize(config.vehicles());
  for (std::size_t n = 0; n < config.vehicles(); ++n)
    s.buffers[n] = config.arrivals[n].slot == 1 ? config.arrivals[n].bits : 0.0;
  return s;
}

std::vector<std::vector<std::size_t>> sample_trajectories(const ScenarioConfig& config,
                                                          std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(config.vehicles());
  for (std::size_t n = 0; n < config.vehicles(); ++n) {
    Rng rng = Rng::substream(seed, 0x7261, n);
    out.push_back(sample_trajectory(config.routes[n], config.slots, rng));
  }
  return out;
}

EpisodeResult run_episode(Policy& policy, const ScenarioConfig& config,
                          const std::vector<std::vector<std::size_t>>& trajectories,
                          std::uint64_t seed) {
  const std::size_t n_veh = config.vehicles();
  if (trajectories.size() != n_veh) throw std::invalid_argument("one trajectory per vehicle");
  EpisodeResult result;
  result.seed = seed;
  result.completion_slot.assign(n_veh, -1);
  std::vector<std::size_t> pos(n_veh);
  for (std::size_t n = 0; n < n_veh; ++n) pos[n] = trajectories[n].at(0);
  SystemState state = initial_state(config, pos);

  for (int t = 1; t <= config.slots; ++t) {
    const SlotAction action = policy.act(state);
    CostBreakdown c;
    try {
      c = slot_cost(state, action, config);
    } catch (const ConstraintViolation& e) {
      throw ConstraintViolation(
          e.which(), fmt::format("policy {} slot {}: {}", policy.name(), t, e.what()));
    }
    result.per_slot.push_back(c);
    result.cost += c;

    SystemState next;
    next.slot = t + 1;
    next.buffers.resize(n_veh);
    next.positions.resize(n_veh);
    for (std::size_t n = 0; n < n_veh; ++n) {
      const double d = state.buffers[n];
      next.buffers[n] = next_buffer(d, action.rates[n], t, config.arrivals[n]);
      if (t >= config.arrivals[n].slot && d > kBitTolerance && next.buffers[n] == 0.0)
        result.completion_slot[n] = t;
      next.positions[n] = t < config.slots ? trajectories[n].at(t) : state.positions[n];
    }
    if (t < config.slots) policy.observe(next);
    state = std::move(next);
  }
  result.total_cost = result.cost.total(config.weights);
  result.safeguard = policy.safeguard();
  return result;
}

EpisodeResult run_episode(Policy& policy, const ScenarioConfig& config, std::uint64_t seed) {
  return run_episode(policy, config, sample_trajectories(config, seed), seed);
}

std::uint64_t trial_seed(std::uint64_t master, int trial, std::size_t policy, bool paired) {
  const std::uint64_t base = Rng::mix(master, static_cast<std::uint64_t>(trial));
  return paired ? base : Rng::mix(base, 0x1000 + policy);
}

EvaluationReport evaluate(const std::vector<NamedPolicy>& policies, const ScenarioConfig& config,
                          const EvaluationOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("evaluate: at least one trial is required");
  if (policies.empty()) throw std::invalid_argument("evaluate: no policies given");
  const std::size_t n_pol = policies.size();
  const std::size_t n_items = n_pol * static_cast<std::size_t>(options.trials);

  EvaluationReport report;
  report.policies.resize(n_pol);
  for (std::size_t p = 0; p < n_pol; ++p) {
    report.policies[p].name = policies[p].name;
    report.policies[p].trials.resize(options.trials);
  }

  std::atomic<std::size_t> cursor{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t item = cursor.fetch_add(1);
      if (item >= n_items) return;
      const int trial = static_cast<int>(item / n_pol);
      const std::size_t p = item % n_pol;
      try {
        const std::uint64_t seed = trial_seed(options.seed, trial, p, options.paired);
        auto policy = policies[p].make();
        report.policies[p].trials[trial] = run_episode(*policy, config, seed);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        cursor.store(n_items);
        return;
      }
    }
  };
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& s : report.policies) {
    const double k = static_cast<double>(s.trials.size());
    double sum = 0.0;
    for (const auto& r : s.trials) {
      sum += r.total_cost;
      s.sorted_costs.push_back(r.total_cost);
      s.safeguard.slots_checked += r.safeguard.slots_checked;
      s.safeguard.violations += r.safeguard.violations;
      s.safeguard.improved += r.safeguard.improved;
    }
    s.mean = sum / k;
    double ss = 0.0;
    for (const auto& r : s.trials) ss += (r.total_cost - s.mean) * (r.total_cost - s.mean);
    s.stddev = s.trials.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    std::sort(s.sorted_costs.begin(), s.sorted_costs.end());
  }
  report.suppression.assign(n_pol, std::vector<double>(n_pol, 0.0));
  for (std::size_t a = 0; a < n_pol; ++a)
    for (std::size_t b = 0; b < n_pol; ++b) {
      const double mb = report.policies[b].mean;
      report.suppression[a][b] = mb != 0.0 ? (mb - report.policies[a].mean) / mb : 0.0;
    }
  return report;
}

}  // namespace offload
