#include "offload/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/lambert_w.hpp>

namespace offload {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kEtaFloor = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

/// Energy-optimal exponent u = b / (tau T_s B) for a cell multiplier lambda >= 0:
/// the root of phi 2^u (u ln2 - 1) = lambda.
double exponent_for_multiplier(double lambda, double phi_value) {
  const double x = lambda / (std::numbers::e * phi_value);
  return (1.0 + boost::math::lambert_w0(x)) / kLn2;
}

double cell_energy(double bits, double tau, double phi_value, double bw) {
  if (bits <= 0.0) return 0.0;
  if (tau <= 0.0) return kInf;
  return tau * phi_value * std::exp2(bits / (tau * bw));
}

/// Euclidean projection onto the probability simplex.
void project_simplex(std::vector<double>& v) {
  std::vector<double> s(v);
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    cumulative += s[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (s[k] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

std::size_t argmin_row(std::span<const double> phi, std::size_t n, std::size_t stations) {
  std::size_t best = 0;
  for (std::size_t m = 1; m < stations; ++m)
    if (phi[n * stations + m] < phi[n * stations + best]) best = m;
  return best;
}

}  // namespace

CellTimeSolution solve_cell_time(std::span<const double> bits, std::span<const double> phi,
                                 std::span<const double> lower, double bw) {
  const std::size_t count = bits.size();
  CellTimeSolution sol;
  sol.tau.assign(count, 0.0);
  std::vector<std::size_t> act;
  for (std::size_t i = 0; i < count; ++i)
    if (bits[i] > 0.0) act.push_back(i);
  if (act.empty()) return sol;

  auto lo = [&](std::size_t i) { return lower.empty() ? 0.0 : std::clamp(lower[i], 0.0, 1.0); };
  auto tau_at = [&](std::size_t i, double lambda) {
    const double u = exponent_for_multiplier(lambda, phi[i]);
    return std::clamp(bits[i] / (bw * u), lo(i), 1.0);
  };
  auto fill = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i : act) {
      sol.tau[i] = tau_at(i, lambda);
      s += sol.tau[i];
    }
    return s;
  };

  double lambda = 0.0;
  if (fill(0.0) > 1.0) {
    // total time is decreasing in lambda; solve sum = 1 in s = log(lambda)
    double phi_max = 0.0;
    for (std::size_t i : act) phi_max = std::max(phi_max, phi[i]);
    double s_hi = std::log(std::numbers::e * phi_max);
    while (fill(std::exp(s_hi)) > 1.0 && s_hi < 700.0) s_hi += 4.0;
    double s_lo = s_hi - 4.0;
    while (fill(std::exp(s_lo)) <= 1.0 && s_lo > -700.0) s_lo -= 4.0;
    double s = 0.5 * (s_lo + s_hi);
    for (int it = 0; it < 200; ++it) {
      const double lam = std::exp(s);
      double h = -1.0, dh = 0.0;
      for (std::size_t i : act) {
        const double u = exponent_for_multiplier(lam, phi[i]);
        const double raw = bits[i] / (bw * u);
        const double t = std::clamp(raw, lo(i), 1.0);
        h += t;
        if (t == raw) {
          const double du_dlam = 1.0 / (phi[i] * kLn2 * kLn2 * u * std::exp2(u));
          dh -= raw / u * du_dlam * lam;
        }
      }
      if (h > 0.0)
        s_lo = s;
      else
        s_hi = s;
      if (std::abs(h) <= 1e-14 || s_hi - s_lo <= 1e-15 * std::max(1.0, std::abs(s))) break;
      double next = dh < 0.0 ? s - h / dh : 0.5 * (s_lo + s_hi);
      if (!(next > s_lo && next < s_hi)) next = 0.5 * (s_lo + s_hi);
      s = next;
    }
    lambda = std::exp(s);
    if (fill(lambda) > 1.0 + 1e-12) {
      lambda = std::exp(s_hi);
      fill(lambda);
    }
  }
  sol.multiplier = lambda;
  for (std::size_t i : act) sol.energy += cell_energy(bits[i], sol.tau[i], phi[i], bw);
  return sol;
}

double relaxed_objective(std::span<const double> rates, std::span<const double> phi,
                         std::size_t stations, std::span<const double> tau,
                         std::span<const double> eta, const ChannelParams& channel,
                         double energy_weight) {
  const double bw = channel.slot_bandwidth();
  double acc = 0.0;
  for (std::size_t n = 0; n < rates.size(); ++n)
    for (std::size_t m = 0; m < stations; ++m) {
      const std::size_t i = n * stations + m;
      acc += cell_energy(eta[i] * rates[n], tau[i], phi[i], bw);
    }
  return energy_weight * acc;
}

RelaxedAllocation solve_relaxed(std::span<const double> rates, std::span<const double> phi,
                                std::size_t stations, const ChannelParams& channel,
                                double energy_weight, const RelaxedOptions& options) {
  const std::size_t n_veh = rates.size();
  const double bw = channel.slot_bandwidth();
  RelaxedAllocation out;
  out.vehicles = n_veh;
  out.stations = stations;
  out.tau.assign(n_veh * stations, 0.0);
  out.eta.assign(n_veh * stations, 0.0);

  std::vector<std::size_t> carriers;
  for (std::size_t n = 0; n < n_veh; ++n) {
    out.eta[n * stations + argmin_row(phi, n, stations)] = 1.0;
    if (rates[n] > 0.0) carriers.push_back(n);
  }
  if (carriers.empty()) return out;

  std::vector<double> marginal(n_veh * stations, 0.0);
  std::vector<double> cell_bits, cell_phi;
  std::vector<std::size_t> cell_members;
  // objective, time shares and per-bit marginal costs for the given splits
  auto evaluate = [&](const std::vector<double>& eta, std::vector<double>& tau,
                      std::vector<double>& grad) {
    double total = 0.0;
    std::fill(tau.begin(), tau.end(), 0.0);
    for (std::size_t m = 0; m < stations; ++m) {
      cell_bits.clear();
      cell_phi.clear();
      cell_members.clear();
      for (std::size_t n : carriers) {
        const double e = eta[n * stations + m];
        if (e > kEtaFloor) {
          cell_members.push_back(n);
          cell_bits.push_back(e * rates[n]);
          cell_phi.push_back(phi[n * stations + m]);
        }
      }
      const CellTimeSolution sol = solve_cell_time(cell_bits, cell_phi, {}, bw);
      total += sol.energy;
      for (std::size_t k = 0; k < cell_members.size(); ++k)
        tau[cell_members[k] * stations + m] = sol.tau[k];
      for (std::size_t n : carriers) {
        const std::size_t i = n * stations + m;
        const double e = eta[i];
        const double u = e > kEtaFloor ? e * rates[n] / (tau[i] * bw)
                                       : exponent_for_multiplier(sol.multiplier, phi[i]);
        grad[i] = phi[i] * kLn2 * std::exp2(u) / bw;
      }
    }
    return energy_weight * total;
  };

  std::vector<double> eta = out.eta, tau(out.tau.size()), grad(marginal.size());
  double value = evaluate(eta, tau, grad);
  std::vector<double> trial_eta(eta.size()), trial_tau(tau.size()), trial_grad(grad.size());
  std::vector<double> row(stations);
  double alpha = 1.0;
  out.converged = false;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    double residual = 0.0;
    for (std::size_t n : carriers) {
      const double cmin = *std::min_element(grad.begin() + n * stations, grad.begin() + (n + 1) * stations);
      double r = 0.0;
      for (std::size_t m = 0; m < stations; ++m)
        r += eta[n * stations + m] * (grad[n * stations + m] - cmin) / cmin;
      residual = std::max(residual, r);
    }
    if (residual <= options.kkt_tolerance) {
      out.converged = true;
      break;
    }
    bool accepted = false;
    for (int back = 0; back < 60 && !accepted; ++back) {
      trial_eta = eta;
      double predicted = 0.0;
      for (std::size_t n : carriers) {
        const double cmin = *std::min_element(grad.begin() + n * stations, grad.begin() + (n + 1) * stations);
        for (std::size_t m = 0; m < stations; ++m)
          row[m] = eta[n * stations + m] - alpha * grad[n * stations + m] / cmin;
        project_simplex(row);
        for (std::size_t m = 0; m < stations; ++m) {
          trial_eta[n * stations + m] = row[m] < kEtaFloor ? 0.0 : row[m];
          predicted += energy_weight * rates[n] * grad[n * stations + m] *
                       (trial_eta[n * stations + m] - eta[n * stations + m]);
        }
        // keep the row on the simplex after flooring
        double s = 0.0;
        for (std::size_t m = 0; m < stations; ++m) s += trial_eta[n * stations + m];
        for (std::size_t m = 0; m < stations; ++m) trial_eta[n * stations + m] /= s;
      }
      if (predicted >= 0.0) break;
      const double trial_value = evaluate(trial_eta, trial_tau, trial_grad);
      if (trial_value <= value + 1e-4 * predicted) {
        accepted = true;
        eta.swap(trial_eta);
        tau.swap(trial_tau);
        grad.swap(trial_grad);
        value = trial_value;
      } else {
        alpha *= 0.5;
      }
    }
    if (!accepted) {
      // no descent left at machine precision
      out.converged = true;
      break;
    }
    alpha = std::min(alpha * 2.0, 1e6);
  }
  out.iterations = it;
  for (std::size_t n : carriers)
    for (std::size_t m = 0; m < stations; ++m) out.eta[n * stations + m] = eta[n * stations + m];
  out.tau = tau;
  out.objective = value;
  return out;
}

std::vector<std::size_t> round_association(const RelaxedAllocation& alloc) {
  std::vector<std::size_t> bs(alloc.vehicles, 0);
  for (std::size_t n = 0; n < alloc.vehicles; ++n) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < alloc.stations; ++m)
      if (alloc.eta_at(n, m) > alloc.eta_at(n, best)) best = m;
    bs[n] = best;
  }
  return bs;
}

std::vector<double> optimize_time(const std::vector<std::size_t>& bs, std::span<const double> rates,
                                  std::span<const double> phi, std::size_t stations,
                                  const std::vector<bool>& wants_time, const ChannelParams& channel) {
  const std::size_t n_veh = bs.size();
  const double bw = channel.slot_bandwidth();
  std::vector<double> tau(n_veh, 0.0);
  for (std::size_t m = 0; m < stations; ++m) {
    std::vector<std::size_t> carriers, idle;
    std::vector<double> bits, ph, lower;
    double lower_sum = 0.0;
    for (std::size_t n = 0; n < n_veh; ++n) {
      if (bs[n] != m) continue;
      if (rates[n] > 0.0) {
        const double p = phi[n * stations + m];
        carriers.push_back(n);
        bits.push_back(rates[n]);
        ph.push_back(p);
        const double lo = p < channel.p_max ? rates[n] / (bw * std::log2(channel.p_max / p)) : 0.0;
        lower.push_back(lo);
        lower_sum += lo;
      } else if (wants_time[n]) {
        idle.push_back(n);
      }
    }
    if (lower_sum > 1.0) std::fill(lower.begin(), lower.end(), 0.0);
    const CellTimeSolution sol = solve_cell_time(bits, ph, lower, bw);
    double used = 0.0;
    for (std::size_t k = 0; k < carriers.size(); ++k) {
      tau[carriers[k]] = sol.tau[k];
      used += sol.tau[k];
    }
    const double leftover = std::max(1.0 - used, 0.0);
    if (leftover <= 0.0) continue;
    if (!idle.empty()) {
      for (std::size_t n : idle) tau[n] = leftover / static_cast<double>(idle.size());
    } else if (used > 0.0) {
      // idle time is handed to the carriers so the next rate step can use it
      for (std::size_t n : carriers) tau[n] = std::min(1.0, tau[n] / used);
    }
  }
  return tau;
}

double rate_objective(const RateProblem& p, double rate) {
  const double bw = p.slot_bandwidth;
  const double energy = rate > 0.0 ? p.tau * p.phi * std::exp2(rate / (p.tau * bw)) : 0.0;
  double rest = std::max(p.buffer - rate, 0.0);
  if (rest <= kBitTolerance) rest = 0.0;
  static const TailPlan kEmpty;
  const TailPlan& tail = p.tail ? *p.tail : kEmpty;
  return p.weights.energy * energy + f1(rest, tail, p.weights.residual) +
         p.weights.energy * f2(rest, tail, bw);
}

double optimize_rate(const RateProblem& p) {
  const double d = p.buffer;
  if (d <= kBitTolerance) return 0.0;
  const double hi = std::min(p.cap, d);
  if (!(hi > 0.0) || !(p.tau > 0.0)) return 0.0;
  const double bw = p.slot_bandwidth;
  static const TailPlan kEmpty;
  const TailPlan& tail = p.tail ? *p.tail : kEmpty;

  std::vector<double> candidates{0.0, hi};
  auto add = [&](double r, double a, double b) {
    a = std::max(a, 0.0);
    b = std::min(b, hi);
    if (a <= b) candidates.push_back(std::clamp(r, a, b));
  };
  double cumulative = 0.0;
  for (std::size_t k = 0; k < tail.size(); ++k) {
    const double rk = tail.rates[k];
    const double next = cumulative + rk;
    add(d - cumulative, 0.0, hi);
    if (rk > 0.0) {
      // d - r lands inside tail slot k, which then carries d - r - S_k bits
      const double tk = tail.tau[k];
      const double stationary =
          (bw * std::log2(tail.phibar[k] / p.phi) + (d - cumulative) / tk) / (1.0 / p.tau + 1.0 / tk);
      add(stationary, d - next, d - cumulative);
    }
    cumulative = next;
  }
  add(d - cumulative, 0.0, hi);
  if (d - cumulative > 0.0) {
    // unfinished within the horizon: marginal energy meets the residual weight
    const double stationary = p.tau * bw *
                              std::log2(p.weights.residual * bw / (p.weights.energy * p.phi * kLn2));
    add(stationary, 0.0, d - cumulative);
  }

  std::sort(candidates.begin(), candidates.end());
  double best_r = 0.0;
  double best = kInf;
  for (double r : candidates) {
    const double g = rate_objective(p, r);
    if (g < best) {
      best = g;
      best_r = r;
    }
  }
  return best_r;
}

SlotAction reference_action(const SystemState& state, const ReferenceSchedule& sched,
                            const ScenarioConfig& config) {
  const int t = state.slot;
  const std::size_t n_veh = config.vehicles();
  SlotAction a;
  a.bs.resize(n_veh);
  a.tau.resize(n_veh);
  a.rates.assign(n_veh, 0.0);
  for (std::size_t n = 0; n < n_veh; ++n) {
    a.bs[n] = sched.bs(n, t);
    a.tau[n] = sched.tau(n, t);
    const double d = state.buffers[n];
    if (t < config.arrivals[n].slot || d <= kBitTolerance) continue;
    const Vec2 pos = config.routes[n].waypoint(state.positions[n]);
    const double ph =
        phi(pathloss(pos, config.bs.positions[a.bs[n]], config.channel), config.channel);
    a.rates[n] = std::min({sched.rate(n, t), d, rate_cap(a.tau[n], ph, config.channel)});
  }
  return a;
}

double q_value(const SystemState& state, const SlotAction& action, const ReferenceSchedule& sched,
               const ConditionalPhiTable& table, const ScenarioConfig& config) {
  return slot_cost(state, action, config).total(config.weights) +
         expected_next_value(state, action.rates, sched, table, config);
}

namespace {

/// Q-values of candidate actions for one state, with the per-vehicle
/// expected tails computed once.
class SlotEvaluator {
 public:
  SlotEvaluator(const SystemState& state, const ReferenceSchedule& sched,
                const ConditionalPhiTable& table, const ScenarioConfig& config)
      : state_(state), config_(config), phi_(realized_phi(state, config)) {
    if (state.slot < config.slots)
      for (std::size_t n = 0; n < config.vehicles(); ++n)
        tails_.push_back(expected_tail_plan(sched, table, n, state.slot, state.positions[n]));
  }

  const std::vector<double>& phi() const { return phi_; }
  const TailPlan* tail(std::size_t n) const { return tails_.empty() ? nullptr : &tails_[n]; }

  double q(const SlotAction& a) const {
    const Weights& w = config_.weights;
    const ChannelParams& ch = config_.channel;
    const int t = state_.slot;
    const std::size_t m_count = config_.stations();
    double total = 0.0;
    for (std::size_t n = 0; n < config_.vehicles(); ++n) {
      const double d = state_.buffers[n];
      const double r = a.rates[n];
      if (d > kBitTolerance) total += 1.0;
      if (r > 0.0)
        total += w.energy * (required_power(r, a.tau[n], phi_[n * m_count + a.bs[n]], ch) * a.tau[n]);
      const Arrival& arr = config_.arrivals[n];
      if (t == config_.slots) {
        total += w.residual * queue_step(d, r, t, arr);
      } else {
        const double next = next_buffer(d, r, t, arr);
        if (next > kBitTolerance)
          total += f1(next, tails_[n], w.residual) + w.energy * f2(next, tails_[n], ch.slot_bandwidth());
      }
    }
    return total;
  }

 private:
  const SystemState& state_;
  const ScenarioConfig& config_;
  std::vector<double> phi_;
  std::vector<TailPlan> tails_;
};

std::vector<double> rate_step(const SystemState& state, const SlotEvaluator& eval,
                              const std::vector<std::size_t>& bs, const std::vector<double>& tau,
                              const ScenarioConfig& config) {
  const std::size_t m_count = config.stations();
  std::vector<double> rates(state.buffers.size(), 0.0);
  for (std::size_t n = 0; n < rates.size(); ++n) {
    if (state.slot < config.arrivals[n].slot || state.buffers[n] <= kBitTolerance) continue;
    RateProblem p;
    p.buffer = state.buffers[n];
    p.tau = tau[n];
    p.phi = eval.phi()[n * m_count + bs[n]];
    p.cap = rate_cap(p.tau, p.phi, config.channel);
    p.tail = eval.tail(n);
    p.weights = config.weights;
    p.slot_bandwidth = config.channel.slot_bandwidth();
    rates[n] = optimize_rate(p);
  }
  return rates;
}

}  // namespace

ImprovementResult improve_slot(const SystemState& state, const ReferenceSchedule& sched,
                               const ConditionalPhiTable& table, const ScenarioConfig& config,
                               const ImprovementOptions& options) {
  ImprovementResult res;
  res.reference = reference_action(state, sched, config);
  const SlotEvaluator eval(state, sched, table, config);
  res.q_reference = eval.q(res.reference);

  std::vector<bool> active(config.vehicles());
  bool any_active = false;
  for (std::size_t n = 0; n < active.size(); ++n) {
    active[n] = state.slot >= config.arrivals[n].slot && state.buffers[n] > kBitTolerance;
    any_active = any_active || active[n];
  }

  SlotAction current = res.reference;
  double value = res.q_reference;
  res.trace.push_back(value);
  bool moved = false;
  auto consider = [&](SlotAction candidate) {
    const double q = eval.q(candidate);
    if (!(q < value)) return false;
    const double gain = (value - q) / std::max(std::abs(value), 1e-300);
    current = std::move(candidate);
    value = q;
    res.trace.push_back(q);
    moved = true;
    return gain >= options.tolerance;
  };

  if (any_active && options.max_rounds > 0) {
    // rate step against the reference association first
    SlotAction start = res.reference;
    start.rates = rate_step(state, eval, start.bs, start.tau, config);
    consider(std::move(start));
    for (int round = 0; round < options.max_rounds; ++round) {
      const RelaxedAllocation relaxed = solve_relaxed(current.rates, eval.phi(), config.stations(),
                                                      config.channel, config.weights.energy,
                                                      options.relaxed);
      res.relaxed_converged = res.relaxed_converged && relaxed.converged;
      SlotAction next;
      next.bs = round_association(relaxed);
      next.tau = optimize_time(next.bs, current.rates, eval.phi(), config.stations(), active,
                               config.channel);
      next.rates = rate_step(state, eval, next.bs, next.tau, config);
      ++res.rounds;
      if (!consider(std::move(next))) break;
    }
  }

  res.q_optimized = value;
  res.optimized_applied = moved && value <= res.q_reference;
  res.action = res.optimized_applied ? current : res.reference;
  res.q_chosen = res.optimized_applied ? value : res.q_reference;
  return res;
}

}  // namespace offload
