#include "offload/reference.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace offload {

ReferenceSchedule::ReferenceSchedule(Association association, std::vector<Arrival> arrivals)
    : assoc_(std::move(association)), arrivals_(std::move(arrivals)) {
  const std::size_t cells = static_cast<std::size_t>(assoc_.slots) * assoc_.vehicles;
  if (assoc_.bs.size() != cells || assoc_.tau.size() != cells)
    throw std::invalid_argument("association size does not match slots x vehicles");
  if (arrivals_.size() != assoc_.vehicles)
    throw std::invalid_argument("one arrival per vehicle is required");
  offline_.assign(cells, 0.0);
  worst_cap_.assign(cells, 0.0);
  rate_.assign(cells, 0.0);
  completion_.assign(assoc_.vehicles, assoc_.slots);
}

void ReferenceSchedule::set_plan(std::size_t n, const std::vector<double>& rates,
                                 const std::vector<double>& worst_caps, int completion_slot) {
  if (rates.size() != static_cast<std::size_t>(slots()) || worst_caps.size() != rates.size())
    throw std::invalid_argument("plan vectors must cover every slot");
  for (int t = 1; t <= slots(); ++t) {
    const auto i = assoc_.index(n, t);
    offline_[i] = rates[t - 1];
    rate_[i] = rates[t - 1];
    worst_cap_[i] = worst_caps[t - 1];
  }
  completion_.at(n) = completion_slot;
}

int ReferenceSchedule::planned_completion(std::size_t n, int from, double buffer) const {
  double acc = 0.0;
  for (int t = from; t <= slots(); ++t) {
    acc += rate(n, t);
    if (buffer - acc <= kBitTolerance) return t;
  }
  return slots() + 1;
}

double auxiliary_rate(const ReferenceSchedule& sched, std::size_t n, int slot) {
  return slot <= sched.completion_slot(n) ? sched.offline_rate(n, slot) : sched.worst_cap(n, slot);
}

std::vector<double> refill(const ReferenceSchedule& sched, std::size_t n, int t, double d_next) {
  if (d_next < 0.0) throw std::invalid_argument("refill: negative buffer");
  std::vector<double> out;
  out.reserve(std::max(0, sched.slots() - t));
  double cumulative = 0.0;
  double prev_delta = d_next;  // Delta^0
  for (int k = 1; t + k <= sched.slots(); ++k) {
    const double rs = auxiliary_rate(sched, n, t + k);
    cumulative += rs;
    const double delta = d_next - cumulative;
    if (delta >= -kBitTolerance) {
      out.push_back(rs);
    } else {
      const double rest = prev_delta > kBitTolerance ? prev_delta : 0.0;
      out.push_back(rest);
    }
    prev_delta = delta;
  }
  return out;
}

void update(ReferenceSchedule& sched, std::size_t n, int t, double d_next) {
  const auto rates = refill(sched, n, t, d_next);
  for (std::size_t k = 0; k < rates.size(); ++k) sched.set_rate(n, t + 1 + static_cast<int>(k), rates[k]);
}

CostBreakdown continuation_cost(const ReferenceSchedule& sched, std::size_t n, int from,
                                double buffer, std::size_t position, const ScenarioConfig& config) {
  CostBreakdown c;
  if (buffer <= kBitTolerance) return c;
  const auto rates = refill(sched, n, from - 1, buffer);
  const double bw = config.channel.slot_bandwidth();
  double remaining = buffer;
  for (int s = from; s <= sched.slots(); ++s) {
    const double r = rates[s - from];
    if (remaining > kBitTolerance) c.latency += 1.0;
    if (r > 0.0) {
      const double tau = sched.tau(n, s);
      const double ph = conditional_phi(config.routes[n], position, s - from,
                                        config.bs.positions[sched.bs(n, s)], config.channel);
      c.energy += tau * ph * std::exp2(r / (tau * bw));
    }
    remaining = std::max(remaining - r, 0.0);
  }
  c.residual = remaining > kBitTolerance ? remaining : 0.0;
  return c;
}

std::string dump_reference(const ReferenceSchedule& sched) {
  std::string out;
  for (std::size_t n = 0; n < sched.vehicles(); ++n) {
    const Arrival& a = sched.arrival(n);
    out += fmt::format("# vehicle {}: arrival slot {}, {:.6g} bits, completion slot {}\n", n,
                       a.slot, a.bits, sched.completion_slot(n));
    out += "slot,bs,tau,offline_rate,worst_cap,auxiliary_rate,reference_rate\n";
    for (int t = 1; t <= sched.slots(); ++t)
      out += fmt::format("{},{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", t, sched.bs(n, t),
                         sched.tau(n, t), sched.offline_rate(n, t), sched.worst_cap(n, t),
                         auxiliary_rate(sched, n, t), sched.rate(n, t));
  }
  return out;
}

}  // namespace offload
