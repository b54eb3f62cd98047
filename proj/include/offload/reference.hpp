#pragma once

#include <string>
#include <vector>

#include "offload/environment.hpp"

namespace offload {

/// Per-slot BS association and time share for all vehicles; slot-major.
struct Association {
  int slots = 0;
  std::size_t vehicles = 0;
  std::vector<std::size_t> bs;  // [(t-1) * vehicles + n]
  std::vector<double> tau;

  std::size_t bs_of(std::size_t n, int t) const { return bs[index(n, t)]; }
  double tau_of(std::size_t n, int t) const { return tau[index(n, t)]; }
  std::size_t index(std::size_t n, int t) const {
    return static_cast<std::size_t>(t - 1) * vehicles + n;
  }
};

/// Reference scheduling: fixed association/time share plus the current
/// reference rates, which are rewritten after every slot.
class ReferenceSchedule {
 public:
  ReferenceSchedule(Association association, std::vector<Arrival> arrivals);

  int slots() const { return assoc_.slots; }
  std::size_t vehicles() const { return assoc_.vehicles; }
  const Association& association() const { return assoc_; }
  const Arrival& arrival(std::size_t n) const { return arrivals_.at(n); }

  std::size_t bs(std::size_t n, int t) const { return assoc_.bs_of(n, t); }
  double tau(std::size_t n, int t) const { return assoc_.tau_of(n, t); }
  double offline_rate(std::size_t n, int t) const { return offline_[assoc_.index(n, t)]; }
  double worst_cap(std::size_t n, int t) const { return worst_cap_[assoc_.index(n, t)]; }
  double rate(std::size_t n, int t) const { return rate_[assoc_.index(n, t)]; }
  int completion_slot(std::size_t n) const { return completion_.at(n); }

  /// Installs an offline plan; the current reference rates are reset to it.
  void set_plan(std::size_t n, const std::vector<double>& rates, const std::vector<double>& worst_caps,
                int completion_slot);
  void set_rate(std::size_t n, int t, double r) { rate_[assoc_.index(n, t)] = r; }

  /// First slot >= from in which cumulative reference rates cover `buffer`,
  /// or slots()+1 if they never do.
  int planned_completion(std::size_t n, int from, double buffer) const;

 private:
  Association assoc_;
  std::vector<Arrival> arrivals_;
  std::vector<double> offline_;
  std::vector<double> worst_cap_;
  std::vector<double> rate_;
  std::vector<int> completion_;
};

/// Offline rate up to the planned completion slot, worst-position cap after it.
double auxiliary_rate(const ReferenceSchedule& sched, std::size_t n, int slot);

/// Rates for slots t+1..T that refill buffer d_next front-to-back from the
/// auxiliary rates (the Delta rule). Does not modify the schedule.
std::vector<double> refill(const ReferenceSchedule& sched, std::size_t n, int t, double d_next);

/// Rewrites the reference rates of slots t+1..T from the realized buffer d_{t+1}.
void update(ReferenceSchedule& sched, std::size_t n, int t, double d_next);

/// Expected cost of the updated reference from slot `from` on, for one vehicle
/// at waypoint `position` with `buffer` bits. Simulates the refilled rates
/// slot by slot, with the pathloss replaced by its conditional expectation.
CostBreakdown continuation_cost(const ReferenceSchedule& sched, std::size_t n, int from,
                                double buffer, std::size_t position, const ScenarioConfig& config);

/// Human-readable table of the schedule.
std::string dump_reference(const ReferenceSchedule& sched);

}  // namespace offload
