#pragma once

#include <vector>

#include "offload/environment.hpp"
#include "offload/reference.hpp"

namespace offload {

/// Conditional effective-noise constants for every vehicle, start slot,
/// start waypoint and target slot, toward the reference BS of the target
/// slot. Depends only on the association, so it is built once per schedule
/// and shared read-only.
class ConditionalPhiTable {
 public:
  ConditionalPhiTable(const ScenarioConfig& config, const Association& assoc);

  /// phi-bar of `target` slot given waypoint `w` in slot `from` (from <= target).
  double operator()(std::size_t n, int from, std::size_t w, int target) const {
    return data_[n][offset(n, from, w, target)];
  }

 private:
  std::size_t offset(std::size_t n, int from, std::size_t w, int target) const {
    return ((static_cast<std::size_t>(target - 1) * slots_ + (from - 1)) * sizes_[n]) + w;
  }
  std::size_t slots_;
  std::vector<std::size_t> sizes_;
  std::vector<std::vector<double>> data_;
};

/// One vehicle's reference tail from slot `from` to T.
struct TailPlan {
  std::vector<double> rates;   // auxiliary rates
  std::vector<double> tau;     // reference time share
  std::vector<double> phibar;  // W

  std::size_t size() const { return rates.size(); }
};

/// Tail conditioned on waypoint w in slot `from`.
TailPlan tail_plan(const ReferenceSchedule& sched, const ConditionalPhiTable& table, std::size_t n,
                   int from, std::size_t w);

/// Tail for slots t+1..T with phi-bar averaged over the next waypoint given
/// waypoint w in slot t. Equal to the successor-weighted average of
/// tail_plan(.., t+1, l', ..) by the tower property.
TailPlan expected_tail_plan(const ReferenceSchedule& sched, const ConditionalPhiTable& table,
                            std::size_t n, int t, std::size_t w);

/// Latency plus residual penalty of the refilled tail.
double f1(double d, const TailPlan& tail, double residual_weight);

/// Expected energy (sum of tau * phi-bar * 2^{r/(tau T_s B)}) of the refilled tail.
double f2(double d, const TailPlan& tail, double slot_bandwidth);

double vehicle_value(double d, std::size_t position, int from, std::size_t n,
                     const ReferenceSchedule& sched, const ConditionalPhiTable& table,
                     const ScenarioConfig& config);

/// Sum of vehicle values for a start-of-slot state; zero past the last slot.
double state_value(const SystemState& state, const ReferenceSchedule& sched,
                   const ConditionalPhiTable& table, const ScenarioConfig& config);

/// Expectation of the approximate value of the next state, over the next
/// positions, when `rates` are transmitted in the state's slot. Buffers move
/// deterministically, so the sum runs over one vehicle's successors at a time.
double expected_next_value(const SystemState& state, const std::vector<double>& rates,
                           const ReferenceSchedule& sched, const ConditionalPhiTable& table,
                           const ScenarioConfig& config);

}  // namespace offload
