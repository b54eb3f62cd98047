#pragma once

#include <stdexcept>
#include <vector>

#include "offload/environment.hpp"
#include "offload/reference.hpp"

namespace offload {

/// Association to the strongest BS at each average position; equal time split
/// within a cell. Ties go to the lowest BS index.
Association reference_association(const std::vector<std::vector<Vec2>>& avg_trajectories,
                                  const BsLayout& bs, const ChannelParams& channel);

/// One vehicle's deterministic throughput problem. Slot-indexed vectors have
/// one entry per slot (index t-1).
struct DeterministicPlanInput {
  int arrival_slot = 1;
  int last_slot = 1;  // T
  double demand = 0.0;
  std::vector<double> phi;         // W, at the average position toward the reference BS
  std::vector<double> tau;         // reference time share
  std::vector<double> cap;         // min(power cap, worst-position cap); 0 where phi >= p_max
  std::vector<double> worst_cap;   // worst-position cap alone
  ChannelParams channel;
  Weights weights;
};

struct ThroughputPlan {
  std::vector<double> rates;  // one per slot
  int completion_slot = 0;    // t_d; last_slot for an unfinished plan
  bool finished = false;
  double residual = 0.0;
  /// omega_1 * sum over r > 0 of P * tau, plus omega_2 * residual for Case 2.
  double objective = 0.0;
  /// Case 1: the common marginal cost nu (= -mu). Unused for Case 2.
  double water_level = 0.0;
};

class InfeasibleDemand : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Energy-minimal rates over [arrival, completion_slot] that exactly deliver
/// the demand. Water-filling on the stationarity condition, with the common
/// level found by bisection.
ThroughputPlan solve_case1(const DeterministicPlanInput& input, int completion_slot);

/// Closed-form per-slot rates for the unfinished case. `finished` stays false;
/// residual <= 0 means the case does not apply.
ThroughputPlan solve_case2(const DeterministicPlanInput& input);

/// omega_1 * sum_t tau * phi * 2^{r/(tau T_s B)} over all slots in [arrival, t_d],
/// zero-rate slots included. This is the convex objective the water-filling minimizes.
double literal_energy_objective(const DeterministicPlanInput& input, const std::vector<double>& rates,
                                int completion_slot);

struct VehiclePlan {
  ThroughputPlan plan;
  double total_objective = 0.0;  // latency term + plan objective
  bool unfinished_case = false;
};

/// Linear search over the completion slot plus the unfinished case.
VehiclePlan plan_vehicle(const DeterministicPlanInput& input);

DeterministicPlanInput plan_input(const ScenarioConfig& config, const Association& assoc,
                                  const std::vector<Vec2>& avg_trajectory, std::size_t n);

ReferenceSchedule preallocate(const ScenarioConfig& config);

/// Reference built from full-power transmission along the same association:
/// the auxiliary rates are the worst-position caps from the arrival slot on.
ReferenceSchedule max_power_reference(const ScenarioConfig& config);

}  // namespace offload
