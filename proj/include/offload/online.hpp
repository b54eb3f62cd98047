#pragma once

#include <span>
#include <vector>

#include "offload/environment.hpp"
#include "offload/reference.hpp"
#include "offload/valuation.hpp"

namespace offload {

/// Relaxed association/time split for one slot. Row-major N x M.
struct RelaxedAllocation {
  std::size_t vehicles = 0;
  std::size_t stations = 0;
  std::vector<double> tau;
  std::vector<double> eta;
  double objective = 0.0;  // omega_1 * sum tau * Phi * 2^{eta r / (tau T_s B)}
  int iterations = 0;
  bool converged = true;

  double tau_at(std::size_t n, std::size_t m) const { return tau[n * stations + m]; }
  double eta_at(std::size_t n, std::size_t m) const { return eta[n * stations + m]; }
};

struct RelaxedOptions {
  double kkt_tolerance = 1e-7;
  int max_iterations = 10000;
};

/// Minimizes the relaxed slot energy over split fractions and time shares
/// with the rates fixed. Projected gradient on the split fractions; for fixed
/// splits the per-cell time problem is solved exactly. `phi` is row-major N x M.
RelaxedAllocation solve_relaxed(std::span<const double> rates, std::span<const double> phi,
                                std::size_t stations, const ChannelParams& channel,
                                double energy_weight, const RelaxedOptions& options = {});

/// The relaxed objective at arbitrary (tau, eta); infinite if some cell
/// carries bits with zero time.
double relaxed_objective(std::span<const double> rates, std::span<const double> phi,
                         std::size_t stations, std::span<const double> tau,
                         std::span<const double> eta, const ChannelParams& channel,
                         double energy_weight);

/// Row-wise argmax of eta; ties go to the lowest index.
std::vector<std::size_t> round_association(const RelaxedAllocation& alloc);

struct CellTimeSolution {
  std::vector<double> tau;
  double multiplier = 0.0;  // Lagrange multiplier of the cell-time budget
  double energy = 0.0;      // sum tau * Phi * 2^{bits / (tau T_s B)} over bits > 0
};

/// min sum_i tau_i Phi_i 2^{b_i/(tau_i T_s B)} s.t. sum tau <= 1, lower_i <= tau_i <= 1.
/// Entries with zero bits get tau 0. Requires sum of lower bounds <= 1.
CellTimeSolution solve_cell_time(std::span<const double> bits, std::span<const double> phi,
                                 std::span<const double> lower, double slot_bandwidth);

/// Time shares for a fixed association and fixed rates, one cell at a time.
/// The peak-power lower bound on tau is kept when the cell can honour it.
/// Unused cell time goes to vehicles that want time (non-empty buffer) but
/// carry no bits this round, so a later rate step can use it.
std::vector<double> optimize_time(const std::vector<std::size_t>& bs, std::span<const double> rates,
                                  std::span<const double> phi, std::size_t stations,
                                  const std::vector<bool>& wants_time, const ChannelParams& channel);

/// One vehicle's throughput subproblem for the current slot.
struct RateProblem {
  double buffer = 0.0;  // d_t (bits)
  double tau = 0.0;
  double phi = 0.0;  // at the realized position toward the chosen BS
  double cap = 0.0;  // largest admissible rate
  /// Reference tail for slots t+1..T, phi-bar averaged over the next waypoint.
  /// Empty in the last slot.
  const TailPlan* tail = nullptr;
  Weights weights;
  double slot_bandwidth = 0.0;
};

/// omega_1 * energy(r) + f1(d - r) + omega_1 * f2(d - r).
double rate_objective(const RateProblem& p, double rate);

/// Global minimizer over [0, min(cap, d)]. Each piece between breakpoints is
/// convex; its stationary point has a closed form. Ties go to the smaller rate.
double optimize_rate(const RateProblem& p);

/// The reference action for the state: reference BS and time share, reference
/// rate clamped to the buffer and to the cap at the realized position.
SlotAction reference_action(const SystemState& state, const ReferenceSchedule& sched,
                            const ScenarioConfig& config);

/// Slot cost plus the expected approximate value of the next state.
double q_value(const SystemState& state, const SlotAction& action, const ReferenceSchedule& sched,
               const ConditionalPhiTable& table, const ScenarioConfig& config);

struct ImprovementOptions {
  int max_rounds = 20;  // 0 disables optimization
  double tolerance = 1e-6;
  RelaxedOptions relaxed;
};

struct ImprovementResult {
  SlotAction action;
  SlotAction reference;
  double q_reference = 0.0;
  double q_optimized = 0.0;
  double q_chosen = 0.0;
  bool optimized_applied = false;
  int rounds = 0;
  std::vector<double> trace;  // accepted Q after the start point and each round
  bool relaxed_converged = true;
};

ImprovementResult improve_slot(const SystemState& state, const ReferenceSchedule& sched,
                               const ConditionalPhiTable& table, const ScenarioConfig& config,
                               const ImprovementOptions& options = {});

}  // namespace offload
