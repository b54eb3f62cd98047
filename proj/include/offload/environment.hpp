#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "offload/channel.hpp"
#include "offload/mobility.hpp"

namespace offload {

/// Buffers at or below this many bits count as empty. Keeps rounding dust
/// from turning into an extra latency slot or a residual penalty.
inline constexpr double kBitTolerance = 1e-6;

struct Arrival {
  int slot = 1;       // T_a, 1-based
  double bits = 0.0;  // D_a
};

struct Weights {
  double energy = 2.0;    // omega_1, per W*ratio
  double residual = 5.0;  // omega_2, per bit
};

struct ScenarioConfig {
  int slots = 0;
  std::vector<RouteModel> routes;
  BsLayout bs;
  ChannelParams channel;
  std::vector<Arrival> arrivals;
  Weights weights;

  std::size_t vehicles() const { return routes.size(); }
  std::size_t stations() const { return bs.size(); }
  void validate() const;
};

/// Start-of-slot state. buffers[n] already includes a task arriving in this slot.
struct SystemState {
  int slot = 1;
  std::vector<double> buffers;
  std::vector<std::size_t> positions;  // waypoint index per vehicle
};

/// Per-slot action. Association is stored as one BS index per vehicle, so the
/// unique-association constraint reduces to an index range check.
struct SlotAction {
  std::vector<std::size_t> bs;
  std::vector<double> tau;
  std::vector<double> rates;  // bits scheduled in the slot
};

struct CostBreakdown {
  double latency = 0.0;   // slots with non-empty buffer
  double energy = 0.0;    // sum of P * tau (W * ratio)
  double residual = 0.0;  // bits left after the last slot

  double total(const Weights& w) const { return latency + w.energy * energy + w.residual * residual; }
  CostBreakdown& operator+=(const CostBreakdown& o) {
    latency += o.latency;
    energy += o.energy;
    residual += o.residual;
    return *this;
  }
};

enum class Constraint { UniqueAssociation = 1, NonNegativeTime = 2, CellTime = 3, PeakPower = 4 };

class ConstraintViolation : public std::runtime_error {
 public:
  ConstraintViolation(Constraint which, const std::string& what)
      : std::runtime_error(what), which_(which) {}
  Constraint which() const { return which_; }

 private:
  Constraint which_;
};

/// Phi toward every BS at the state's realized positions, row-major N x M.
std::vector<double> realized_phi(const SystemState& state, const ScenarioConfig& config);

/// Throws ConstraintViolation naming C1..C4. Rates must also be non-negative.
void validate_action(const SystemState& state, const SlotAction& action,
                     const ScenarioConfig& config);

/// Buffer at the start of slot t+1 given the buffer d at slot t.
double queue_step(double d, double r, int t, const Arrival& arrival);

/// Buffer at the start of slot t+1 including an arrival in slot t+1.
double next_buffer(double d, double r, int t, const Arrival& arrival);

/// Per-vehicle cost in the state's slot; residual only in the last slot.
CostBreakdown vehicle_slot_cost(const SystemState& state, const SlotAction& action,
                                const ScenarioConfig& config, std::size_t vehicle);

CostBreakdown slot_cost(const SystemState& state, const SlotAction& action,
                        const ScenarioConfig& config);

SystemState initial_state(const ScenarioConfig& config, std::span<const std::size_t> positions);

struct SafeguardStats {
  std::int64_t slots_checked = 0;
  std::int64_t violations = 0;  // Q(chosen) > Q(reference)
  std::int64_t improved = 0;    // optimized action applied
};

/// Per-slot scheduler. One instance serves one episode.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  virtual SlotAction act(const SystemState& state) = 0;
  /// Called after the slot with the start state of the next slot.
  virtual void observe(const SystemState& /*next*/) {}
  virtual SafeguardStats safeguard() const { return {}; }
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

struct EpisodeResult {
  double total_cost = 0.0;
  CostBreakdown cost;
  std::vector<CostBreakdown> per_slot;  // summed over vehicles
  std::vector<int> completion_slot;     // slot in which the buffer emptied, -1 if unfinished
  std::uint64_t seed = 0;
  SafeguardStats safeguard;
};

/// Trajectory for every vehicle from per-(seed, vehicle) substreams.
std::vector<std::vector<std::size_t>> sample_trajectories(const ScenarioConfig& config,
                                                          std::uint64_t seed);

EpisodeResult run_episode(Policy& policy, const ScenarioConfig& config,
                          const std::vector<std::vector<std::size_t>>& trajectories,
                          std::uint64_t seed = 0);

EpisodeResult run_episode(Policy& policy, const ScenarioConfig& config, std::uint64_t seed);

struct NamedPolicy {
  std::string name;
  PolicyFactory make;
};

struct EvaluationOptions {
  int trials = 500;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool paired = true;
};

struct PolicySummary {
  std::string name;
  std::vector<EpisodeResult> trials;  // indexed by trial
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> sorted_costs;
  SafeguardStats safeguard;
};

struct EvaluationReport {
  std::vector<PolicySummary> policies;
  /// suppression[a][b] = (mean_b - mean_a) / mean_b
  std::vector<std::vector<double>> suppression;
};

/// Seed of the trajectories policy `policy` sees in trial `trial`. Paired runs
/// share one seed per trial across policies.
std::uint64_t trial_seed(std::uint64_t master, int trial, std::size_t policy, bool paired);

EvaluationReport evaluate(const std::vector<NamedPolicy>& policies, const ScenarioConfig& config,
                          const EvaluationOptions& options);

}  // namespace offload
