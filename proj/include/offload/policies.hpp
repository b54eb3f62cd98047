#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "offload/environment.hpp"
#include "offload/online.hpp"
#include "offload/reference.hpp"
#include "offload/valuation.hpp"

namespace offload {

enum class PolicyKind { DynamicImprovement, PreAllocationOnly, MaximumPower, NoPreAllocation };

/// Stable external identifiers: dynamic-improvement, pre-allocation-only,
/// maximum-power, no-pre-allocation.
std::string_view policy_name(PolicyKind kind);
PolicyKind parse_policy(std::string_view name);
const std::vector<PolicyKind>& all_policy_kinds();

/// Scenario plus a reference schedule and its phi-bar table, shared read-only
/// by every episode.
struct PlanningModel {
  ScenarioConfig config;
  ReferenceSchedule schedule;
  ConditionalPhiTable table;

  PlanningModel(ScenarioConfig c, ReferenceSchedule s);
};

/// Strongest BS at the realized position, equal split among the active
/// vehicles of a cell, full power or just the remaining bits.
class MaximumPowerPolicy : public Policy {
 public:
  explicit MaximumPowerPolicy(std::shared_ptr<const ScenarioConfig> config)
      : config_(std::move(config)) {}
  std::string_view name() const override { return policy_name(PolicyKind::MaximumPower); }
  SlotAction act(const SystemState& state) override;

 private:
  std::shared_ptr<const ScenarioConfig> config_;
};

/// The offline plan verbatim, rates clamped to the buffer and the realized cap.
class PreAllocationPolicy : public Policy {
 public:
  explicit PreAllocationPolicy(std::shared_ptr<const PlanningModel> model) : model_(std::move(model)) {}
  std::string_view name() const override { return policy_name(PolicyKind::PreAllocationOnly); }
  SlotAction act(const SystemState& state) override;

 private:
  std::shared_ptr<const PlanningModel> model_;
};

/// One-step improvement over an updated reference schedule.
class ImprovementPolicy : public Policy {
 public:
  ImprovementPolicy(PolicyKind kind, std::shared_ptr<const PlanningModel> model,
                    ImprovementOptions options = {}, bool strict_safeguard = false);
  std::string_view name() const override { return policy_name(kind_); }
  SlotAction act(const SystemState& state) override;
  void observe(const SystemState& next) override;
  SafeguardStats safeguard() const override { return stats_; }

  const ReferenceSchedule& schedule() const { return schedule_; }
  const ImprovementResult& last() const { return last_; }

 private:
  PolicyKind kind_;
  std::shared_ptr<const PlanningModel> model_;
  ReferenceSchedule schedule_;
  ImprovementOptions options_;
  bool strict_;
  SafeguardStats stats_;
  ImprovementResult last_;
};

struct PolicyOptions {
  ImprovementOptions improvement;
  /// Throw when a chosen action's Q exceeds the reference action's Q.
  bool strict_safeguard = false;
};

/// Factories for the requested policies; the offline plans are computed once
/// here and shared by every episode.
std::vector<NamedPolicy> make_policies(const std::vector<PolicyKind>& kinds,
                                       const ScenarioConfig& config,
                                       const PolicyOptions& options = {});

}  // namespace offload
