#include "offload/policies.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "offload/preallocation.hpp"

namespace offload {

namespace {

struct NameEntry {
  PolicyKind kind;
  std::string_view name;
};

constexpr NameEntry kNames[] = {
    {PolicyKind::DynamicImprovement, "dynamic-improvement"},
    {PolicyKind::PreAllocationOnly, "pre-allocation-only"},
    {PolicyKind::MaximumPower, "maximum-power"},
    {PolicyKind::NoPreAllocation, "no-pre-allocation"},
};

}  // namespace

std::string_view policy_name(PolicyKind kind) {
  for (const auto& e : kNames)
    if (e.kind == kind) return e.name;
  throw std::invalid_argument("unknown policy kind");
}

PolicyKind parse_policy(std::string_view name) {
  for (const auto& e : kNames)
    if (e.name == name) return e.kind;
  throw std::invalid_argument(fmt::format(
      "unknown policy '{}' (expected dynamic-improvement, pre-allocation-only, maximum-power or "
      "no-pre-allocation)",
      name));
}

const std::vector<PolicyKind>& all_policy_kinds() {
  static const std::vector<PolicyKind> kinds{PolicyKind::DynamicImprovement,
                                             PolicyKind::PreAllocationOnly,
                                             PolicyKind::MaximumPower, PolicyKind::NoPreAllocation};
  return kinds;
}

PlanningModel::PlanningModel(ScenarioConfig c, ReferenceSchedule s)
    : config(std::move(c)), schedule(std::move(s)), table(config, schedule.association()) {}

SlotAction MaximumPowerPolicy::act(const SystemState& state) {
  const ScenarioConfig& cfg = *config_;
  const std::size_t n_veh = cfg.vehicles(), n_bs = cfg.stations();
  const std::vector<double> ph = realized_phi(state, cfg);
  SlotAction a;
  a.bs.resize(n_veh);
  a.tau.assign(n_veh, 0.0);
  a.rates.assign(n_veh, 0.0);
  std::vector<int> load(n_bs, 0);
  std::vector<bool> active(n_veh);
  for (std::size_t n = 0; n < n_veh; ++n) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < n_bs; ++m)
      if (ph[n * n_bs + m] < ph[n * n_bs + best]) best = m;
    a.bs[n] = best;
    active[n] = state.slot >= cfg.arrivals[n].slot && state.buffers[n] > kBitTolerance;
    if (active[n]) ++load[best];
  }
  for (std::size_t n = 0; n < n_veh; ++n) {
    if (!active[n]) continue;
    a.tau[n] = 1.0 / load[a.bs[n]];
    a.rates[n] = std::min(state.buffers[n], rate_cap(a.tau[n], ph[n * n_bs + a.bs[n]], cfg.channel));
  }
  return a;
}

SlotAction PreAllocationPolicy::act(const SystemState& state) {
  return reference_action(state, model_->schedule, model_->config);
}

ImprovementPolicy::ImprovementPolicy(PolicyKind kind, std::shared_ptr<const PlanningModel> model,
                                     ImprovementOptions options, bool strict_safeguard)
    : kind_(kind),
      model_(std::move(model)),
      schedule_(model_->schedule),
      options_(options),
      strict_(strict_safeguard) {}

SlotAction ImprovementPolicy::act(const SystemState& state) {
  last_ = improve_slot(state, schedule_, model_->table, model_->config, options_);
  ++stats_.slots_checked;
  if (last_.optimized_applied) ++stats_.improved;
  if (last_.q_chosen > last_.q_reference + 1e-9 * std::abs(last_.q_reference)) {
    ++stats_.violations;
    if (strict_)
      throw std::logic_error(fmt::format("safeguard violated in slot {}: Q {} > reference Q {}",
                                         state.slot, last_.q_chosen, last_.q_reference));
  }
  return last_.action;
}

void ImprovementPolicy::observe(const SystemState& next) {
  const int t = next.slot - 1;
  for (std::size_t n = 0; n < model_->config.vehicles(); ++n)
    if (next.slot >= model_->config.arrivals[n].slot) update(schedule_, n, t, next.buffers[n]);
}

std::vector<NamedPolicy> make_policies(const std::vector<PolicyKind>& kinds,
                                       const ScenarioConfig& config, const PolicyOptions& options) {
  std::shared_ptr<const PlanningModel> planned, max_power;
  auto planned_model = [&] {
    if (!planned) planned = std::make_shared<const PlanningModel>(config, preallocate(config));
    return planned;
  };
  auto max_power_model = [&] {
    if (!max_power)
      max_power = std::make_shared<const PlanningModel>(config, max_power_reference(config));
    return max_power;
  };

  std::vector<NamedPolicy> out;
  for (PolicyKind kind : kinds) {
    NamedPolicy p;
    p.name = std::string(policy_name(kind));
    switch (kind) {
      case PolicyKind::MaximumPower: {
        auto cfg = std::make_shared<const ScenarioConfig>(config);
        p.make = [cfg] { return std::unique_ptr<Policy>(std::make_unique<MaximumPowerPolicy>(cfg)); };
        break;
      }
      case PolicyKind::PreAllocationOnly: {
        auto model = planned_model();
        p.make = [model] { return std::unique_ptr<Policy>(std::make_unique<PreAllocationPolicy>(model)); };
        break;
      }
      case PolicyKind::DynamicImprovement:
      case PolicyKind::NoPreAllocation: {
        auto model = kind == PolicyKind::DynamicImprovement ? planned_model() : max_power_model();
        p.make = [kind, model, options] {
          return std::unique_ptr<Policy>(std::make_unique<ImprovementPolicy>(
              kind, model, options.improvement, options.strict_safeguard));
        };
        break;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace offload
