// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// Greedy module-level learning-rate search. Groups are optimized one at a
// time; every other group runs at the global optimum or at the optimum an
// earlier stage recorded.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lrscale/fitcore.hpp"
#include "lrscale/types.hpp"

namespace lrscale {

inline constexpr std::array<ModuleGroup, 4> kDefaultStageOrder = {
    ModuleGroup::LMHead, ModuleGroup::Router, ModuleGroup::Hidden,
    ModuleGroup::Embedding};

inline constexpr double kDefaultSearchBudgetTokens = 120e9;

struct StageResult {
  ModuleGroup group = ModuleGroup::LMHead;
  std::optional<QuadLogFit> fit;  // empty when the fit had no interior optimum
  double optimum_lr = 0.0;
  double optimum_loss = 0.0;  // fitted L_min, or the best grid loss on fallback
  bool fallback = false;
  std::string note;
  std::vector<LrLossPoint> points;
};

struct RunConfig {
  std::string run_id;
  ModelShape shape;
  ModuleLRs module_lrs;
  double D = 0.0;
  ModuleGroup stage_group = ModuleGroup::LMHead;
};

class SearchPlan {
 public:
  using Grids = std::map<ModuleGroup, std::vector<double>>;

  SearchPlan() = default;

  const ModelShape& shape() const noexcept { return shape_; }
  double global_opt_lr() const noexcept { return global_opt_lr_; }
  double D_budget() const noexcept { return D_budget_; }
  const std::array<ModuleGroup, 4>& stage_order() const noexcept {
    return stage_order_;
  }
  const ModuleLRs& fixed_lrs() const noexcept { return fixed_lrs_; }
  const Grids& grids() const noexcept { return grids_; }
  const std::vector<StageResult>& results() const noexcept { return results_; }

  bool complete() const noexcept { return results_.size() == stage_order_.size(); }
  std::optional<ModuleGroup> current_stage() const noexcept;

  /// Learning rates every group runs at in the current stage, before the
  /// stage group is swept.
  ModuleLRs effective_lrs() const;

  /// Loss with every group at the global optimum, estimated from the first
  /// stage fit. Empty until the first stage is recorded.
  std::optional<double> global_loss() const;

  friend SearchPlan init_plan(const ModelShape& shape, double global_opt_lr,
                              const Grids& grids, double D_budget,
                              const std::array<ModuleGroup, 4>& stage_order);
  friend SearchPlan record_stage(const SearchPlan& plan,
                                 const std::vector<LrLossPoint>& stage_runs);
  friend SearchPlan plan_from_json(const nlohmann::json& j);

 private:
  ModelShape shape_;
  double global_opt_lr_ = 0.0;
  double D_budget_ = kDefaultSearchBudgetTokens;
  std::array<ModuleGroup, 4> stage_order_ = kDefaultStageOrder;
  ModuleLRs fixed_lrs_;
  Grids grids_;
  std::vector<StageResult> results_;
};

/// Every grid needs at least 3 learning rates; a single grid applies to all
/// groups when only one is given.
SearchPlan init_plan(const ModelShape& shape, double global_opt_lr,
                     const SearchPlan::Grids& grids,
                     double D_budget = kDefaultSearchBudgetTokens,
                     const std::array<ModuleGroup, 4>& stage_order = kDefaultStageOrder);

/// One config per grid LR of the current stage. Throws PlanComplete once all
/// four stages are recorded.
std::vector<RunConfig> next_stage_configs(const SearchPlan& plan);

/// Returns a new plan with the current stage's fit and optimum recorded.
/// A fit without interior optimum falls back to the best grid point.
SearchPlan record_stage(const SearchPlan& plan,
                        const std::vector<LrLossPoint>& stage_runs);

struct ModuleLRRow {
  std::string shape;
  double N = 0.0;
  double global_opt_lr = 0.0;
  std::map<ModuleGroup, double> optima;
  std::map<ModuleGroup, bool> fallback;
  double global_loss = 0.0;
  double module_loss = 0.0;  // fitted minimum of the last stage
  double delta_loss = 0.0;   // module_loss - global_loss
};

struct ModuleLRTable {
  std::vector<ModuleLRRow> rows;
};

ModuleLRTable assemble_table(const std::vector<SearchPlan>& plans);
std::string to_csv(const ModuleLRTable& table);

nlohmann::json to_json(const SearchPlan& plan);
SearchPlan plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const ModuleLRTable& table);

}  // namespace lrscale
