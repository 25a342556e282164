// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "lrscale/modsearch.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "lrscale/error.hpp"
#include "lrscale/ingest.hpp"
#include "text.hpp"

namespace lrscale {

std::optional<ModuleGroup> SearchPlan::current_stage() const noexcept {
  if (complete()) return std::nullopt;
  return stage_order_[results_.size()];
}

ModuleLRs SearchPlan::effective_lrs() const {
  ModuleLRs lrs = fixed_lrs_;
  for (const auto& r : results_) lrs[r.group] = r.optimum_lr;
  return lrs;
}

std::optional<double> SearchPlan::global_loss() const {
  if (results_.empty()) return std::nullopt;
  const StageResult& first = results_.front();
  if (first.fit) return first.fit->predict(global_opt_lr_);
  // Fallback stage: the grid point closest to the global optimum in log space.
  const LrLossPoint* nearest = nullptr;
  for (const auto& p : first.points) {
    if (!nearest || std::abs(std::log(p.lr / global_opt_lr_)) <
                        std::abs(std::log(nearest->lr / global_opt_lr_))) {
      nearest = &p;
    }
  }
  return nearest ? std::optional<double>(nearest->loss) : std::nullopt;
}

SearchPlan init_plan(const ModelShape& shape, double global_opt_lr,
                     const SearchPlan::Grids& grids, double D_budget,
                     const std::array<ModuleGroup, 4>& stage_order) {
  shape.validate();
  if (!(global_opt_lr > 0.0 && std::isfinite(global_opt_lr))) {
    fail(ErrorCode::InvalidArgument, "global_opt_lr must be > 0");
  }
  if (!(D_budget > 0.0)) fail(ErrorCode::InvalidArgument, "D_budget must be > 0");
  std::set<ModuleGroup> seen(stage_order.begin(), stage_order.end());
  if (seen.size() != 4) {
    fail(ErrorCode::InvalidArgument, "stage order must be a permutation of the four groups");
  }
  if (grids.empty()) fail(ErrorCode::InvalidArgument, "empty grid");
  SearchPlan plan;
  plan.shape_ = shape;
  plan.global_opt_lr_ = global_opt_lr;
  plan.D_budget_ = D_budget;
  plan.stage_order_ = stage_order;
  for (ModuleGroup g : kAllModuleGroups) {
    auto it = grids.find(g);
    const std::vector<double>& grid =
        it != grids.end() ? it->second
                          : (grids.size() == 1 ? grids.begin()->second
                                               : throw Error(ErrorCode::InvalidArgument,
                                                             "no grid for group " +
                                                                 std::string(to_string(g))));
    if (grid.empty()) {
      fail(ErrorCode::InvalidArgument, "empty grid for group " + std::string(to_string(g)));
    }
    if (grid.size() < 3) {
      fail(ErrorCode::InvalidArgument,
           "grid for group " + std::string(to_string(g)) + " needs >= 3 learning rates");
    }
    for (double lr : grid) {
      if (!(lr > 0.0 && std::isfinite(lr))) {
        fail(ErrorCode::InvalidArgument, "grid learning rates must be > 0");
      }
    }
    plan.grids_[g] = grid;
    plan.fixed_lrs_[g] = global_opt_lr;
  }
  return plan;
}

std::vector<RunConfig> next_stage_configs(const SearchPlan& plan) {
  const auto stage = plan.current_stage();
  if (!stage) fail(ErrorCode::PlanComplete, "search plan complete: all four stages recorded");
  const ModuleLRs base = plan.effective_lrs();
  const auto& grid = plan.grids().at(*stage);
  std::vector<RunConfig> configs;
  configs.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    RunConfig c;
    c.shape = plan.shape();
    c.module_lrs = base;
    c.module_lrs[*stage] = grid[i];
    c.D = plan.D_budget();
    c.stage_group = *stage;
    c.run_id = plan.shape().name + "-stage" + std::to_string(plan.results().size() + 1) + "-" +
               std::string(to_string(*stage)) + "-" + std::to_string(i);
    configs.push_back(std::move(c));
  }
  return configs;
}

SearchPlan record_stage(const SearchPlan& plan, const std::vector<LrLossPoint>& stage_runs) {
  const auto stage = plan.current_stage();
  if (!stage) fail(ErrorCode::PlanComplete, "search plan complete: all four stages recorded");
  if (stage_runs.size() < 3) {
    fail(ErrorCode::Underdetermined, "a stage needs >= 3 (lr, loss) points");
  }
  StageResult result;
  result.group = *stage;
  result.points = stage_runs;
  try {
    const QuadLogFit fit = fit_quad_log(stage_runs);
    result.fit = fit;
    result.optimum_lr = optimal_lr(fit);
    result.optimum_loss = fit.L_min;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoInteriorOptimum) throw;
    const auto best = std::min_element(
        stage_runs.begin(), stage_runs.end(),
        [](const LrLossPoint& a, const LrLossPoint& b) { return a.loss < b.loss; });
    result.fallback = true;
    result.optimum_lr = best->lr;
    result.optimum_loss = best->loss;
    result.note = std::string(e.what()) + "; fell back to best grid point";
  }
  SearchPlan next = plan;
  next.results_.push_back(std::move(result));
  return next;
}

ModuleLRTable assemble_table(const std::vector<SearchPlan>& plans) {
  ModuleLRTable table;
  for (const auto& plan : plans) {
    if (!plan.complete()) {
      fail(ErrorCode::InvalidArgument, "plan for '" + plan.shape().name + "' is not complete");
    }
    ModuleLRRow row;
    row.shape = plan.shape().name;
    row.N = plan.shape().total_params;
    row.global_opt_lr = plan.global_opt_lr();
    for (const auto& r : plan.results()) {
      row.optima[r.group] = r.optimum_lr;
      row.fallback[r.group] = r.fallback;
    }
    row.global_loss = plan.global_loss().value_or(std::nan(""));
    row.module_loss = plan.results().back().optimum_loss;
    row.delta_loss = row.module_loss - row.global_loss;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string to_csv(const ModuleLRTable& table) {
  std::ostringstream out;
  out << "shape,N,global_opt_lr";
  for (ModuleGroup g : kDefaultStageOrder) out << ',' << to_string(g);
  out << ",global_loss,module_loss,delta_loss\n";
  for (const auto& row : table.rows) {
    out << row.shape << ',' << format_double(row.N) << ',' << format_double(row.global_opt_lr);
    for (ModuleGroup g : kDefaultStageOrder) out << ',' << format_double(row.optima.at(g));
    out << ',' << format_double(row.global_loss) << ',' << format_double(row.module_loss) << ','
        << format_double(row.delta_loss) << '\n';
  }
  return out.str();
}

namespace {

nlohmann::json lrs_json(const ModuleLRs& lrs) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [g, lr] : lrs) j[std::string(to_string(g))] = lr;
  return j;
}

ModuleLRs lrs_from_json(const nlohmann::json& j) {
  ModuleLRs out;
  for (const auto& [k, v] : j.items()) out[module_group_from_string(k)] = v.get<double>();
  return out;
}

}  // namespace

nlohmann::json to_json(const SearchPlan& plan) {
  nlohmann::json order = nlohmann::json::array();
  for (ModuleGroup g : plan.stage_order()) order.push_back(std::string(to_string(g)));
  nlohmann::json grids = nlohmann::json::object();
  for (const auto& [g, grid] : plan.grids()) grids[std::string(to_string(g))] = grid;
  nlohmann::json results = nlohmann::json::array();
  for (const auto& r : plan.results()) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : r.points) pts.push_back({p.lr, p.loss});
    nlohmann::json fit = nullptr;
    if (r.fit) {
      fit = {{"L_min", r.fit->L_min}, {"C", r.fit->C}, {"eta_min", r.fit->eta_min},
             {"r2", r.fit->r2},       {"rmse", r.fit->rmse}};
    }
    results.push_back({{"group", std::string(to_string(r.group))},
                       {"fit", fit},
                       {"optimum_lr", r.optimum_lr},
                       {"optimum_loss", r.optimum_loss},
                       {"fallback", r.fallback},
                       {"note", r.note},
                       {"points", pts}});
  }
  return {{"kind", "search_plan"},
          {"shape", to_json(plan.shape())},
          {"global_opt_lr", plan.global_opt_lr()},
          {"D_budget", plan.D_budget()},
          {"stage_order", order},
          {"fixed_lrs", lrs_json(plan.fixed_lrs())},
          {"grids", grids},
          {"results", results},
          {"complete", plan.complete()}};
}

SearchPlan plan_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("kind", "") != "search_plan") {
    fail(ErrorCode::InvalidArgument, "artifact kind mismatch: expected 'search_plan'");
  }
  try {
    SearchPlan plan;
    plan.shape_ = shape_from_json(j.at("shape"));
    plan.global_opt_lr_ = j.at("global_opt_lr").get<double>();
    plan.D_budget_ = j.at("D_budget").get<double>();
    const auto& order = j.at("stage_order");
    if (order.size() != 4) fail(ErrorCode::Parse, "stage_order must list four groups");
    for (std::size_t i = 0; i < 4; ++i) {
      plan.stage_order_[i] = module_group_from_string(order[i].get<std::string>());
    }
    plan.fixed_lrs_ = lrs_from_json(j.at("fixed_lrs"));
    for (const auto& [k, v] : j.at("grids").items()) {
      plan.grids_[module_group_from_string(k)] = v.get<std::vector<double>>();
    }
    for (const auto& r : j.at("results")) {
      StageResult s;
      s.group = module_group_from_string(r.at("group").get<std::string>());
      if (!r.at("fit").is_null()) {
        const auto& f = r.at("fit");
        s.fit = QuadLogFit{f.at("L_min").get<double>(), f.at("C").get<double>(),
                           f.at("eta_min").get<double>(), f.at("r2").get<double>(),
                           f.at("rmse").get<double>()};
      }
      s.optimum_lr = r.at("optimum_lr").get<double>();
      s.optimum_loss = r.at("optimum_loss").get<double>();
      s.fallback = r.at("fallback").get<bool>();
      s.note = r.value("note", std::string());
      for (const auto& p : r.at("points")) {
        s.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      }
      if (plan.results_.size() >= 4 || s.group != plan.stage_order_[plan.results_.size()]) {
        fail(ErrorCode::Parse, "stage results do not follow stage_order");
      }
      plan.results_.push_back(std::move(s));
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("search_plan artifact: ") + e.what());
  }
}

nlohmann::json to_json(const RunConfig& c) {
  return {{"run_id", c.run_id},
          {"model", to_json(c.shape)},
          {"module_lrs", lrs_json(c.module_lrs)},
          {"D", c.D},
          {"stage_group", std::string(to_string(c.stage_group))}};
}

nlohmann::json to_json(const ModuleLRTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    nlohmann::json optima = nlohmann::json::object();
    nlohmann::json fallback = nlohmann::json::object();
    for (const auto& [g, v] : r.optima) optima[std::string(to_string(g))] = v;
    for (const auto& [g, v] : r.fallback) fallback[std::string(to_string(g))] = v;
    rows.push_back({{"shape", r.shape},
                    {"N", r.N},
                    {"global_opt_lr", r.global_opt_lr},
                    {"optima", optima},
                    {"fallback", fallback},
                    {"global_loss", r.global_loss},
                    {"module_loss", r.module_loss},
                    {"delta_loss", r.delta_loss}});
  }
  return {{"kind", "module_lr_table"}, {"rows", rows}};
}

}  // namespace lrscale
