// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "lrscale/modsearch.hpp"
#include "lrscale/oracle.hpp"

using namespace lrscale;
using namespace lrscale::testing;

namespace {

const std::vector<double> kTable3Row = {8e-5, 3e-4, 8.75e-4, 1e-3, 1.5e-3, 2e-3, 3e-3, 4e-3};

ModelShape shape_4b() { return *oracle::builtin_shape("4b"); }

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
  return g;
}

// Evaluates the oracle at every config of the current stage.
std::vector<LrLossPoint> run_stage(const oracle::SurfaceSpec& spec, const SearchPlan& plan) {
  std::vector<LrLossPoint> out;
  for (const auto& c : next_stage_configs(plan)) {
    const double lr = c.module_lrs.at(c.stage_group);
    out.push_back({lr, oracle::sample_loss(spec, c.shape.total_params, c.D, lr, c.module_lrs)});
  }
  return out;
}

}  // namespace

TEST_SUITE("modsearch") {

TEST_CASE("init_plan fixes every group at the global optimum") {
  const SearchPlan p = init_plan(shape_4b(), 5.55e-4, {{ModuleGroup::Hidden, kTable3Row}});
  for (ModuleGroup g : kAllModuleGroups) {
    CHECK(p.fixed_lrs().at(g) == 5.55e-4);
    CHECK(p.grids().at(g) == kTable3Row);
  }
  CHECK(p.results().empty());
  CHECK(p.D_budget() == 120e9);
  CHECK(p.stage_order() == kDefaultStageOrder);
  CHECK(p.current_stage() == ModuleGroup::LMHead);
  CHECK_FALSE(p.global_loss().has_value());
}

TEST_CASE("init_plan rejects bad input") {
  const auto s = shape_4b();
  CHECK_ERROR_CODE(init_plan(s, 5e-4, {}), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(init_plan(s, 5e-4, {{ModuleGroup::Hidden, {}}}), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(init_plan(s, 5e-4, {{ModuleGroup::Hidden, {1e-4, 2e-4}}}),
                   ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(init_plan(s, 0.0, {{ModuleGroup::Hidden, kTable3Row}}),
                   ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(init_plan(s, 5e-4, {{ModuleGroup::Hidden, kTable3Row}}, 120e9,
                             {ModuleGroup::Hidden, ModuleGroup::Hidden, ModuleGroup::Router,
                              ModuleGroup::LMHead}),
                   ErrorCode::InvalidArgument);
  // two grids given, two missing
  CHECK_ERROR_CODE(
      init_plan(s, 5e-4, {{ModuleGroup::Hidden, kTable3Row}, {ModuleGroup::Router, kTable3Row}}),
      ErrorCode::InvalidArgument);
}

TEST_CASE("stage 1 configs: one per grid value, differing only in the stage group") {
  const SearchPlan p = init_plan(*oracle::builtin_shape("0.5b"), 8.75e-4,
                                 {{ModuleGroup::LMHead, kTable3Row}});
  const auto cfgs = next_stage_configs(p);
  REQUIRE(cfgs.size() == 8);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    CHECK(cfgs[i].stage_group == ModuleGroup::LMHead);
    CHECK(cfgs[i].D == 120e9);
    CHECK(cfgs[i].module_lrs.at(ModuleGroup::LMHead) == kTable3Row[i]);
    for (ModuleGroup g : kAllModuleGroups) {
      if (g != ModuleGroup::LMHead) CHECK(cfgs[i].module_lrs.at(g) == 8.75e-4);
    }
    ids.insert(cfgs[i].run_id);
  }
  CHECK(ids.size() == cfgs.size());
}

TEST_CASE("stage 2 overlays the recorded LM head optimum") {
  SearchPlan p = init_plan(shape_4b(), 5.55e-4, {{ModuleGroup::LMHead, kTable3Row}});
  // symmetric parabola in ln(lr) around 2.86e-4
  std::vector<LrLossPoint> pts;
  for (double k : {-1.0, 0.0, 1.0}) pts.push_back({2.86e-4 * std::exp(k), 2.0 + 0.05 * k * k});
  p = record_stage(p, pts);
  REQUIRE(p.results().size() == 1);
  CHECK(p.results()[0].optimum_lr == doctest::Approx(2.86e-4).epsilon(1e-10));
  CHECK_FALSE(p.results()[0].fallback);
  CHECK(p.current_stage() == ModuleGroup::Router);
  const auto cfgs = next_stage_configs(p);
  REQUIRE(cfgs.size() == kTable3Row.size());
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    CHECK(cfgs[i].module_lrs.at(ModuleGroup::LMHead) == p.results()[0].optimum_lr);
    CHECK(cfgs[i].module_lrs.at(ModuleGroup::Embedding) == 5.55e-4);
    CHECK(cfgs[i].module_lrs.at(ModuleGroup::Hidden) == 5.55e-4);
    CHECK(cfgs[i].module_lrs.at(ModuleGroup::Router) == kTable3Row[i]);
  }
}

TEST_CASE("record_stage errors and flat-loss fallback") {
  SearchPlan p = init_plan(shape_4b(), 5.55e-4, {{ModuleGroup::LMHead, kTable3Row}});
  CHECK_ERROR_CODE(record_stage(p, {{1e-4, 2.0}, {2e-4, 1.9}}), ErrorCode::Underdetermined);

  std::vector<LrLossPoint> flat;
  for (double lr : kTable3Row) flat.push_back({lr, 2.5});
  for (int s = 0; s < 4; ++s) p = record_stage(p, flat);
  CHECK(p.complete());
  for (const auto& r : p.results()) {
    CHECK(r.fallback);
    CHECK_FALSE(r.fit.has_value());
    CHECK(std::find(kTable3Row.begin(), kTable3Row.end(), r.optimum_lr) != kTable3Row.end());
    CHECK_FALSE(r.note.empty());
  }
  CHECK_ERROR_CODE(next_stage_configs(p), ErrorCode::PlanComplete);
  CHECK_ERROR_CODE(record_stage(p, flat), ErrorCode::PlanComplete);
}

TEST_CASE("recorded optima are immutable") {
  oracle::SurfaceSpec spec = oracle::reference_surface(0.0);
  spec.group_offsets = std::map<ModuleGroup, double>{{ModuleGroup::LMHead, 0.5}};
  SearchPlan p = init_plan(shape_4b(), 5e-4, {{ModuleGroup::LMHead, geometric(5e-5, 5e-3, 9)}});
  std::vector<double> seen;
  while (!p.complete()) {
    const SearchPlan before = p;
    p = record_stage(p, run_stage(spec, p));
    for (std::size_t i = 0; i < before.results().size(); ++i) {
      CHECK(p.results()[i].optimum_lr == before.results()[i].optimum_lr);
    }
    CHECK(to_json(before) == to_json(plan_from_json(to_json(before))));
  }
}

TEST_CASE("greedy search recovers planted per-group optima in any stage order") {
  const std::map<ModuleGroup, double> offsets = {{ModuleGroup::LMHead, 0.5},
                                                 {ModuleGroup::Router, 0.88},
                                                 {ModuleGroup::Hidden, 0.68},
                                                 {ModuleGroup::Embedding, 1.9}};
  const ModelShape shape = shape_4b();
  const auto grid = geometric(5e-5, 5e-3, 13);
  const double step = std::log(grid[1] / grid[0]);
  std::array<ModuleGroup, 4> order = {ModuleGroup::Embedding, ModuleGroup::Hidden,
                                      ModuleGroup::Router, ModuleGroup::LMHead};
  int perms = 0;
  do {
    for (std::uint64_t seed : {1u, 2u}) {
      oracle::SurfaceSpec spec = oracle::reference_surface(1e-3, seed);
      spec.group_offsets = offsets;
      const double global = spec.planted_optimum(shape.total_params, 120e9);
      SearchPlan p = init_plan(shape, global, {{ModuleGroup::Hidden, grid}}, 120e9, order);
      while (!p.complete()) p = record_stage(p, run_stage(spec, p));
      for (const auto& r : p.results()) {
        const double want = global * offsets.at(r.group);
        CHECK_MESSAGE(std::abs(std::log(r.optimum_lr / want)) <= step, to_string(r.group));
      }
    }
    ++perms;
  } while (std::next_permutation(order.begin(), order.end()));
  CHECK(perms == 24);
}

TEST_CASE("table assembly and CSV") {
  oracle::SurfaceSpec spec = oracle::reference_surface(0.0);
  spec.group_offsets = std::map<ModuleGroup, double>{{ModuleGroup::Router, 0.8}};
  std::vector<SearchPlan> plans;
  for (const char* name : {"0.5b", "1b", "2b", "3b", "4b"}) {
    const ModelShape s = *oracle::builtin_shape(name);
    const double global = spec.planted_optimum(s.total_params, 120e9);
    SearchPlan p = init_plan(s, global, {{ModuleGroup::LMHead, geometric(global / 8, global * 8, 7)}});
    CHECK_ERROR_CODE(assemble_table({p}), ErrorCode::InvalidArgument);
    while (!p.complete()) p = record_stage(p, run_stage(spec, p));
    plans.push_back(p);
  }
  const ModuleLRTable one = assemble_table({plans[0]});
  CHECK(one.rows.size() == 1);
  const ModuleLRTable t = assemble_table(plans);
  REQUIRE(t.rows.size() == 5);
  for (const auto& row : t.rows) {
    CHECK(row.optima.size() == 4);
    CHECK(row.delta_loss == doctest::Approx(row.module_loss - row.global_loss));
    // the separable surface pays a cost for the router sitting at the global LR
    CHECK(row.delta_loss < 0.0);
  }
  const std::string csv = to_csv(t);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(csv.rfind("shape,N,global_opt_lr,lm_head,router,hidden,embedding,global_loss,module_loss,delta_loss\n", 0) == 0);
  const auto j = to_json(t);
  CHECK(j.at("rows").size() == 5);
}

TEST_CASE("plan JSON rejects the wrong kind") {
  CHECK_ERROR_CODE(plan_from_json(nlohmann::json{{"kind", "lr_law"}}), ErrorCode::InvalidArgument);
}

}  // TEST_SUITE
