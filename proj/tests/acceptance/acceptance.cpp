// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lrscale/error.hpp"
#include "lrscale/fitcore.hpp"
#include "lrscale/ingest.hpp"
#include "lrscale/lawfit.hpp"
#include "lrscale/microtrainer.hpp"
#include "lrscale/modsearch.hpp"
#include "lrscale/mutransfer.hpp"
#include "lrscale/oracle.hpp"

using namespace lrscale;
namespace o = lrscale::oracle;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Planted surface -> optima -> law.
Outcome oracle_round_trip() {
  Timer t;
  const o::SurfaceSpec spec = o::reference_surface(1e-3, 0);
  const auto runs =
      o::gen_runs(spec, o::reference_design_shapes(), o::reference_token_grid(), o::reference_lr_grid());
  CollectOptions opt;
  opt.D_grid = o::reference_token_grid();
  opt.source = LossSource::Smoothed;
  const CollectResult c = collect_optima(runs, opt);
  const LRLaw law = fit_lr_law(c.points);
  const double secs = t.seconds();
  const double ea = rel(law.alpha_N, 0.2219), eb = rel(law.beta_D, 0.3509);
  return {ea <= 0.05 && eb <= 0.05 && law.r2 >= 0.96 && secs < 60.0,
          fmt("alpha %.5f (%.2f%%) beta %.5f (%.2f%%) r2 %.4f, %zu points, %.2fs", law.alpha_N,
              100 * ea, law.beta_D, 100 * eb, law.r2, c.points.size(), secs)};
}

// 2. Quadratic in ln(lr).
Outcome quadratic_quality() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> Lmin(1.8, 3.0), curv(0.05, 0.2), center(-8.5, -6.5);
  std::normal_distribution<double> noise(0.0, 1e-3);
  const auto grid = o::reference_lr_grid();
  double worst_r2 = 0.0, worst_eta = 0.0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    const double L = Lmin(rng), C = curv(rng), e = center(rng);
    std::vector<LrLossPoint> pts;
    for (double lr : grid) pts.push_back({lr, L + C * std::pow(std::log(lr) - e, 2)});
    const QuadLogFit f = fit_quad_log(pts);
    worst_r2 = std::max(worst_r2, std::abs(f.r2 - 1.0));
    worst_eta = std::max(worst_eta, rel(optimal_lr(f), std::exp(e)));
  }
  int good = 0;
  for (int i = 0; i < trials; ++i) {
    const double L = Lmin(rng), C = curv(rng), e = center(rng);
    std::vector<LrLossPoint> pts;
    for (double lr : grid) pts.push_back({lr, L + C * std::pow(std::log(lr) - e, 2) + noise(rng)});
    const QuadLogFit f = fit_quad_log(pts);
    if (f.r2 >= 0.995) ++good;
  }
  const double frac = static_cast<double>(good) / trials;
  return {worst_r2 <= 1e-9 && worst_eta <= 1e-9 && frac >= 0.95,
          fmt("noise-free |r2-1| max %.1e, eta* rel err max %.1e; noisy r2>=0.995 in %.1f%%",
              worst_r2, worst_eta, 100 * frac)};
}

// 3. Fit on the first quarter of the token range, predict 4x beyond.
Outcome ld_extrapolation() {
  const double L0 = 1.8, A = 873.0, g = 0.3;
  double worst = 0.0;
  bool all_trusted = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1e-3);
    std::vector<LossSample> s;
    for (std::uint64_t D = 10'000'000'000ULL; D <= 125'000'000'000ULL; D += 5'000'000'000ULL) {
      s.push_back({D, L0 + A * std::pow(static_cast<double>(D), -g) + noise(rng)});
    }
    const PowerLawFit f = fit_power_law(s);
    all_trusted = all_trusted && !f.low_trust;
    const double truth = L0 + A * std::pow(500e9, -g);
    worst = std::max(worst, rel(extrapolate_loss(f, 500e9).loss, truth));
  }
  // near-flat curve over the same window
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 1e-3);
  std::vector<LossSample> flat;
  for (std::uint64_t D = 10'000'000'000ULL; D <= 125'000'000'000ULL; D += 5'000'000'000ULL) {
    flat.push_back({D, 1.0 + 2.5 * std::pow(static_cast<double>(D), -0.01) + noise(rng)});
  }
  bool flagged = false;
  try {
    flagged = fit_power_law(flat).low_trust;
  } catch (const Error&) {
    flagged = false;
  }
  return {worst < 0.005 && all_trusted && flagged,
          fmt("max rel err at 500e9 over 20 seeds %.3f%%, trusted %s; gamma=0.01 curve %s",
              100 * worst, all_trusted ? "yes" : "no", flagged ? "flagged low-trust" : "NOT flagged")};
}

// 4. Ratio of optimal LRs between 0.55B and 4B.
Outcome optimum_ratio_check() {
  LRLaw law;
  law.C_eta = 38.4588;
  law.alpha_N = 0.2219;
  law.beta_D = 0.3509;
  const double r = lr_ratio(law, 0.55e9, 4e9, 120e9, 120e9);
  const double table = 8.75e-4 / 5.55e-4;
  return {std::abs(r - 1.553) < 5e-4 && rel(r, table) < 0.05,
          fmt("ratio %.4f (expected 1.553), table ratio %.4f, diff %.2f%%", r, table,
              100 * rel(r, table))};
}

// 5. Transfer multipliers and algebraic laws.
Outcome transfer_rules() {
  const TransferPlan p =
      make_transfer_plan(*o::builtin_shape("2b-proxy"), *o::builtin_shape("12b"),
                         200'000'000'000ULL, 500'000'000'000ULL, 1.0, TransferVariant::CompleteP);
  const auto& h = p.at(TransferGroup::HiddenWeights);
  const double errs[] = {
      rel(h.lr.value, 0.5 / std::sqrt(2.5)),
      rel(h.init_var.value, 0.5),
      rel(p.at(TransferGroup::UnembWeights).init_var.value, 0.25),
      rel(p.residual_mult(), 0.6),
      rel(h.eps.value, 0.5 * 0.6 * std::sqrt(2.5)),
      rel(h.wd.value, 2.0 / std::sqrt(2.5)),
  };
  const double worst = *std::max_element(std::begin(errs), std::end(errs));
  const bool published = std::abs(h.lr.value - 0.31623) < 5e-6 &&
                         std::abs(h.eps.value - 0.47434) < 5e-6 &&
                         std::abs(h.wd.value - 1.26491) < 5e-6;

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> w(1, 64), d(1, 64), tok(1, 2000);
  int broken = 0;
  for (int i = 0; i < 1000; ++i) {
    auto shape = [&](const char* n) {
      ModelShape s{n, 1e9, 1e8, 64 * w(rng), d(rng), 1, 1, 256, false};
      return s;
    };
    const ModelShape A = shape("A"), B = shape("B"), C = shape("C");
    const std::uint64_t ta = tok(rng) * 100'000'000ULL, tb = tok(rng) * 100'000'000ULL,
                        tc = tok(rng) * 100'000'000ULL;
    for (auto v : {TransferVariant::CompleteP, TransferVariant::MuP}) {
      const auto ab = make_transfer_plan(A, B, ta, tb, 1.0, v);
      const auto bc = make_transfer_plan(B, C, tb, tc, 1.0, v);
      const auto aa = make_transfer_plan(A, A, ta, ta, 1.0, v);
      for (const auto& [g, m] : aa.groups) {
        if (m.lr.value != 1.0 || m.init_var.value != 1.0 || m.eps.value != 1.0 ||
            m.wd.value != 1.0) {
          ++broken;
        }
      }
      if (aa.residual_mult() != 1.0) ++broken;
      if (compose_plans(aa, ab).groups != ab.groups) ++broken;
      const auto ac = compose_plans(ab, bc);
      const auto direct = make_transfer_plan(A, C, ta, tc, 1.0, v);
      if (ac.groups != direct.groups || !(ac.residual == direct.residual)) ++broken;
    }
  }
  return {worst <= 1e-12 && published && broken == 0,
          fmt("max rel err vs hand values %.1e; identity/composition violations %d over 1000 "
              "random shape triples",
              worst, broken)};
}

// 6. Greedy module search on a separable surface.
Outcome module_search() {
  const std::map<ModuleGroup, double> offsets = {{ModuleGroup::LMHead, 0.52},
                                                 {ModuleGroup::Router, 0.88},
                                                 {ModuleGroup::Hidden, 0.68},
                                                 {ModuleGroup::Embedding, 1.89}};
  const ModelShape shape = *o::builtin_shape("4b");
  std::vector<double> grid;
  for (int i = 0; i < 11; ++i) grid.push_back(5e-5 * std::pow(10.0, 0.2 * i));
  const double step = std::log(grid[1] / grid[0]);
  std::array<ModuleGroup, 4> order = {ModuleGroup::Embedding, ModuleGroup::Hidden,
                                      ModuleGroup::Router, ModuleGroup::LMHead};
  double worst_steps = 0.0;
  int config_violations = 0, runs = 0;
  do {
    o::SurfaceSpec spec = o::reference_surface(1e-3, 17);
    spec.group_offsets = offsets;
    const double global = spec.planted_optimum(shape.total_params, 120e9);
    SearchPlan plan = init_plan(shape, global, {{ModuleGroup::Hidden, grid}}, 120e9, order);
    while (!plan.complete()) {
      const auto cfgs = next_stage_configs(plan);
      const ModuleGroup active = *plan.current_stage();
      const ModuleLRs base = plan.effective_lrs();
      std::vector<LrLossPoint> pts;
      for (std::size_t i = 0; i < cfgs.size(); ++i) {
        for (ModuleGroup g : kAllModuleGroups) {
          const double want = g == active ? grid[i] : base.at(g);
          if (cfgs[i].module_lrs.at(g) != want) ++config_violations;
        }
        const double lr = cfgs[i].module_lrs.at(active);
        pts.push_back({lr, o::sample_loss(spec, shape.total_params, cfgs[i].D, lr,
                                          cfgs[i].module_lrs)});
      }
      if (cfgs.size() != grid.size()) ++config_violations;
      plan = record_stage(plan, pts);
    }
    for (const auto& r : plan.results()) {
      worst_steps = std::max(worst_steps,
                             std::abs(std::log(r.optimum_lr / (global * offsets.at(r.group)))) / step);
    }
    ++runs;
  } while (std::next_permutation(order.begin(), order.end()));
  return {worst_steps <= 1.0 && config_violations == 0,
          fmt("%d stage orders, worst optimum error %.3f grid steps, config violations %d", runs,
              worst_steps, config_violations)};
}

// 7. Finite-difference gradient check.
Outcome gradients() {
  Timer t;
  micro::TaskSpec ts;
  ts.vocab = 32;
  ts.seq_len = 8;
  ts.batch = 4;
  const micro::MarkovTask task(ts);
  double worst = 0.0;
  std::string where;
  for (bool qk : {false, true}) {
    for (int experts : {0, 2}) {
      micro::NetConfig c = micro::sp_config(16, 2, 1e-3, 11);
      c.heads = 2;
      c.vocab = ts.vocab;
      c.qk_norm = qk;
      c.moe_experts = experts;
      c.residual_mult = 0.8;
      const micro::Net net = micro::build_net(c);
      const auto r = micro::grad_check(net, task.batch(0), 1e-4, 20);
      for (const auto& [name, e] : r.per_tensor) {
        if (e >= worst) {
          worst = e;
          where = name + (qk ? " (qk-norm" : " (no qk-norm") + (experts ? ", moe)" : ", dense)");
        }
      }
    }
  }
  const double secs = t.seconds();
  return {worst < 1e-4 && secs < 10.0,
          fmt("max rel err %.2e at %s, %.2fs", worst, where.c_str(), secs)};
}

// 8. Coordinate-check trends over width.
Outcome coord_check() {
  Timer t;
  int sp_ok = 0, mup_ok = 0;
  std::ostringstream notes;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    micro::SweepConfig s;
    s.widths = {32, 64, 128, 256};
    s.steps = 500;
    s.seed = seed;
    s.base.eta_b = 3e-3;
    s.qk_norm = false;

    s.parametrization = micro::Parametrization::SP;
    const auto sp = micro::coord_check_sweep(s);
    const auto& ts = sp.trends.back();
    const double rho = ts.rho_attn_logits.value_or(std::nan(""));
    if (!sp.partial && rho > 0.0) ++sp_ok;

    s.parametrization = micro::Parametrization::MuPComplete;
    const auto mp = micro::coord_check_sweep(s);
    const double ratio = mp.trends.back().ratio_logits;
    if (!mp.partial && ratio < 3.0) ++mup_ok;
    notes << fmt(" [seed %d rho %.2f ratio %.2f]", static_cast<int>(seed), rho, ratio);
  }
  const double secs = t.seconds();
  return {sp_ok >= 4 && mup_ok >= 4 && secs < 600.0,
          fmt("SP rho>0 in %d/5, muP ratio<3 in %d/5, %.0fs;", sp_ok, mup_ok, secs) + notes.str()};
}

// 9. Update-direction RMS band after warmup.
Outcome update_rms() {
  int in = 0, total = 0;
  for (int experts : {0, 2}) {
    micro::NetConfig c = micro::sp_config(64, 2, 3e-3, 1);
    c.moe_experts = experts;
    micro::Net net(c);
    const micro::MarkovTask task{micro::TaskSpec{}};
    micro::TrainOptions opt;
    opt.steps = 200;
    opt.schedule.warmup_steps = 50;
    opt.checkpoints = {0, 50, 100, 150, 200};
    const auto trace = micro::train(net, task, opt);
    if (trace.diverged) return {false, "training diverged"};
    for (const auto& cp : trace.checkpoints) {
      if (cp.step < opt.schedule.warmup_steps) continue;
      int cin = 0, ctot = 0;
      for (std::size_t i = 0; i < cp.update_rms.size(); ++i) {
        if (!trace.hidden_tensor[i]) continue;
        ++ctot;
        if (cp.update_rms[i] >= 0.05 && cp.update_rms[i] <= 0.5) ++cin;
      }
      if (cin < 0.9 * ctot) {
        return {false, fmt("step %d: %d/%d hidden tensors in band", cp.step, cin, ctot)};
      }
      in += cin;
      total += ctot;
    }
  }
  return {true, fmt("%d/%d hidden tensor checkpoints in [0.05, 0.5] (dense and moe)", in, total)};
}

// 10. Determinism and persistence.
Outcome determinism() {
  std::vector<std::string> problems;
  // traces
  auto trace = [] {
    micro::NetConfig c = micro::sp_config(32, 2, 3e-3, 4);
    c.moe_experts = 2;
    micro::Net net(c);
    const micro::MarkovTask task{micro::TaskSpec{}};
    micro::TrainOptions opt;
    opt.steps = 60;
    opt.schedule.warmup_steps = 10;
    opt.checkpoints = {0, 30, 60};
    opt.probe = task.probe_batch(8);
    return micro::to_json(micro::train(net, task, opt)).dump();
  };
  if (trace() != trace()) problems.push_back("train trace differs");
  // artifacts
  auto law = [] {
    const auto runs = o::gen_runs(o::reference_surface(1e-3, 3), o::reference_design_shapes(),
                                  o::reference_token_grid(), o::reference_lr_grid());
    CollectOptions opt;
    opt.D_grid = o::reference_token_grid();
    const auto pts = collect_optima(runs, opt).points;
    return to_json(fit_lr_law(pts), points_digest(pts)).dump(2);
  };
  if (law() != law()) problems.push_back("law artifact differs");
  // run store
  auto runs = o::gen_runs(o::reference_surface(1e-3, 9), o::reference_design_shapes(),
                          o::reference_token_grid(), o::reference_lr_grid());
  auto extra = to_json(runs[0]);
  extra["run_id"] = "with-extras";
  extra["notes"] = {{"nested", {1, 2.5, "x"}}, {"flag", true}};
  runs.push_back(run_from_json(extra));
  const std::string text = serialize_runs(runs);
  const auto parsed = parse_runs(text);
  if (!parsed.ok() || serialize_runs(parsed.runs) != text) problems.push_back("JSONL round trip");
  const auto dir = std::filesystem::temp_directory_path() /
                   ("lrscale-acceptance-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  {
    RunStore store(dir / "runs.jsonl");
    store.append(runs);
  }
  const RunStore reopened(dir / "runs.jsonl");
  if (serialize_runs(reopened.runs()) != text) problems.push_back("store reopen");
  const auto* back = reopened.find("with-extras");
  if (!back || to_json(*back) != extra) problems.push_back("unknown fields lost");
  std::filesystem::remove_all(dir);
  std::string detail = "traces, law artifacts and run store byte-identical";
  if (!problems.empty()) {
    detail.clear();
    for (const auto& p : problems) detail += p + "; ";
  }
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle round trip", oracle_round_trip},
      {"quadratic fit quality", quadratic_quality},
      {"L(D) extrapolation", ld_extrapolation},
      {"size ratio of optimal LR", optimum_ratio_check},
      {"transfer rule exactness", transfer_rules},
      {"greedy module search", module_search},
      {"micro-trainer gradients", gradients},
      {"coordinate-check trends", coord_check},
      {"update RMS band", update_rms},
      {"determinism and persistence", determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %2d %-28s %s  %s\n", id, criteria[i].first, out.pass ? "PASS" : "FAIL",
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
