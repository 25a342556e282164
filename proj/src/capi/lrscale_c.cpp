// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "lrscale/lrscale.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "lrscale/digest.hpp"
#include "lrscale/error.hpp"
#include "lrscale/fitcore.hpp"
#include "lrscale/ingest.hpp"
#include "lrscale/lawfit.hpp"
#include "lrscale/microtrainer.hpp"
#include "lrscale/modsearch.hpp"
#include "lrscale/mutransfer.hpp"
#include "lrscale/oracle.hpp"
#include "lrscale/units.hpp"

struct lrs_run_store {
  lrscale::RunStore store;
};

struct lrs_law {
  lrscale::LRLaw law;
  std::string points_digest;
};

struct lrs_search_plan {
  lrscale::SearchPlan plan;
};

struct lrs_transfer_plan {
  lrscale::TransferPlan plan;
};

namespace {

using nlohmann::json;
using namespace lrscale;

thread_local std::string g_last_error;

lrs_status set_error(lrs_status status, const char* message) {
  g_last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class Body>
lrs_status guard(Body&& body) {
  try {
    g_last_error.clear();
    body();
    return LRS_OK;
  } catch (const Error& e) {
    return set_error(static_cast<lrs_status>(e.code()), e.what());
  } catch (const json::exception& e) {
    return set_error(LRS_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(LRS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(LRS_INTERNAL, e.what());
  } catch (...) {
    return set_error(LRS_INTERNAL, "unknown failure");
  }
}

void require(const void* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void emit(char** out, const std::string& s) {
  require(out, "output pointer");
  *out = dup_string(s);
}

void emit(char** out, const json& j) { emit(out, j.dump()); }

json parse_json(const char* text, const char* what) {
  require(text, what);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

ModelShape shape_arg(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (auto s = oracle::builtin_shape(name)) return *s;
    fail(ErrorCode::InvalidArgument, "unknown shape '" + name + "'");
  }
  return shape_from_json(j);
}

double quantity_arg(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_quantity(j.get<std::string>());
  fail(ErrorCode::InvalidArgument, std::string(what) + ": expected a number or quantity string");
}

std::vector<double> quantity_list(const json& j, const char* what) {
  if (!j.is_array()) fail(ErrorCode::InvalidArgument, std::string(what) + ": expected an array");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(quantity_arg(v, what));
  return out;
}

std::vector<LossSample> samples_arg(const json& j) {
  std::vector<LossSample> out;
  for (const auto& pair : j) {
    out.push_back({static_cast<std::uint64_t>(quantity_arg(pair.at(0), "tokens")),
                   pair.at(1).get<double>()});
  }
  return out;
}

LawUnits units_arg(const json& j) {
  LawUnits u;
  u.n_scale = j.contains("n_scale") ? quantity_arg(j["n_scale"], "n_scale") : 1.0;
  u.d_scale = j.contains("d_scale") ? quantity_arg(j["d_scale"], "d_scale") : 1.0;
  u.n_label = j.value("n_label", u.n_label);
  u.d_label = j.value("d_label", u.d_label);
  return u;
}

micro::TaskSpec task_arg(const json& j) {
  micro::TaskSpec t;
  if (j.is_null()) return t;
  t.vocab = j.value("vocab", t.vocab);
  t.seq_len = j.value("seq_len", t.seq_len);
  t.batch = j.value("batch", t.batch);
  t.branching = j.value("branching", t.branching);
  t.seed = j.value("seed", t.seed);
  return t;
}

BaseHParams base_arg(const json& j) {
  BaseHParams b;
  if (j.is_null()) return b;
  b.eta_b = j.value("eta_b", b.eta_b);
  b.sigma_b = j.value("sigma_b", b.sigma_b);
  b.eps_b = j.value("eps_b", b.eps_b);
  b.lambda_b = j.value("lambda_b", b.lambda_b);
  b.tokens_b = j.value("tokens_b", b.tokens_b);
  return b;
}

json diagnostics_json(const std::vector<Diagnostic>& rejected) {
  json arr = json::array();
  for (const auto& d : rejected) {
    arr.push_back({{"line", d.line}, {"field", d.field}, {"message", d.message}});
  }
  return arr;
}

}  // namespace

extern "C" {

const char* lrs_version(void) { return "0.1.0"; }

const char* lrs_status_name(lrs_status status) {
  switch (status) {
    case LRS_OK: return "ok";
    case LRS_INVALID_ARGUMENT: return "invalid_argument";
    case LRS_PARSE: return "parse";
    case LRS_DUPLICATE: return "duplicate";
    case LRS_UNDERDETERMINED: return "underdetermined";
    case LRS_DEGENERATE: return "degenerate";
    case LRS_NO_INTERIOR_OPTIMUM: return "no_interior_optimum";
    case LRS_NOT_CONVERGED: return "not_converged";
    case LRS_PLAN_COMPLETE: return "plan_complete";
    case LRS_SHAPE_MISMATCH: return "shape_mismatch";
    case LRS_UNIT_MISMATCH: return "unit_mismatch";
    case LRS_OUT_OF_TRUST_REGION: return "out_of_trust_region";
    case LRS_DIVERGED: return "diverged";
    case LRS_IO: return "io";
    case LRS_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* lrs_last_error(void) { return g_last_error.c_str(); }

void lrs_string_free(char* s) { std::free(s); }

lrs_status lrs_parse_quantity(const char* text, double* out) {
  return guard([&] {
    require(text, "text");
    require(out, "out");
    *out = parse_quantity(text);
  });
}

lrs_status lrs_digest(const char* bytes, size_t len, char** hex_out) {
  return guard([&] {
    if (len > 0) require(bytes, "bytes");
    emit(hex_out, digest_hex(std::string_view(bytes ? bytes : "", len)));
  });
}

lrs_status lrs_builtin_shape(const char* name, char** shape_json) {
  return guard([&] {
    require(name, "name");
    emit(shape_json, to_json(shape_arg(json(name))));
  });
}

lrs_status lrs_wsd_lr(int64_t warmup_steps, double peak_lr, double decay_fraction,
                      int64_t decay_steps, int64_t step, int64_t total_stable_steps,
                      double* out) {
  return guard([&] {
    require(out, "out");
    *out = micro::wsd_lr(WSDSchedule{warmup_steps, peak_lr, decay_fraction, decay_steps}, step,
                         total_stable_steps);
  });
}

// ---- run store -------------------------------------------------------------

lrs_status lrs_run_store_open(const char* path, lrs_run_store** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new lrs_run_store{RunStore(path)};
  });
}

void lrs_run_store_close(lrs_run_store* store) { delete store; }

lrs_status lrs_run_store_ingest(lrs_run_store* store, const char* jsonl, char** report_json) {
  ParseResult parsed;
  const lrs_status status = guard([&] {
    require(store, "store");
    require(jsonl, "jsonl");
    parsed = parse_runs(std::string(jsonl));
    if (!parsed.ok()) {
      const Diagnostic& d = parsed.rejected.front();
      fail(ErrorCode::Parse, "line " + std::to_string(d.line) + ": " +
                                 (d.field.empty() ? "" : d.field + ": ") + d.message);
    }
    store->store.append(parsed.runs);
  });
  if (report_json) {
    const std::string saved = g_last_error;
    const lrs_status rs = guard([&] {
      const std::size_t accepted = status == LRS_OK ? parsed.runs.size() : 0;
      emit(report_json, json{{"accepted", accepted}, {"rejected", diagnostics_json(parsed.rejected)}});
    });
    if (rs != LRS_OK) return rs;
    g_last_error = saved;
  }
  return status;
}

lrs_status lrs_run_store_size(const lrs_run_store* store, size_t* out) {
  return guard([&] {
    require(store, "store");
    require(out, "out");
    *out = store->store.size();
  });
}

lrs_status lrs_run_store_export(const lrs_run_store* store, char** jsonl) {
  return guard([&] {
    require(store, "store");
    emit(jsonl, serialize_runs(store->store.runs()));
  });
}

lrs_status lrs_run_store_get(const lrs_run_store* store, const char* run_id, char** run_json) {
  return guard([&] {
    require(store, "store");
    require(run_id, "run_id");
    const RunRecord* r = store->store.find(run_id);
    if (!r) fail(ErrorCode::InvalidArgument, std::string("no run '") + run_id + "'");
    emit(run_json, to_json(*r));
  });
}

// ---- single-run fits -------------------------------------------------------

lrs_status lrs_fit_power_law(const char* request, char** artifact) {
  return guard([&] {
    const json req = parse_json(request, "request");
    PowerLawOptions opt;
    if (req.contains("min_tokens")) opt.min_tokens = quantity_arg(req["min_tokens"], "min_tokens");
    opt.min_gamma = req.value("min_gamma", opt.min_gamma);
    opt.max_gamma_rel_stderr = req.value("max_gamma_rel_stderr", opt.max_gamma_rel_stderr);
    const auto samples = samples_arg(req.at("samples"));
    const PowerLawFit fit = fit_power_law(samples, opt);
    emit(artifact, to_json(fit, points_digest(samples)));
  });
}

lrs_status lrs_extrapolate(const char* artifact, double tokens, double* loss,
                           int* extrapolated) {
  return guard([&] {
    require(loss, "loss");
    const PowerLawFit fit = power_law_from_json(parse_json(artifact, "artifact"));
    const Extrapolation e = extrapolate_loss(fit, tokens);
    *loss = e.loss;
    if (extrapolated) *extrapolated = e.extrapolated ? 1 : 0;
  });
}

lrs_status lrs_resample(const char* artifact, double interval, double lo, double hi, int strict,
                        char** samples_json) {
  return guard([&] {
    const PowerLawFit fit = power_law_from_json(parse_json(artifact, "artifact"));
    json arr = json::array();
    for (const auto& s : resample_curve(fit, interval, lo, hi, strict != 0)) {
      arr.push_back({s.tokens, s.loss});
    }
    emit(samples_json, json{{"samples", arr}});
  });
}

lrs_status lrs_fit_quad(const char* request, char** artifact) {
  return guard([&] {
    const json req = parse_json(request, "request");
    std::vector<LrLossPoint> pts;
    for (const auto& p : req.at("points")) {
      pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    const QuadLogFit fit = fit_quad_log(pts);
    emit(artifact, to_json(fit, points_digest(pts)));
  });
}

// ---- optimal-LR law --------------------------------------------------------

lrs_status lrs_collect_optima(const lrs_run_store* store, const char* options,
                              char** optima_json) {
  return guard([&] {
    require(store, "store");
    const json o = parse_json(options, "options");
    CollectOptions opt;
    opt.D_grid = quantity_list(o.at("D_grid"), "D_grid");
    const std::string source = o.value("source", "smoothed");
    if (source == "smoothed") {
      opt.source = LossSource::Smoothed;
    } else if (source == "raw") {
      opt.source = LossSource::Raw;
    } else {
      fail(ErrorCode::InvalidArgument, "source must be 'smoothed' or 'raw'");
    }
    const std::string count = o.value("param_count", "total");
    if (count == "total") {
      opt.param_count = ParamCount::Total;
    } else if (count == "active") {
      opt.param_count = ParamCount::Active;
    } else {
      fail(ErrorCode::InvalidArgument, "param_count must be 'total' or 'active'");
    }
    const CollectResult res = collect_optima(store->store.runs(), opt);
    json j = to_json(res.points);
    json failures = json::array();
    for (const auto& f : res.failures) {
      failures.push_back({{"shape", f.shape}, {"D", f.D}, {"reason", f.reason}});
    }
    j["failures"] = failures;
    j["source"] = source;
    j["param_count"] = count;
    emit(optima_json, j);
  });
}

lrs_status lrs_fit_law(const char* optima_json, const char* units_json, char** law_artifact) {
  return guard([&] {
    const auto points = optima_from_json(parse_json(optima_json, "optima"));
    const LawUnits units = units_json ? units_arg(parse_json(units_json, "units")) : LawUnits{};
    const LRLaw law = fit_lr_law(points, units);
    emit(law_artifact, to_json(law, points_digest(points)));
  });
}

lrs_status lrs_law_from_json(const char* artifact, lrs_law** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    const json j = parse_json(artifact, "artifact");
    LRLaw law = lr_law_from_json(j);
    *out = new lrs_law{law, j.value("points_digest", std::string())};
  });
}

void lrs_law_free(lrs_law* law) { delete law; }

lrs_status lrs_law_predict(const lrs_law* law, double N, double D, double* out) {
  return guard([&] {
    require(law, "law");
    require(out, "out");
    *out = predict_lr(law->law, N, D);
  });
}

lrs_status lrs_law_predict_units(const lrs_law* law, double N, double D, const char* units_json,
                                 double* out) {
  return guard([&] {
    require(law, "law");
    require(out, "out");
    *out = predict_lr(law->law, N, D, units_arg(parse_json(units_json, "units")));
  });
}

lrs_status lrs_law_ratio(const lrs_law* law, double N1, double N2, double D1, double D2,
                         double* out) {
  return guard([&] {
    require(law, "law");
    require(out, "out");
    *out = lr_ratio(law->law, N1, N2, D1, D2);
  });
}

lrs_status lrs_law_to_json(const lrs_law* law, char** artifact) {
  return guard([&] {
    require(law, "law");
    emit(artifact, to_json(law->law, law->points_digest));
  });
}

// ---- module-level search ---------------------------------------------------

lrs_status lrs_search_plan_init(const char* request, lrs_search_plan** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    const json req = parse_json(request, "request");
    SearchPlan::Grids grids;
    for (const auto& [key, values] : req.at("grids").items()) {
      const auto grid = quantity_list(values, "grids");
      if (key == "all") {
        for (ModuleGroup g : kAllModuleGroups) grids[g] = grid;
      } else {
        grids[module_group_from_string(key)] = grid;
      }
    }
    std::array<ModuleGroup, 4> order = kDefaultStageOrder;
    if (req.contains("stage_order")) {
      const auto& so = req["stage_order"];
      if (!so.is_array() || so.size() != 4) {
        fail(ErrorCode::InvalidArgument, "stage_order must list the four groups");
      }
      for (std::size_t i = 0; i < 4; ++i) order[i] = module_group_from_string(so[i].get<std::string>());
    }
    const double budget = req.contains("D_budget") ? quantity_arg(req["D_budget"], "D_budget")
                                                   : kDefaultSearchBudgetTokens;
    SearchPlan plan = init_plan(shape_arg(req.at("shape")),
                                quantity_arg(req.at("global_opt_lr"), "global_opt_lr"), grids,
                                budget, order);
    *out = new lrs_search_plan{std::move(plan)};
  });
}

lrs_status lrs_search_plan_from_json(const char* text, lrs_search_plan** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    *out = new lrs_search_plan{plan_from_json(parse_json(text, "plan"))};
  });
}

void lrs_search_plan_free(lrs_search_plan* plan) { delete plan; }

lrs_status lrs_search_plan_to_json(const lrs_search_plan* plan, char** out) {
  return guard([&] {
    require(plan, "plan");
    emit(out, to_json(plan->plan));
  });
}

lrs_status lrs_search_plan_next(const lrs_search_plan* plan, char** configs_json) {
  return guard([&] {
    require(plan, "plan");
    json arr = json::array();
    for (const auto& c : next_stage_configs(plan->plan)) arr.push_back(to_json(c));
    emit(configs_json, arr);
  });
}

lrs_status lrs_search_plan_record(lrs_search_plan* plan, const char* points_json) {
  return guard([&] {
    require(plan, "plan");
    const json pts = parse_json(points_json, "points");
    std::vector<LrLossPoint> points;
    for (const auto& p : pts) points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    plan->plan = record_stage(plan->plan, points);
  });
}

lrs_status lrs_module_table(const char* plans_json, char** table_json, char** csv) {
  return guard([&] {
    const json arr = parse_json(plans_json, "plans");
    if (!arr.is_array()) fail(ErrorCode::InvalidArgument, "plans: expected an array");
    std::vector<SearchPlan> plans;
    for (const auto& p : arr) plans.push_back(plan_from_json(p));
    const ModuleLRTable table = assemble_table(plans);
    std::string table_text = to_json(table).dump();
    std::string csv_text = to_csv(table);
    emit(table_json, table_text);
    if (csv) {
      try {
        emit(csv, csv_text);
      } catch (...) {
        lrs_string_free(*table_json);
        *table_json = nullptr;
        throw;
      }
    }
  });
}

// ---- transfer plans --------------------------------------------------------

lrs_status lrs_transfer_plan_make(const char* request, lrs_transfer_plan** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    const json req = parse_json(request, "request");
    const auto tokens = [&](const char* key) {
      const double v = quantity_arg(req.at(key), key);
      if (!(v >= 1.0) || v > 1.8e19) fail(ErrorCode::InvalidArgument, std::string(key) + " must be >= 1");
      return static_cast<std::uint64_t>(std::llround(v));
    };
    TransferPlan plan = make_transfer_plan(
        shape_arg(req.at("proxy")), shape_arg(req.at("target")), tokens("tokens_proxy"),
        tokens("tokens_target"), req.value("alpha", 1.0),
        transfer_variant_from_string(req.value("variant", "complete_p")));
    *out = new lrs_transfer_plan{std::move(plan)};
  });
}

lrs_status lrs_transfer_plan_from_json(const char* text, lrs_transfer_plan** out) {
  return guard([&] {
    require(out, "out");
    *out = nullptr;
    *out = new lrs_transfer_plan{transfer_plan_from_json(parse_json(text, "plan"))};
  });
}

void lrs_transfer_plan_free(lrs_transfer_plan* plan) { delete plan; }

lrs_status lrs_transfer_plan_to_json(const lrs_transfer_plan* plan, char** out) {
  return guard([&] {
    require(plan, "plan");
    emit(out, to_json(plan->plan));
  });
}

lrs_status lrs_transfer_plan_compose(const lrs_transfer_plan* first,
                                     const lrs_transfer_plan* second, lrs_transfer_plan** out) {
  return guard([&] {
    require(first, "first");
    require(second, "second");
    require(out, "out");
    *out = nullptr;
    *out = new lrs_transfer_plan{compose_plans(first->plan, second->plan)};
  });
}

lrs_status lrs_transfer_plan_apply(const lrs_transfer_plan* plan, const char* base,
                                   char** hparams_json) {
  return guard([&] {
    require(plan, "plan");
    const AppliedHParams h = apply_plan(plan->plan, base_arg(parse_json(base, "base")));
    json j = {{"kind", "applied_hparams"},
              {"groups", to_json(h)},
              {"residual_mult", plan->plan.residual_mult()}};
    emit(hparams_json, j);
  });
}

lrs_status lrs_transfer_plan_table(const lrs_transfer_plan* plan, char** text) {
  return guard([&] {
    require(plan, "plan");
    emit(text, render_table(plan->plan));
  });
}

// ---- oracle ----------------------------------------------------------------

lrs_status lrs_reference_surface(double noise_sigma, uint64_t seed, char** surface_json) {
  return guard([&] {
    const auto s = oracle::reference_surface(noise_sigma, seed);
    s.validate();
    emit(surface_json, oracle::to_json(s));
  });
}

lrs_status lrs_simulate(const char* request, char** jsonl) {
  return guard([&] {
    const json req = parse_json(request, "request");
    const oracle::SurfaceSpec spec = req.contains("surface")
                                         ? oracle::surface_from_json(req["surface"])
                                         : oracle::reference_surface(1e-3, 0);
    std::vector<ModelShape> shapes;
    if (req.contains("shapes")) {
      for (const auto& s : req["shapes"]) shapes.push_back(shape_arg(s));
    } else {
      shapes = oracle::reference_design_shapes();
    }
    const auto D_grid = req.contains("D_grid") ? quantity_list(req["D_grid"], "D_grid")
                                               : oracle::reference_token_grid();
    const auto lr_grid = req.contains("lr_grid") ? quantity_list(req["lr_grid"], "lr_grid")
                                                 : oracle::reference_lr_grid();
    emit(jsonl, serialize_runs(oracle::gen_runs(spec, shapes, D_grid, lr_grid)));
  });
}

lrs_status lrs_sample_loss(const char* surface_json, double N, double D, double eta,
                           double* out) {
  return guard([&] {
    require(out, "out");
    *out = oracle::sample_loss(oracle::surface_from_json(parse_json(surface_json, "surface")), N,
                               D, eta);
  });
}

// ---- micro-trainer ---------------------------------------------------------

lrs_status lrs_net_config(const char* request, char** net_config_json) {
  return guard([&] {
    const json req = parse_json(request, "request");
    const int width = req.value("width", 64);
    const int depth = req.value("depth", 2);
    const std::uint64_t seed = req.value("seed", std::uint64_t{1});
    const auto param = micro::parametrization_from_string(req.value("parametrization", "sp"));
    micro::NetConfig c;
    if (req.contains("plan")) {
      const TransferPlan plan = transfer_plan_from_json(req["plan"]);
      c.width = width;
      c.depth = depth;
      c.seed = seed;
      c.parametrization = micro::Parametrization::MuPComplete;
      c.residual_mult = plan.residual_mult();
      c.hparams = apply_plan(plan, base_arg(req.value("base", json())));
    } else if (param == micro::Parametrization::SP) {
      c = micro::sp_config(width, depth, req.value("lr", 3e-3), seed);
    } else {
      c = micro::mup_config(width, depth, req.value("base_width", width),
                            req.value("base_depth", depth), base_arg(req.value("base", json())),
                            seed);
    }
    c.heads = req.value("heads", c.heads);
    c.vocab = req.value("vocab", c.vocab);
    c.mlp_ratio = req.value("mlp_ratio", c.mlp_ratio);
    c.moe_experts = req.value("moe_experts", c.moe_experts);
    c.qk_norm = req.value("qk_norm", c.qk_norm);
    if (c.qk_norm && !c.hparams.count(TransferGroup::QKNorms)) {
      c.hparams[TransferGroup::QKNorms] = c.hparams.at(TransferGroup::HiddenBiasesNorms);
    }
    c.validate();
    emit(net_config_json, micro::to_json(c));
  });
}

lrs_status lrs_train_micro(const char* request, char** trace_json) {
  return guard([&] {
    const json req = parse_json(request, "request");
    micro::Net net(micro::net_config_from_json(req.at("net")));
    micro::TaskSpec task_spec = task_arg(req.value("task", json()));
    task_spec.vocab = net.config().vocab;
    const micro::MarkovTask task(task_spec);
    micro::TrainOptions opt;
    opt.steps = req.value("steps", opt.steps);
    opt.schedule.warmup_steps = req.value("warmup_steps", opt.schedule.warmup_steps);
    opt.schedule.decay_steps = req.value("decay_steps", opt.schedule.decay_steps);
    opt.schedule.decay_fraction = req.value("decay_fraction", opt.schedule.decay_fraction);
    opt.checkpoints = req.value("checkpoints", std::vector<int>{0, opt.steps});
    opt.keep_snapshots = req.value("keep_snapshots", false);
    opt.ablate_qk_norm = req.value("ablate_qk_norm", false);
    const int probe_sequences = req.value("probe_sequences", 8);
    if (probe_sequences > 0) opt.probe = task.probe_batch(probe_sequences);
    const micro::TrainTrace trace = micro::train(net, task, opt);
    json j = micro::to_json(trace);
    j["net"] = micro::to_json(net.config());
    emit(trace_json, j);
  });
}

lrs_status lrs_coordcheck(const char* sweep_json, int with_steps, char** report_json) {
  return guard([&] {
    const micro::SweepConfig sweep = micro::sweep_config_from_json(parse_json(sweep_json, "sweep"));
    const micro::CoordCheckReport r =
        with_steps ? micro::coord_check_with_steps(sweep) : micro::coord_check_sweep(sweep);
    emit(report_json, micro::to_json(r));
  });
}

lrs_status lrs_grad_check(const char* request, char** result_json) {
  return guard([&] {
    const json req = parse_json(request, "request");
    const micro::Net net(micro::net_config_from_json(req.at("net")));
    micro::TaskSpec task_spec = task_arg(req.value("task", json()));
    task_spec.vocab = net.config().vocab;
    const micro::MarkovTask task(task_spec);
    const auto r = micro::grad_check(net, task.batch(0), req.value("epsilon", 1e-4),
                                     req.value("coords", 6));
    emit(result_json, json{{"kind", "grad_check"},
                           {"max_rel_error", r.max_rel_error},
                           {"max_abs_error", r.max_abs_error},
                           {"per_tensor", r.per_tensor}});
  });
}

}  // extern "C"
