// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// lrscale command-line tool. Every subcommand writes at most one artifact into
// the workspace (plus CSV/SVG report files) and prints a one-line JSON summary.
// Failures print {"error": {...}} on stderr and exit with the status code.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "api.hpp"
#include "plot.hpp"
#include "workspace.hpp"

namespace fs = std::filesystem;
using namespace lrscale_cli;

namespace {

// ---- small parsing helpers -------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<double> quantity_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(quantity(part));
  if (out.empty()) usage_error("empty list '" + s + "'");
  return out;
}

json json_list(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

// A shape flag is either a built-in name ("12b", "shapes/12b") or a JSON file.
json shape_arg(const std::string& s) {
  if (fs::exists(s) && fs::is_regular_file(s)) return json::parse(read_file(s));
  char* out = nullptr;
  check(lrs_builtin_shape(s.c_str(), &out));
  return take_json(out);
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw CliError(LRS_PARSE, what + ": " + e.what());
  }
}

void print_summary(json summary) { std::cout << summary.dump() << "\n"; }

json artifact_summary(const ArtifactRef& ref, const std::string& kind) {
  return {{"kind", kind},
          {"artifact", ref.path.string()},
          {"digest", ref.digest},
          {"cached", ref.cached}};
}

std::string report_stem(const std::string& kind, const ArtifactRef& ref) {
  return kind + "-" + ref.digest;
}

json load_runs(const Workspace& ws) {
  RunStore store;
  check(lrs_run_store_open(ws.runs_path().string().c_str(), store.out()));
  char* text = nullptr;
  check(lrs_run_store_export(store.get(), &text));
  json runs = json::array();
  std::istringstream in(take(text));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) runs.push_back(json::parse(line));
  }
  return runs;
}

// Token counts present in every stored run's samples.
std::vector<double> common_tokens(const json& runs) {
  std::optional<std::set<double>> common;
  for (const auto& r : runs) {
    std::set<double> t;
    for (const auto& s : r.at("samples")) t.insert(s.at(0).get<double>());
    if (!common) {
      common = std::move(t);
    } else {
      std::set<double> keep;
      std::set_intersection(common->begin(), common->end(), t.begin(), t.end(),
                            std::inserter(keep, keep.end()));
      common = std::move(keep);
    }
  }
  return common ? std::vector<double>(common->begin(), common->end()) : std::vector<double>{};
}

// Log-log interpolation of a run's samples; NaN outside the sampled range.
double raw_loss_at(const json& samples, double D) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : samples) pts.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].first == D) return pts[i].second;
    if (i > 0 && pts[i - 1].first < D && D < pts[i].first) {
      const double t = (std::log(D) - std::log(pts[i - 1].first)) /
                       (std::log(pts[i].first) - std::log(pts[i - 1].first));
      return std::exp((1 - t) * std::log(pts[i - 1].second) + t * std::log(pts[i].second));
    }
  }
  return std::nan("");
}

json power_law_artifact(const json& samples, const json& extra) {
  json req = extra;
  req["samples"] = samples;
  char* out = nullptr;
  check(lrs_fit_power_law(req.dump().c_str(), &out));
  return take_json(out);
}

double extrapolate(const json& artifact, double tokens, bool* beyond = nullptr) {
  double loss = 0.0;
  int ext = 0;
  check(lrs_extrapolate(artifact.dump().c_str(), tokens, &loss, &ext));
  if (beyond) *beyond = ext != 0;
  return loss;
}

double quad_eval(const json& artifact, double lr) {
  const auto& p = artifact.at("params");
  const double u = std::log(lr) - p.at("eta_min").get<double>();
  return p.at("L_min").get<double>() + p.at("C").get<double>() * u * u;
}

std::string group_flag_name(const std::string& group) {
  std::string s = group;
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

// ---- subcommands -----------------------------------------------------------

struct Globals {
  std::string workspace;
};

// ingest: validates and appends JSONL run records. A receipt artifact keyed
// by content makes an identical re-ingest a no-op.
void cmd_ingest(const Globals& g, const std::string& input) {
  const Workspace ws(workspace_root(g.workspace));
  const std::string text = read_input(input);

  // Validate in a scratch in-memory store first.
  RunStore scratch;
  check(lrs_run_store_open("", scratch.out()));
  char* report = nullptr;
  const lrs_status st = lrs_run_store_ingest(scratch.get(), text.c_str(), &report);
  const json rep = report ? take_json(report) : json::object();
  if (st != LRS_OK) throw CliError(st, lrs_last_error(), rep);

  char* exported = nullptr;
  check(lrs_run_store_export(scratch.get(), &exported));
  json ids = json::array();
  {
    std::istringstream in(take(exported));
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) ids.push_back(json::parse(line).at("run_id"));
    }
  }
  const json receipt = {{"kind", "ingest_receipt"},
                        {"input_digest", digest(text)},
                        {"accepted", ids.size()},
                        {"run_ids", ids}};
  const std::string receipt_text = receipt.dump(2) + "\n";
  if (auto hit = ws.find_artifact("ingest_receipt", digest(receipt_text))) {
    ArtifactRef ref{*hit, digest(receipt_text), true};
    json s = artifact_summary(ref, "ingest_receipt");
    s["accepted"] = 0;
    print_summary(s);
    return;
  }

  ws.ensure();
  RunStore store;
  check(lrs_run_store_open(ws.runs_path().string().c_str(), store.out()));
  check(lrs_run_store_ingest(store.get(), text.c_str(), nullptr));
  const ArtifactRef ref = ws.write_artifact(receipt);
  json s = artifact_summary(ref, "ingest_receipt");
  s["accepted"] = ids.size();
  print_summary(s);
}

struct FitLdOptions {
  std::string run_id;
  std::string samples_file;
  std::string min_tokens;
  double min_gamma = -1;
  std::string predict;
  double interval = 0;
};

void cmd_fit_ld(const Globals& g, const FitLdOptions& o) {
  const Workspace ws(workspace_root(g.workspace));
  json samples;
  if (!o.samples_file.empty()) {
    const json j = parse_json_text(read_input(o.samples_file), o.samples_file);
    samples = j.is_object() ? j.at("samples") : j;
  } else if (!o.run_id.empty()) {
    RunStore store;
    check(lrs_run_store_open(ws.runs_path().string().c_str(), store.out()));
    char* run = nullptr;
    check(lrs_run_store_get(store.get(), o.run_id.c_str(), &run));
    samples = take_json(run).at("samples");
  } else {
    usage_error("fit-ld needs --run or --samples");
  }
  json extra = json::object();
  if (!o.min_tokens.empty()) extra["min_tokens"] = quantity(o.min_tokens);
  if (o.min_gamma >= 0) extra["min_gamma"] = o.min_gamma;
  const json art = power_law_artifact(samples, extra);
  const ArtifactRef ref = ws.write_artifact(art);

  // CSV/SVG: observed samples beside the fitted curve.
  std::ostringstream csv;
  csv << "tokens,loss,fit\n";
  Series obs{"observed", {}, true}, fit{"fit", {}};
  for (const auto& s : samples) {
    const double t = s.at(0).get<double>(), l = s.at(1).get<double>();
    const double f = extrapolate(art, t);
    csv << num(t) << ',' << num(l) << ',' << num(f) << '\n';
    obs.points.emplace_back(t, l);
    fit.points.emplace_back(t, f);
  }
  const std::string stem = report_stem("power_law", ref);
  ws.write_report(stem, "csv", csv.str());
  ws.write_report(stem, "svg",
                  svg_plot({"Loss vs tokens", "tokens", "loss", true, false}, {obs, fit}));

  json s = artifact_summary(ref, "power_law");
  s["params"] = art.at("params");
  s["r2"] = art.at("r2");
  s["low_trust"] = art.at("low_trust");
  if (!o.predict.empty()) {
    bool beyond = false;
    const double D = quantity(o.predict);
    s["prediction"] = {{"tokens", D}, {"loss", extrapolate(art, D, &beyond)}, {"extrapolated", beyond}};
  }
  print_summary(s);
}

struct FitQuadOptions {
  std::string points_file;
  std::string model;
  std::string d;
  std::string source = "smoothed";
};

void cmd_fit_quad(const Globals& g, const FitQuadOptions& o) {
  const Workspace ws(workspace_root(g.workspace));
  json points = json::array();
  if (!o.points_file.empty()) {
    const json j = parse_json_text(read_input(o.points_file), o.points_file);
    points = j.is_object() ? j.at("points") : j;
  } else if (!o.model.empty() && !o.d.empty()) {
    if (o.source != "smoothed" && o.source != "raw") usage_error("--source must be smoothed or raw");
    const double D = quantity(o.d);
    for (const auto& r : load_runs(ws)) {
      if (r.at("model").at("name") != o.model) continue;
      const double loss = o.source == "raw"
                              ? raw_loss_at(r.at("samples"), D)
                              : extrapolate(power_law_artifact(r.at("samples"), json::object()), D);
      if (std::isfinite(loss)) points.push_back({r.at("lr_global").get<double>(), loss});
    }
    if (points.empty()) {
      throw CliError(LRS_UNDERDETERMINED, "no runs of model '" + o.model + "' cover D");
    }
  } else {
    usage_error("fit-quad needs --points, or --model with --d");
  }
  char* out = nullptr;
  check(lrs_fit_quad(json{{"points", points}}.dump().c_str(), &out));
  const json art = take_json(out);
  const ArtifactRef ref = ws.write_artifact(art);

  std::ostringstream csv;
  csv << "lr,loss,fit\n";
  Series obs{"observed", {}, true}, fit{"quadratic fit", {}};
  std::vector<double> lrs;
  for (const auto& p : points) {
    const double lr = p.at(0).get<double>(), l = p.at(1).get<double>();
    csv << num(lr) << ',' << num(l) << ',' << num(quad_eval(art, lr)) << '\n';
    obs.points.emplace_back(lr, l);
    lrs.push_back(lr);
  }
  const auto [lo, hi] = std::minmax_element(lrs.begin(), lrs.end());
  for (int i = 0; i <= 60; ++i) {
    const double lr = std::exp(std::log(*lo) + (std::log(*hi) - std::log(*lo)) * i / 60.0);
    fit.points.emplace_back(lr, quad_eval(art, lr));
  }
  const std::string stem = report_stem("quad_log", ref);
  ws.write_report(stem, "csv", csv.str());
  ws.write_report(stem, "svg",
                  svg_plot({"Loss vs learning rate", "learning rate", "loss", true, false}, {obs, fit}));

  json s = artifact_summary(ref, "quad_log");
  s["eta_star"] = art.at("optimal_lr");
  s["r2"] = art.at("r2");
  print_summary(s);
}

struct FitLawOptions {
  std::string d_grid;
  std::string source;
  std::string param_count;
  std::string n_scale, d_scale, n_label, d_label;
};

void cmd_fit_law(const Globals& g, const FitLawOptions& o) {
  const Workspace ws(workspace_root(g.workspace));
  const json& cfg = ws.config();
  const json runs = load_runs(ws);
  if (runs.empty()) throw CliError(LRS_UNDERDETERMINED, "the run store is empty");

  json opts = json::object();
  if (!o.d_grid.empty()) {
    opts["D_grid"] = json_list(quantity_list(o.d_grid));
  } else if (cfg.contains("D_grid")) {
    opts["D_grid"] = cfg["D_grid"];
  } else {
    const auto common = common_tokens(runs);
    if (common.empty()) {
      throw CliError(LRS_UNDERDETERMINED, "runs share no sample tokens; pass --d-grid");
    }
    opts["D_grid"] = json_list(common);
  }
  opts["source"] = !o.source.empty() ? o.source : cfg.value("source", "smoothed");
  opts["param_count"] = !o.param_count.empty() ? o.param_count : cfg.value("param_count", "total");

  json units = cfg.value("units", json::object());
  if (!o.n_scale.empty()) units["n_scale"] = quantity(o.n_scale);
  if (!o.d_scale.empty()) units["d_scale"] = quantity(o.d_scale);
  if (!o.n_label.empty()) units["n_label"] = o.n_label;
  if (!o.d_label.empty()) units["d_label"] = o.d_label;

  RunStore store;
  check(lrs_run_store_open(ws.runs_path().string().c_str(), store.out()));
  char* out = nullptr;
  check(lrs_collect_optima(store.get(), opts.dump().c_str(), &out));
  const json optima = take_json(out);
  check(lrs_fit_law(optima.dump().c_str(), units.dump().c_str(), &out));
  const json art = take_json(out);
  const ArtifactRef ref = ws.write_artifact(art);

  Law law;
  check(lrs_law_from_json(art.dump().c_str(), law.out()));
  const double ns = art.at("units").at("n_scale").get<double>();
  const double ds = art.at("units").at("d_scale").get<double>();
  std::ostringstream csv;
  csv << "shape,N,D,eta_star,predicted,source_r2\n";
  std::map<std::string, Series> measured, fitted;
  for (const auto& p : optima.at("points")) {
    const double N = p.at("N").get<double>(), D = p.at("D").get<double>();
    double pred = 0.0;
    check(lrs_law_predict(law.get(), N / ns, D / ds, &pred));
    const std::string shape = p.value("shape", "");
    csv << shape << ',' << num(N) << ',' << num(D) << ',' << num(p.at("eta_star").get<double>())
        << ',' << num(pred) << ',' << num(p.at("source_r2").get<double>()) << '\n';
    auto& m = measured[shape];
    m.name = shape;
    m.markers_only = true;
    m.points.emplace_back(D, p.at("eta_star").get<double>());
    auto& f = fitted[shape];
    f.name = shape + " law";
    f.points.emplace_back(D, pred);
  }
  std::vector<Series> series;
  for (auto& [k, v] : measured) series.push_back(v);
  for (auto& [k, v] : fitted) series.push_back(v);
  const std::string stem = report_stem("lr_law", ref);
  ws.write_report(stem, "csv", csv.str());
  ws.write_report(stem, "svg",
                  svg_plot({"Optimal learning rate vs tokens", "tokens", "eta*", true, true}, series));

  json s = artifact_summary(ref, "lr_law");
  s["C_eta"] = art.at("C_eta");
  s["alpha_N"] = art.at("alpha_N");
  s["beta_D"] = art.at("beta_D");
  s["r2"] = art.at("r2");
  s["points"] = optima.at("points").size();
  s["failures"] = optima.at("failures");
  print_summary(s);
}

struct PredictOptions {
  std::string law;
  std::string n, d;
  bool law_units = false;
};

void cmd_predict(const Globals& g, const PredictOptions& o) {
  const Workspace ws(workspace_root(g.workspace));
  const json art = load_artifact(o.law, "lr_law");
  Law law;
  check(lrs_law_from_json(art.dump().c_str(), law.out()));
  double N = quantity(o.n), D = quantity(o.d);
  // Flags are raw counts unless --law-units says they are already scaled.
  if (!o.law_units) {
    N /= art.at("units").at("n_scale").get<double>();
    D /= art.at("units").at("d_scale").get<double>();
  }
  double eta = 0.0;
  check(lrs_law_predict(law.get(), N, D, &eta));
  ws.write_artifact({{"kind", "lr_prediction"},
                     {"law_digest", digest(read_file(o.law))},
                     {"N", N},
                     {"D", D},
                     {"units", art.at("units")},
                     {"eta_star", eta}});
  std::cout << num(eta) << "\n";
}

struct ModsearchOptions {
  std::string shape;
  std::string global_lr;
  std::string grid;
  std::map<std::string, std::string> group_grids;
  std::string budget;
  std::string stage_order;
  std::string plan;
  std::string record;
  std::vector<std::string> table;
};

void cmd_plan_modsearch(const Globals& g, const ModsearchOptions& o) {
  const Workspace ws(workspace_root(g.workspace));
  if (!o.table.empty()) {
    json plans = json::array();
    for (const auto& f : o.table) plans.push_back(load_artifact(f, "search_plan"));
    char* table = nullptr;
    char* csv = nullptr;
    check(lrs_module_table(plans.dump().c_str(), &table, &csv));
    const json art = take_json(table);
    const std::string csv_text = take(csv);
    const ArtifactRef ref = ws.write_artifact(art);
    ws.write_report(report_stem("module_lr_table", ref), "csv", csv_text);
    print_summary(artifact_summary(ref, "module_lr_table"));
    return;
  }

  SearchPlan plan;
  if (!o.plan.empty()) {
    check(lrs_search_plan_from_json(load_artifact(o.plan, "search_plan").dump().c_str(), plan.out()));
    if (!o.record.empty()) {
      const json pts = parse_json_text(read_input(o.record), o.record);
      check(lrs_search_plan_record(plan.get(), (pts.is_object() ? pts.at("points") : pts).dump().c_str()));
    }
  } else {
    if (o.shape.empty() || o.global_lr.empty()) {
      usage_error("plan-modsearch needs --shape and --global-lr (or --plan, or --table)");
    }
    json grids = json::object();
    if (!o.grid.empty()) grids["all"] = json_list(quantity_list(o.grid));
    for (const auto& [group, list] : o.group_grids) {
      if (!list.empty()) grids[group] = json_list(quantity_list(list));
    }
    if (grids.empty()) usage_error("plan-modsearch needs --grid or per-group grids");
    json req = {{"shape", shape_arg(o.shape)}, {"global_opt_lr", quantity(o.global_lr)}, {"grids", grids}};
    if (!o.budget.empty()) req["D_budget"] = quantity(o.budget);
    if (!o.stage_order.empty()) {
      json order = json::array();
      for (const auto& s : split(o.stage_order, ',')) order.push_back(s);
      req["stage_order"] = order;
    }
    check(lrs_search_plan_init(req.dump().c_str(), plan.out()));
  }
  char* text = nullptr;
  check(lrs_search_plan_to_json(plan.get(), &text));
  const json art = take_json(text);
  const ArtifactRef ref = ws.write_artifact(art);
  json s = artifact_summary(ref, "search_plan");
  s["complete"] = art.at("complete");
  if (!art.at("complete").get<bool>()) {
    char* cfgs = nullptr;
    check(lrs_search_plan_next(plan.get(), &cfgs));
    s["next_configs"] = take_json(cfgs);
  }
  print_summary(s);
}

struct MupOptions {
  std::string proxy, target, tokens, variant = "complete_p";
  double alpha = 1.0;
  std::string base;
};

void cmd_plan_mup(const Globals& g, const MupOptions& o) {
  const Workspace ws(workspace_root(g.workspace));
  const auto tok = split(o.tokens, ':');
  if (tok.size() != 2) usage_error("--tokens expects PROXY:TARGET, e.g. 200e9:500e9");
  const json req = {{"proxy", shape_arg(o.proxy)},
                    {"target", shape_arg(o.target)},
                    {"tokens_proxy", quantity(tok[0])},
                    {"tokens_target", quantity(tok[1])},
                    {"alpha", o.alpha},
                    {"variant", o.variant}};
  TransferPlan plan;
  check(lrs_transfer_plan_make(req.dump().c_str(), plan.out()));
  char* text = nullptr;
  check(lrs_transfer_plan_to_json(plan.get(), &text));
  const json art = take_json(text);
  const ArtifactRef ref = ws.write_artifact(art);
  char* table = nullptr;
  check(lrs_transfer_plan_table(plan.get(), &table));
  const std::string table_text = take(table);
  ws.write_report(report_stem("transfer_plan", ref), "txt", table_text);

  std::cout << table_text;
  if (!table_text.empty() && table_text.back() != '\n') std::cout << '\n';
  json s = artifact_summary(ref, "transfer_plan");
  if (!o.base.empty()) {
    const json base = parse_json_text(read_input(o.base), o.base);
    char* applied = nullptr;
    check(lrs_transfer_plan_apply(plan.get(), base.dump().c_str(), &applied));
    s["applied"] = take_json(applied);
  }
  print_summary(s);
}

struct SimulateOptions {
  bool planted_constants = false;
  std::string surface;
  std::string design;
  double noise = 1e-3;
  std::uint64_t seed = 0;
  std::string shapes, d_grid, lr_grid;
  std::string output;
};

void cmd_simulate(const Globals& g, const SimulateOptions& o) {
  const Workspace ws(workspace_root(g.workspace));
  json surface;
  if (!o.surface.empty()) {
    surface = load_artifact(o.surface, "surface_spec");
  } else if (o.planted_constants) {
    char* out = nullptr;
    check(lrs_reference_surface(o.noise, o.seed, &out));
    surface = take_json(out);
  } else {
    usage_error("simulate needs --paper-constants or --surface");
  }
  json req = {{"surface", surface}};
  if (!o.design.empty() && o.design != "s4.2" && o.design != "reference") {
    usage_error("unknown design '" + o.design + "' (known: s4.2)");
  }
  if (!o.shapes.empty()) {
    json shapes = json::array();
    for (const auto& s : split(o.shapes, ',')) shapes.push_back(shape_arg(s));
    req["shapes"] = shapes;
  }
  if (!o.d_grid.empty()) req["D_grid"] = json_list(quantity_list(o.d_grid));
  if (!o.lr_grid.empty()) req["lr_grid"] = json_list(quantity_list(o.lr_grid));
  char* out = nullptr;
  check(lrs_simulate(req.dump().c_str(), &out));
  const std::string jsonl = take(out);
  const ArtifactRef ref = ws.write_artifact(surface);
  json s = artifact_summary(ref, "surface_spec");
  s["runs_digest"] = digest(jsonl);
  if (o.output.empty() || o.output == "-") {
    std::cout << jsonl;
    std::cerr << s.dump() << "\n";  // stdout carries the records
  } else {
    write_file_atomic(o.output, jsonl);
    s["output"] = o.output;
    print_summary(s);
  }
}

struct MicroOptions {
  int width = 64, depth = 2, heads = 4, vocab = 0, moe_experts = 0;
  std::string parametrization = "sp";
  bool qk_norm = true;
  bool ablate_qk_norm = false;
  int steps = 200, warmup = 50;
  std::uint64_t seed = 1;
  std::string plan;
  double lr = 3e-3;
  int base_width = 0, base_depth = 0;
  std::string checkpoints;
  std::string widths = "32,64,128,256";
  bool with_steps = false;
  int probe_sequences = 8;
};

std::vector<int> int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : split(s, ',')) {
    const double v = quantity(part);
    if (v != std::floor(v) || v < 0 || v > 1e9) usage_error("expected integers in '" + s + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void cmd_train_micro(const Globals& g, const MicroOptions& o) {
  const Workspace ws(workspace_root(g.workspace));
  json net_req = {{"width", o.width},       {"depth", o.depth},
                  {"heads", o.heads},       {"moe_experts", o.moe_experts},
                  {"qk_norm", o.qk_norm},   {"parametrization", o.parametrization},
                  {"lr", o.lr},             {"seed", o.seed}};
  if (o.vocab > 0) net_req["vocab"] = o.vocab;
  if (o.base_width > 0) net_req["base_width"] = o.base_width;
  if (o.base_depth > 0) net_req["base_depth"] = o.base_depth;
  net_req["base"] = {{"eta_b", o.lr}, {"sigma_b", 0.02}, {"eps_b", 1e-8}, {"lambda_b", 0.0}};
  if (!o.plan.empty()) net_req["plan"] = load_artifact(o.plan, "transfer_plan");
  char* out = nullptr;
  check(lrs_net_config(net_req.dump().c_str(), &out));
  const json net = take_json(out);

  json req = {{"net", net},
              {"steps", o.steps},
              {"warmup_steps", o.warmup},
              {"ablate_qk_norm", o.ablate_qk_norm},
              {"probe_sequences", o.probe_sequences},
              {"task", {{"seed", o.seed}}}};
  if (!o.checkpoints.empty()) {
    req["checkpoints"] = int_list(o.checkpoints);
  } else {
    std::vector<int> cps{0};
    for (int k = 1; k <= 4; ++k) cps.push_back(o.steps * k / 4);
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    req["checkpoints"] = cps;
  }
  check(lrs_train_micro(req.dump().c_str(), &out));
  const json trace = take_json(out);
  const ArtifactRef ref = ws.write_artifact(trace);

  std::ostringstream csv;
  csv << "step,loss\n";
  Series loss{"train loss", {}};
  const auto& losses = trace.at("losses");
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double l = losses[i].is_number() ? losses[i].get<double>() : std::nan("");
    csv << i + 1 << ',' << num(l) << '\n';
    loss.points.emplace_back(static_cast<double>(i + 1), l);
  }
  std::ostringstream rms;
  rms << "step,tensor,update_rms\n";
  for (const auto& cp : trace.at("checkpoints")) {
    for (const auto& [name, v] : cp.at("update_rms").items()) {
      rms << cp.at("step").get<int>() << ',' << name << ',' << num(v.get<double>()) << '\n';
    }
  }
  const std::string stem = report_stem("train_trace", ref);
  ws.write_report(stem, "csv", csv.str());
  ws.write_report(stem + "-update_rms", "csv", rms.str());
  ws.write_report(stem, "svg", svg_plot({"Training loss", "step", "loss", false, false}, {loss}));

  json s = artifact_summary(ref, "train_trace");
  s["final_loss"] = losses.empty() ? json(nullptr) : losses.back();
  s["diverged"] = trace.at("diverged");
  print_summary(s);
}

void cmd_coordcheck(const Globals& g, const MicroOptions& o) {
  const Workspace ws(workspace_root(g.workspace));
  json sweep = {{"widths", int_list(o.widths)},
                {"depth", o.depth},
                {"heads", o.heads},
                {"moe_experts", o.moe_experts},
                {"qk_norm", o.qk_norm},
                {"ablate_qk_norm", o.ablate_qk_norm},
                {"parametrization", o.parametrization},
                {"base", {{"eta_b", o.lr}, {"sigma_b", 0.02}, {"eps_b", 1e-8}, {"lambda_b", 0.0}}},
                {"task", {{"seed", o.seed}}},
                {"probe_sequences", o.probe_sequences},
                {"steps", o.steps},
                {"warmup_steps", o.warmup},
                {"seed", o.seed}};
  if (o.vocab > 0) sweep["task"]["vocab"] = o.vocab;
  if (!o.checkpoints.empty()) {
    sweep["checkpoints"] = int_list(o.checkpoints);
  } else {
    std::vector<int> cps{0, o.steps / 10, o.steps / 2, o.steps};
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    sweep["checkpoints"] = cps;
  }
  char* out = nullptr;
  check(lrs_coordcheck(sweep.dump().c_str(), o.with_steps ? 1 : 0, &out));
  const json rep = take_json(out);
  const ArtifactRef ref = ws.write_artifact(rep);

  std::ostringstream csv;
  csv << "width,step,std_embed,std_attn_logits,std_logits\n";
  const char* sites[] = {"std_embed", "std_attn_logits", "std_logits"};
  std::vector<Series> series;
  for (const char* site : sites) series.push_back({site, {}});
  for (const auto& w : rep.at("widths")) {
    const int width = w.at("width").get<int>();
    const auto& stats = w.at("stats");
    for (const auto& st : stats) {
      csv << width << ',' << st.at("step").get<int>();
      for (const char* site : sites) {
        csv << ',' << (st.at(site).is_number() ? num(st.at(site).get<double>()) : "nan");
      }
      csv << '\n';
    }
    if (!stats.empty()) {
      for (std::size_t k = 0; k < 3; ++k) {
        const auto& v = stats.back().at(sites[k]);
        series[k].points.emplace_back(width, v.is_number() ? v.get<double>() : std::nan(""));
      }
    }
  }
  const std::string stem = report_stem("coord_check", ref);
  ws.write_report(stem, "csv", csv.str());
  ws.write_report(stem, "svg",
                  svg_plot({"Coordinate check at the final checkpoint", "width", "std of x_t - x_0",
                            true, true},
                           series));

  json s = artifact_summary(ref, "coord_check");
  s["partial"] = rep.at("partial");
  s["final_trend"] = rep.at("trends").empty() ? json(nullptr) : rep.at("trends").back();
  print_summary(s);
}

// report: read-only listing of the workspace, or CSV export of one artifact.
void cmd_report(const Globals& g, const std::string& kind_filter, const std::string& format) {
  const fs::path root = workspace_root(g.workspace);
  const Workspace ws(root);
  json out = {{"workspace", root.string()}, {"runs", 0}, {"artifacts", json::array()}};
  if (fs::exists(ws.runs_path())) out["runs"] = load_runs(ws).size();
  std::vector<fs::path> files;
  if (fs::exists(ws.artifacts_dir())) {
    for (const auto& e : fs::directory_iterator(ws.artifacts_dir())) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    json a;
    try {
      a = json::parse(read_file(f));
    } catch (const json::exception&) {
      continue;
    }
    const std::string kind = a.value("kind", "");
    if (!kind_filter.empty() && kind != kind_filter) continue;
    json entry = {{"kind", kind}, {"file", f.filename().string()}};
    if (kind == "lr_law") {
      for (const char* k : {"C_eta", "alpha_N", "beta_D", "r2"}) entry[k] = a.at(k);
    } else if (kind == "power_law") {
      entry["params"] = a.at("params");
      entry["low_trust"] = a.at("low_trust");
    } else if (kind == "quad_log") {
      entry["eta_star"] = a.at("optimal_lr");
    } else if (kind == "coord_check") {
      entry["partial"] = a.at("partial");
    } else if (kind == "train_trace") {
      entry["diverged"] = a.at("diverged");
    } else if (kind == "search_plan") {
      entry["complete"] = a.at("complete");
    } else if (kind == "ingest_receipt") {
      entry["accepted"] = a.at("accepted");
    }
    out["artifacts"].push_back(entry);
  }
  if (format == "json") {
    std::cout << out.dump(2) << "\n";
    return;
  }
  std::cout << "workspace " << out["workspace"].get<std::string>() << "\n";
  std::cout << "runs      " << out["runs"] << "\n";
  for (const auto& e : out["artifacts"]) {
    std::cout << "  " << e["file"].get<std::string>();
    for (const auto& [k, v] : e.items()) {
      if (k != "file" && k != "kind") std::cout << "  " << k << "=" << v.dump();
    }
    std::cout << "\n";
  }
}

int exit_code(lrs_status s) { return s == LRS_INTERNAL ? 70 : static_cast<int>(s); }

int report_error(lrs_status status, const std::string& message, const json& detail = nullptr) {
  json e = {{"status", lrs_status_name(status)}, {"code", static_cast<int>(status)}, {"message", message}};
  if (!detail.is_null()) e["detail"] = detail;
  std::cerr << json{{"error", e}}.dump() << "\n";
  return exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lrscale: learning-rate scaling toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--workspace", g.workspace, "Workspace root (default $LRSCALE_WORKSPACE or .lrscale)");
  app.set_version_flag("--version", std::string(lrs_version()));

  std::string ingest_input = "-";
  auto* ingest = app.add_subcommand("ingest", "Validate and append JSONL run records");
  ingest->add_option("--input,-i", ingest_input, "JSONL file ('-' for stdin)");

  FitLdOptions ld;
  auto* fit_ld = app.add_subcommand("fit-ld", "Fit L(D) = L0 + A D^-gamma to one run");
  fit_ld->add_option("--run", ld.run_id, "Run id in the store");
  fit_ld->add_option("--samples", ld.samples_file, "JSON [[tokens, loss], ...] instead of --run");
  fit_ld->add_option("--min-tokens", ld.min_tokens, "Drop samples below this token count");
  fit_ld->add_option("--min-gamma", ld.min_gamma, "Exponent below which the fit is low-trust");
  fit_ld->add_option("--predict", ld.predict, "Also extrapolate the loss to this token count");

  FitQuadOptions fq;
  auto* fit_quad = app.add_subcommand("fit-quad", "Fit loss vs ln(lr) with a quadratic");
  fit_quad->add_option("--points", fq.points_file, "JSON [[lr, loss], ...]");
  fit_quad->add_option("--model", fq.model, "Model name in the store");
  fit_quad->add_option("--d", fq.d, "Token count at which losses are read");
  fit_quad->add_option("--source", fq.source, "smoothed|raw")->check(CLI::IsMember({"smoothed", "raw"}));

  FitLawOptions fl;
  auto* fit_law = app.add_subcommand("fit-law", "Fit eta*(N, D) = C N^-alpha D^-beta over the store");
  fit_law->add_option("--d-grid", fl.d_grid, "Comma-separated token counts");
  fit_law->add_option("--source", fl.source, "smoothed|raw")->check(CLI::IsMember({"smoothed", "raw"}));
  fit_law->add_option("--param-count", fl.param_count, "total|active")->check(CLI::IsMember({"total", "active"}));
  fit_law->add_option("--n-scale", fl.n_scale, "Law unit for N, e.g. 1e9");
  fit_law->add_option("--d-scale", fl.d_scale, "Law unit for D");
  fit_law->add_option("--n-label", fl.n_label);
  fit_law->add_option("--d-label", fl.d_label);

  PredictOptions pr;
  auto* predict = app.add_subcommand("predict", "Evaluate a law artifact");
  predict->add_option("--law", pr.law, "lr_law artifact")->required();
  predict->add_option("--n", pr.n, "Parameters")->required();
  predict->add_option("--d", pr.d, "Tokens")->required();
  predict->add_flag("--law-units", pr.law_units, "N and D are already in the law's units");

  ModsearchOptions ms;
  auto* modsearch = app.add_subcommand("plan-modsearch", "Greedy per-module learning-rate search");
  modsearch->add_option("--shape", ms.shape, "Built-in shape name or shape JSON file");
  modsearch->add_option("--global-lr", ms.global_lr, "Global optimal learning rate");
  modsearch->add_option("--grid", ms.grid, "LR multipliers for every group");
  for (const char* group : {"embedding", "hidden", "router", "lm_head"}) {
    ms.group_grids[group];
    modsearch->add_option("--grid-" + group_flag_name(group), ms.group_grids[group],
                          std::string("LR multipliers for ") + group);
  }
  modsearch->add_option("--budget", ms.budget, "Token budget per search run");
  modsearch->add_option("--stage-order", ms.stage_order, "Comma-separated group order");
  modsearch->add_option("--plan", ms.plan, "Existing search_plan artifact");
  modsearch->add_option("--record", ms.record, "JSON [[lr, loss], ...] for the current stage");
  modsearch->add_option("--table", ms.table, "Assemble a table from completed plans");

  MupOptions mu;
  auto* mup = app.add_subcommand("plan-mup", "Hyperparameter transfer plan");
  mup->add_option("--proxy", mu.proxy, "Proxy shape")->required();
  mup->add_option("--target", mu.target, "Target shape")->required();
  mup->add_option("--tokens", mu.tokens, "PROXY:TARGET token horizons")->required();
  mup->add_option("--alpha", mu.alpha, "Depth exponent");
  mup->add_option("--variant", mu.variant, "complete_p|mup");
  mup->add_option("--base", mu.base, "Base hparams JSON to apply");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Emit synthetic runs from a planted surface");
  simulate->add_flag("--paper-constants", sim.planted_constants, "Use the built-in planted law");
  simulate->add_option("--surface", sim.surface, "surface_spec artifact");
  simulate->add_option("--design", sim.design, "Experiment design (s4.2)");
  simulate->add_option("--noise", sim.noise, "Loss noise sigma");
  simulate->add_option("--seed", sim.seed, "Noise seed");
  simulate->add_option("--shapes", sim.shapes, "Comma-separated shapes (overrides the design)");
  simulate->add_option("--d-grid", sim.d_grid, "Comma-separated sample token counts");
  simulate->add_option("--lr-grid", sim.lr_grid, "Comma-separated learning rates");
  simulate->add_option("--output,-o", sim.output, "Write JSONL here instead of stdout");

  MicroOptions mo;
  auto add_micro = [&](CLI::App* c) {
    c->add_option("--depth", mo.depth);
    c->add_option("--heads", mo.heads);
    c->add_option("--vocab", mo.vocab);
    c->add_option("--moe-experts", mo.moe_experts);
    c->add_option("--parametrization", mo.parametrization, "sp|mup_complete");
    c->add_flag("--qk-norm,!--no-qk-norm", mo.qk_norm, "QK-Norm in attention");
    c->add_flag("--ablate-qk-norm", mo.ablate_qk_norm, "Record attention logits without QK-Norm");
    c->add_option("--steps", mo.steps);
    c->add_option("--warmup", mo.warmup);
    c->add_option("--seed", mo.seed);
    c->add_option("--lr", mo.lr, "Learning rate (base rate under mup_complete)");
    c->add_option("--checkpoints", mo.checkpoints, "Comma-separated steps");
    c->add_option("--probe-sequences", mo.probe_sequences);
  };
  auto* train = app.add_subcommand("train-micro", "Train a small transformer and record a trace");
  add_micro(train);
  train->add_option("--width", mo.width);
  train->add_option("--base-width", mo.base_width);
  train->add_option("--base-depth", mo.base_depth);
  train->add_option("--plan", mo.plan, "transfer_plan artifact giving the hparams");
  auto* coord = app.add_subcommand("coordcheck", "Coordinate check over widths");
  add_micro(coord);
  coord->add_option("--widths", mo.widths, "Comma-separated widths");
  coord->add_flag("--with-steps", mo.with_steps, "Also emit the step series");

  std::string report_kind, report_format = "text";
  auto* report = app.add_subcommand("report", "Summarize the workspace (read-only)");
  report->add_option("--kind", report_kind, "Only artifacts of this kind");
  report->add_option("--format", report_format, "text|json")->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(LRS_INVALID_ARGUMENT, e.what());
  }

  try {
    if (*ingest) cmd_ingest(g, ingest_input);
    else if (*fit_ld) cmd_fit_ld(g, ld);
    else if (*fit_quad) cmd_fit_quad(g, fq);
    else if (*fit_law) cmd_fit_law(g, fl);
    else if (*predict) cmd_predict(g, pr);
    else if (*modsearch) cmd_plan_modsearch(g, ms);
    else if (*mup) cmd_plan_mup(g, mu);
    else if (*simulate) cmd_simulate(g, sim);
    else if (*train) cmd_train_micro(g, mo);
    else if (*coord) cmd_coordcheck(g, mo);
    else if (*report) cmd_report(g, report_kind, report_format);
  } catch (const CliError& e) {
    return report_error(e.status(), e.what(), e.detail());
  } catch (const json::exception& e) {
    return report_error(LRS_PARSE, e.what());
  } catch (const std::exception& e) {
    return report_error(LRS_INTERNAL, e.what());
  }
  return 0;
}
