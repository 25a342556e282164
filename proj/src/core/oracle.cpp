// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "lrscale/oracle.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "lrscale/error.hpp"
#include "lrscale/ingest.hpp"
#include "text.hpp"

namespace lrscale::oracle {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t h, double v) {
  return splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
}

// Standard normal draw from a 64-bit key (Box-Muller on two derived uniforms).
double keyed_normal(std::uint64_t key) {
  const std::uint64_t a = splitmix64(key);
  const std::uint64_t b = splitmix64(a);
  const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ModelShape shape(const char* name, double total, double active, int hidden, int layers,
                 int interm) {
  return ModelShape{name, total, active, hidden, layers, 32, 4, interm, true};
}

}  // namespace

void SurfaceSpec::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!(C_eta > 0.0 && finite(alpha_N) && finite(beta_D))) {
    fail(ErrorCode::InvalidArgument, "surface: C_eta must be > 0, exponents finite");
  }
  if (!(A > 0.0 && gamma > 0.0)) fail(ErrorCode::InvalidArgument, "surface: A, gamma must be > 0");
  if (!(C_curv >= 0.0 && noise_sigma >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "surface: C_curv and noise_sigma must be >= 0");
  }
  if (!(floor_inf >= 0.0 && floor_scale >= 0.0 && floor_exponent >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "surface: loss floor terms must be >= 0");
  }
  if (!(units.n_scale > 0.0 && units.d_scale > 0.0)) {
    fail(ErrorCode::InvalidArgument, "surface: unit scales must be > 0");
  }
  if (group_offsets) {
    for (const auto& [g, k] : *group_offsets) {
      if (!(k > 0.0)) fail(ErrorCode::InvalidArgument, "surface: group offsets must be > 0");
    }
  }
}

double SurfaceSpec::planted_optimum(double N, double D) const {
  return C_eta * std::pow(N / units.n_scale, -alpha_N) * std::pow(D / units.d_scale, -beta_D);
}

double SurfaceSpec::floor(double N) const {
  return floor_inf + floor_scale * std::pow(N, -floor_exponent);
}

SurfaceSpec reference_surface(double noise_sigma, std::uint64_t seed) {
  SurfaceSpec s;
  s.noise_sigma = noise_sigma;
  s.seed = seed;
  return s;
}

double sample_loss(const SurfaceSpec& spec, double N, double D, double eta,
                   const std::optional<ModuleLRs>& module_lrs) {
  if (!(N > 0.0 && D > 0.0 && eta > 0.0)) {
    fail(ErrorCode::InvalidArgument, "sample_loss needs N, D, eta > 0");
  }
  const double opt = std::log(spec.planted_optimum(N, D));
  double quad = 0.0;
  if (spec.group_offsets) {
    for (ModuleGroup g : kAllModuleGroups) {
      double lr = eta;
      if (module_lrs) {
        if (auto it = module_lrs->find(g); it != module_lrs->end()) lr = it->second;
      }
      double k = 1.0;
      if (auto it = spec.group_offsets->find(g); it != spec.group_offsets->end()) k = it->second;
      const double u = std::log(lr) - opt - std::log(k);
      quad += 0.25 * spec.C_curv * u * u;
    }
  } else {
    const double u = std::log(eta) - opt;
    quad = spec.C_curv * u * u;
  }
  double loss = spec.floor(N) + spec.A * std::pow(D, -spec.gamma) + quad;
  if (spec.noise_sigma > 0.0) {
    std::uint64_t key = splitmix64(spec.seed);
    key = mix(key, N);
    key = mix(key, D);
    key = mix(key, eta);
    if (module_lrs) {
      for (const auto& [g, lr] : *module_lrs) {
        key = mix(key, static_cast<double>(static_cast<int>(g)));
        key = mix(key, lr);
      }
    }
    loss += spec.noise_sigma * keyed_normal(key);
  }
  return loss;
}

std::vector<RunRecord> gen_runs(const SurfaceSpec& spec, const std::vector<ModelShape>& shapes,
                                const std::vector<double>& D_grid,
                                const std::vector<double>& lr_grid) {
  spec.validate();
  if (shapes.empty() || D_grid.empty() || lr_grid.empty()) {
    fail(ErrorCode::InvalidArgument, "gen_runs needs nonempty shapes, D grid and lr grid");
  }
  std::vector<RunRecord> runs;
  for (const auto& shape : shapes) {
    for (double lr : lr_grid) {
      RunRecord run;
      run.run_id = "sim-" + shape.name + "-lr" + format_double(lr);
      run.shape = shape;
      run.lr_global = lr;
      run.schedule = WSDSchedule{1000, lr, 0.1, 0};
      run.batch_tokens = 4 * 1024 * 1024;
      run.other_hparams = {{"source", "oracle"}, {"seed", spec.seed}};
      for (double D : D_grid) {
        const auto tokens = static_cast<std::uint64_t>(std::llround(D));
        run.samples.push_back(
            {tokens, sample_loss(spec, shape.total_params, static_cast<double>(tokens), lr)});
      }
      run.validate();
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

std::vector<double> reference_lr_grid() { return {8e-5, 1e-4, 3e-4, 5e-4, 8e-4, 1.5e-3, 2e-3}; }

std::vector<double> reference_token_grid() {
  std::vector<double> grid;
  for (int k = 8; k <= 22; ++k) grid.push_back(k * 10e9);
  return grid;
}

std::vector<ModelShape> reference_design_shapes() {
  return {*builtin_shape("0.5b"), *builtin_shape("1b"), *builtin_shape("2b"),
          *builtin_shape("3b")};
}

std::optional<ModelShape> builtin_shape(std::string_view name) {
  if (name.starts_with("shapes/")) name.remove_prefix(7);
  if (name == "0.5b") return shape("0.5b", 550e6, 100e6, 256, 3, 768);
  if (name == "1b") return shape("1b", 1e9, 190e6, 384, 9, 768);
  if (name == "2b") return shape("2b", 2e9, 280e6, 512, 12, 768);
  if (name == "3b") return shape("3b", 3e9, 400e6, 640, 15, 768);
  if (name == "4b") return shape("4b", 4e9, 530e6, 768, 18, 768);
  if (name == "12b") return shape("12b", 12e9, 1.3e9, 1280, 30, 768);
  if (name == "2b-proxy") return shape("2b-proxy", 2e9, 290e6, 640, 18, 384);
  if (name == "2b-proxy-512") return shape("2b-proxy-512", 2e9, 290e6, 512, 18, 512);
  return std::nullopt;
}

std::vector<std::string> builtin_shape_names() {
  return {"0.5b", "1b", "2b", "3b", "4b", "12b", "2b-proxy", "2b-proxy-512"};
}

nlohmann::json to_json(const SurfaceSpec& s) {
  nlohmann::json j = {{"kind", "surface_spec"},
                      {"C_eta", s.C_eta},
                      {"alpha_N", s.alpha_N},
                      {"beta_D", s.beta_D},
                      {"units", {{"n_scale", s.units.n_scale}, {"d_scale", s.units.d_scale}}},
                      {"floor_inf", s.floor_inf},
                      {"floor_scale", s.floor_scale},
                      {"floor_exponent", s.floor_exponent},
                      {"A", s.A},
                      {"gamma", s.gamma},
                      {"C_curv", s.C_curv},
                      {"noise_sigma", s.noise_sigma},
                      {"seed", s.seed}};
  if (s.group_offsets) {
    nlohmann::json g = nlohmann::json::object();
    for (const auto& [grp, k] : *s.group_offsets) g[std::string(to_string(grp))] = k;
    j["group_offsets"] = g;
  } else {
    j["group_offsets"] = nullptr;
  }
  return j;
}

SurfaceSpec surface_from_json(const nlohmann::json& j) {
  try {
    SurfaceSpec s;
    s.C_eta = j.value("C_eta", s.C_eta);
    s.alpha_N = j.value("alpha_N", s.alpha_N);
    s.beta_D = j.value("beta_D", s.beta_D);
    if (j.contains("units")) {
      s.units.n_scale = j["units"].value("n_scale", 1.0);
      s.units.d_scale = j["units"].value("d_scale", 1.0);
    }
    s.floor_inf = j.value("floor_inf", s.floor_inf);
    s.floor_scale = j.value("floor_scale", s.floor_scale);
    s.floor_exponent = j.value("floor_exponent", s.floor_exponent);
    s.A = j.value("A", s.A);
    s.gamma = j.value("gamma", s.gamma);
    s.C_curv = j.value("C_curv", s.C_curv);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.seed = j.value("seed", s.seed);
    if (j.contains("group_offsets") && !j["group_offsets"].is_null()) {
      std::map<ModuleGroup, double> g;
      for (const auto& [k, v] : j["group_offsets"].items()) {
        g[module_group_from_string(k)] = v.get<double>();
      }
      s.group_offsets = g;
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("surface spec: ") + e.what());
  }
}

}  // namespace lrscale::oracle
