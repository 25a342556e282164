// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic loss surfaces with a planted optimal-learning-rate law:
//
//   loss = L0(N) + A * D^-gamma + C_curv * (ln eta - ln eta*(N, D))^2 + noise
//   eta*(N, D) = C_eta * N^-alpha_N * D^-beta_D
//   L0(N)      = floor_inf + floor_scale * N^-floor_exponent
//
// With per-group offsets the quadratic term becomes a sum over module groups
// of C_curv/4 * (ln eta_g - ln(eta* * offset_g))^2.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "lrscale/lawfit.hpp"
#include "lrscale/types.hpp"

namespace lrscale::oracle {

struct SurfaceSpec {
  double C_eta = 38.4588;
  double alpha_N = 0.2219;
  double beta_D = 0.3509;
  LawUnits units;  // units N and D enter the planted law in
  double floor_inf = 1.6;
  double floor_scale = 40.0;
  double floor_exponent = 0.2;
  double A = 5.0;
  double gamma = 0.1;
  double C_curv = 0.1;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::map<ModuleGroup, double>> group_offsets;

  void validate() const;
  double planted_optimum(double N, double D) const;
  double floor(double N) const;
};

/// The planted constants of the published law with the defaults above.
SurfaceSpec reference_surface(double noise_sigma = 1e-3, std::uint64_t seed = 0);

/// Deterministic in (spec, N, D, eta, module_lrs); the noise draw is keyed
/// by a hash of the seed and the arguments.
double sample_loss(const SurfaceSpec& spec, double N, double D, double eta,
                   const std::optional<ModuleLRs>& module_lrs = std::nullopt);

/// One run per (shape, lr), with a loss sample at every D in `D_grid`.
std::vector<RunRecord> gen_runs(const SurfaceSpec& spec,
                                const std::vector<ModelShape>& shapes,
                                const std::vector<double>& D_grid,
                                const std::vector<double>& lr_grid);

/// Learning-rate grid of the global search.
std::vector<double> reference_lr_grid();
/// 80e9 to 220e9 tokens in 10e9 steps.
std::vector<double> reference_token_grid();
/// The four scaling-law training shapes (550M, 1B, 2B, 3B total params).
std::vector<ModelShape> reference_design_shapes();

/// Built-in shape catalog: 0.5b, 1b, 2b, 3b, 4b, 12b, 2b-proxy (640 wide,
/// paired with 12b), 2b-proxy-512 (paired with 4b). A "shapes/" prefix is
/// accepted.
std::optional<ModelShape> builtin_shape(std::string_view name);
std::vector<std::string> builtin_shape_names();

nlohmann::json to_json(const SurfaceSpec& spec);
SurfaceSpec surface_from_json(const nlohmann::json& j);

}  // namespace lrscale::oracle
