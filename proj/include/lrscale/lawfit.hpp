// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// Optimal learning rate as a joint power law of model size N and data size D:
//
//   eta*(N, D) = C_eta * N^-alpha_N * D^-beta_D
//
// collect_optima turns a grid of training runs into eta* points by fitting a
// quadratic in log learning rate per (N, D) cell; fit_lr_law fits the law.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lrscale/fitcore.hpp"
#include "lrscale/types.hpp"

namespace lrscale {

/// Units in which N and D enter the law: value = raw / scale.
struct LawUnits {
  double n_scale = 1.0;
  double d_scale = 1.0;
  std::string n_label = "params";
  std::string d_label = "tokens";

  friend bool operator==(const LawUnits&, const LawUnits&) = default;
};

struct OptimalLRPoint {
  double N = 0.0;
  double D = 0.0;
  double eta_star = 0.0;
  double source_r2 = 0.0;
  std::string shape;  // run-group label, informational
};

enum class LossSource { Smoothed, Raw };
enum class ParamCount { Total, Active };

struct CollectOptions {
  std::vector<double> D_grid;
  LossSource source = LossSource::Smoothed;
  ParamCount param_count = ParamCount::Total;
  PowerLawOptions power_law;
};

struct CellFailure {
  std::string shape;
  double D = 0.0;
  std::string reason;
};

struct CollectResult {
  std::vector<OptimalLRPoint> points;
  std::vector<CellFailure> failures;
};

/// Groups runs by shape name, evaluates each run's loss at every D in the
/// grid (from its power-law fit in Smoothed mode, by log-log interpolation of
/// the samples in Raw mode) and fits a QuadLogFit per cell. Cells without an
/// interior optimum are reported in `failures`. Cell fits run in parallel.
CollectResult collect_optima(const std::vector<RunRecord>& runs,
                             const CollectOptions& options);

struct LRLaw {
  double C_eta = 0.0;
  double alpha_N = 0.0;
  double beta_D = 0.0;
  double r2 = 0.0;    // log space
  double rmse = 0.0;  // original space
  LawUnits units;
  bool refined = false;  // nonlinear refinement improved on the log-linear seed

  double predict(double N, double D) const;
};

struct LawFitResult {
  LRLaw law;
  double seed_rmse = 0.0;  // RMSE of the log-linear seed in original space
};

/// Log-linear least squares for (ln C, alpha, beta), then refinement in the
/// original space minimizing RMSE. Points are given in raw units; `units`
/// selects the scale the law is expressed in.
LawFitResult fit_lr_law_detailed(const std::vector<OptimalLRPoint>& points,
                                 const LawUnits& units = {},
                                 const FitOptions& options = {});
LRLaw fit_lr_law(const std::vector<OptimalLRPoint>& points,
                 const LawUnits& units = {});

/// N and D are in law.units. When the caller declares the units it used,
/// they must match law.units (UnitMismatch otherwise).
double predict_lr(const LRLaw& law, double N, double D,
                  const std::optional<LawUnits>& declared = std::nullopt);

/// (N1/N2)^-alpha * (D1/D2)^-beta; independent of C_eta and of units.
double lr_ratio(const LRLaw& law, double N1, double N2, double D1, double D2);

/// Re-expresses the law in other units without refitting.
LRLaw rescale_units(const LRLaw& law, const LawUnits& units);

std::string points_digest(const std::vector<OptimalLRPoint>& points);
nlohmann::json to_json(const LRLaw& law, const std::string& points_digest);
LRLaw lr_law_from_json(const nlohmann::json& artifact);
nlohmann::json to_json(const std::vector<OptimalLRPoint>& points);
std::vector<OptimalLRPoint> optima_from_json(const nlohmann::json& j);

}  // namespace lrscale
