// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// Damped Gauss-Newton (Levenberg-Marquardt) least squares and the two
// single-run curve families: loss vs. data size, and loss vs. log learning
// rate.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lrscale/types.hpp"

namespace lrscale {

struct FitOptions {
  int max_iterations = 500;
  double param_tol = 1e-14;     // relative step size
  double residual_tol = 1e-16;  // relative change of the residual sum of squares
  double initial_damping = 1e-3;
  double damping_floor = 1e-300;
  double damping_ceiling = 1e32;
  int multi_start = 8;  // random restarts around the initial guess
  std::uint64_t seed = 0x5eedULL;

  void validate() const;
};

enum class CurveFamily {
  PowerLaw,  // y = L0 + A * x^-gamma, params (L0, A, gamma)
  QuadLog,   // y = L_min + C * (ln x - eta_min)^2, params (L_min, C, eta_min)
  LrLaw,     // y = C * x0^-alpha * x1^-beta, params (C, alpha, beta)
};

std::size_t num_params(CurveFamily family) noexcept;
std::size_t num_inputs(CurveFamily family) noexcept;

/// A regression point with up to two inputs; families with a single input
/// ignore x[1].
struct DataPoint {
  std::array<double, 2> x{};
  double y = 0.0;
};

double evaluate(CurveFamily family, const std::array<double, 2>& x,
                std::span<const double> params);

struct NllsResult {
  std::vector<double> params;
  double rss = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  bool converged = false;
  int iterations = 0;
  int starts = 0;
};

/// Fits `family` to `points` by minimizing the residual sum of squares.
///
/// Starts from `init`, from closed-form or grid seeds of the family and from
/// `options.multi_start` seeded perturbations of `init`, and returns the best
/// result. The returned RSS never exceeds that of `init`. Non-convergence is
/// reported through `converged`; it is not an error.
NllsResult nlls_fit(CurveFamily family, std::span<const DataPoint> points,
                    std::span<const double> init, const FitOptions& options = {});

double r_squared(std::span<const double> observed,
                 std::span<const double> predicted);

// ---------------------------------------------------------------------------
// Loss vs. data size.

struct PowerLawFit {
  double L0 = 0.0;
  double A = 0.0;
  double gamma = 0.0;
  double r2 = 0.0;
  double rmse = 0.0;
  std::array<double, 2> fit_range{};  // [lo, hi] tokens
  bool converged = true;
  bool low_trust = false;
  std::string trust_note;  // empty when trusted
  double gamma_stderr = 0.0;

  double predict(double tokens) const;

  /// Checks the fit can be evaluated: A > 0, gamma > 0, finite values.
  void validate() const;
};

struct PowerLawOptions {
  double min_tokens = 10e9;  // excludes warmup samples
  double min_gamma = 0.05;   // fitted exponents below this are not trusted
  double max_gamma_rel_stderr = 0.5;
  FitOptions fit;
};

/// Needs at least 4 samples at or above `options.min_tokens`.
PowerLawFit fit_power_law(std::span<const LossSample> samples,
                          const PowerLawOptions& options = {});

struct Extrapolation {
  double loss = 0.0;
  bool extrapolated = false;  // tokens > fit_range[1]
};

Extrapolation extrapolate_loss(const PowerLawFit& fit, double tokens);

/// Largest multiple of fit_range[1] still considered inside the trust region.
inline constexpr double kTrustExtrapolationFactor = 4.0;

/// Samples the fitted curve at lo, lo + interval, ... <= hi. In strict mode the
/// range must lie inside [fit_range[0], 4 * fit_range[1]] and the fit must be
/// trusted.
std::vector<LossSample> resample_curve(const PowerLawFit& fit, double interval,
                                       double lo, double hi, bool strict = false);

// ---------------------------------------------------------------------------
// Loss vs. log learning rate.

struct LrLossPoint {
  double lr = 0.0;
  double loss = 0.0;
};

struct QuadLogFit {
  double L_min = 0.0;
  double C = 0.0;
  double eta_min = 0.0;  // natural-log learning rate of the minimum
  double r2 = 0.0;
  double rmse = 0.0;

  double predict(double lr) const;
};

/// Least-squares quadratic in ln(lr) with equal weights. Throws
/// NoInteriorOptimum when the curvature is not positive and Underdetermined
/// with fewer than three distinct learning rates.
QuadLogFit fit_quad_log(std::span<const LrLossPoint> points);

double optimal_lr(const QuadLogFit& fit);

// ---------------------------------------------------------------------------
// Fit artifacts.

/// FNV-1a over the canonical text of the fitting points.
std::string points_digest(std::span<const LossSample> samples);
std::string points_digest(std::span<const LrLossPoint> points);

nlohmann::json to_json(const PowerLawFit& fit, const std::string& input_digest);
nlohmann::json to_json(const QuadLogFit& fit, const std::string& input_digest);
PowerLawFit power_law_from_json(const nlohmann::json& artifact);
QuadLogFit quad_log_from_json(const nlohmann::json& artifact);

}  // namespace lrscale
