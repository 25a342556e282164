// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "lrscale/fitcore.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "lrscale/digest.hpp"
#include "lrscale/error.hpp"
#include "text.hpp"

namespace lrscale {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Families are solved in an internal parametrization with better
// conditioning: inputs are normalized to their geometric mean, and the
// lr-law amplitude lives in log space.
struct Problem {
  std::size_t n_params = 0;
  std::function<void(const VectorXd& q, VectorXd& r)> residuals;
  std::function<void(const VectorXd& q, MatrixXd& J)> jacobian;
};

double sum_squares(const VectorXd& r) { return r.squaredNorm(); }

struct LmOutcome {
  VectorXd q;
  double rss = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

LmOutcome levenberg_marquardt(const Problem& problem, VectorXd q,
                              const FitOptions& opt) {
  const std::size_t m = problem.n_params;
  VectorXd r;
  MatrixXd J;
  problem.residuals(q, r);
  LmOutcome out;
  double rss = sum_squares(r);
  if (!std::isfinite(rss)) {
    out.q = q;
    return out;
  }
  problem.jacobian(q, J);
  MatrixXd A = J.transpose() * J;
  VectorXd g = J.transpose() * r;
  double mu = opt.initial_damping * std::max(A.diagonal().maxCoeff(), 1e-300);
  double nu = 2.0;
  bool converged = rss == 0.0;
  int it = 0;
  VectorXd r_new;
  for (; it < opt.max_iterations && !converged; ++it) {
    if (g.lpNorm<Eigen::Infinity>() == 0.0) {
      converged = true;
      break;
    }
    VectorXd d = A.diagonal();
    const double dmax = std::max(d.maxCoeff(), 1e-300);
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = std::max(d[i], 1e-15 * dmax);

    bool stepped = false;
    while (!stepped) {
      MatrixXd M = A;
      M.diagonal() += mu * d;
      VectorXd h = M.ldlt().solve(-g);
      if (!h.allFinite()) h = M.colPivHouseholderQr().solve(-g);
      if (h.norm() <= opt.param_tol * (q.norm() + opt.param_tol)) {
        converged = true;
        break;
      }
      VectorXd q_new = q + h;
      problem.residuals(q_new, r_new);
      const double rss_new = sum_squares(r_new);
      const double predicted = h.dot(mu * d.cwiseProduct(h) - g);
      const double rho = (rss - rss_new) / std::max(predicted, 1e-300);
      if (std::isfinite(rss_new) && rss_new < rss && rho > 0.0) {
        const double reduction = rss - rss_new;
        q = q_new;
        r = r_new;
        rss = rss_new;
        problem.jacobian(q, J);
        A = J.transpose() * J;
        g = J.transpose() * r;
        const double t = 2.0 * rho - 1.0;
        mu *= std::max(1.0 / 3.0, 1.0 - t * t * t);
        mu = std::max(mu, opt.damping_floor);
        nu = 2.0;
        stepped = true;
        if (rss == 0.0 || reduction <= opt.residual_tol * rss) converged = true;
      } else {
        mu *= nu;
        nu *= 2.0;
        if (mu > opt.damping_ceiling || !std::isfinite(mu)) {
          // No descent direction left at any damping: a stationary point.
          converged = true;
          break;
        }
      }
    }
  }
  (void)m;
  out.q = q;
  out.rss = rss;
  out.converged = converged;
  out.iterations = it;
  return out;
}

double geometric_mean(std::span<const DataPoint> points, int column) {
  double s = 0.0;
  for (const auto& p : points) s += std::log(p.x[column]);
  return std::exp(s / static_cast<double>(points.size()));
}

// Maps between the public parameters of a family and the internal ones.
struct Transform {
  std::function<VectorXd(std::span<const double>)> to_internal;
  std::function<std::vector<double>(const VectorXd&)> to_public;
};

struct FamilySetup {
  Problem problem;
  Transform transform;
  std::vector<VectorXd> seeds;  // internal
};

// Ordinary least squares y ~ X b via QR; returns false when rank deficient.
bool linear_lsq(const MatrixXd& X, const VectorXd& y, VectorXd& b) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  if (qr.rank() < X.cols()) return false;
  b = qr.solve(y);
  return b.allFinite();
}

FamilySetup setup_power_law(std::span<const DataPoint> points) {
  const double xref = geometric_mean(points, 0);
  const std::size_t n = points.size();
  VectorXd lx(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(points[i].x[0] / xref);
    y[i] = points[i].y;
  }
  FamilySetup s;
  s.problem.n_params = 3;
  // internal (L0, B, gamma): y = L0 + B * exp(-gamma * lx)
  s.problem.residuals = [lx, y](const VectorXd& q, VectorXd& r) {
    r = (q[0] + q[1] * (-q[2] * lx.array()).exp()).matrix() - y;
  };
  s.problem.jacobian = [lx](const VectorXd& q, MatrixXd& J) {
    J.resize(lx.size(), 3);
    const Eigen::ArrayXd e = (-q[2] * lx.array()).exp();
    J.col(0).setOnes();
    J.col(1) = e.matrix();
    J.col(2) = (-q[1] * lx.array() * e).matrix();
  };
  const double log_xref = std::log(xref);
  s.transform.to_internal = [log_xref](std::span<const double> p) {
    VectorXd q(3);
    q << p[0], p[1] * std::exp(-p[2] * log_xref), p[2];
    return q;
  };
  s.transform.to_public = [log_xref](const VectorXd& q) {
    return std::vector<double>{q[0], q[1] * std::exp(q[2] * log_xref), q[2]};
  };
  // Grid over gamma with the linear parameters solved exactly.
  std::vector<std::pair<double, VectorXd>> candidates;
  for (int k = 0; k <= 40; ++k) {
    const double gamma = 0.005 * std::pow(10.0, k * 3.0 / 40.0);  // 0.005 .. 5
    MatrixXd X(n, 2);
    X.col(0).setOnes();
    X.col(1) = (-gamma * lx.array()).exp().matrix();
    VectorXd b;
    if (!linear_lsq(X, y, b)) continue;
    VectorXd q(3);
    q << b[0], b[1], gamma;
    VectorXd r;
    s.problem.residuals(q, r);
    candidates.emplace_back(sum_squares(r), q);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < std::min<std::size_t>(3, candidates.size()); ++i) {
    s.seeds.push_back(candidates[i].second);
  }
  return s;
}

FamilySetup setup_quad_log(std::span<const DataPoint> points) {
  const std::size_t n = points.size();
  VectorXd lx(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(points[i].x[0]);
    y[i] = points[i].y;
  }
  FamilySetup s;
  s.problem.n_params = 3;
  s.problem.residuals = [lx, y](const VectorXd& q, VectorXd& r) {
    r = (q[0] + q[1] * (lx.array() - q[2]).square()).matrix() - y;
  };
  s.problem.jacobian = [lx](const VectorXd& q, MatrixXd& J) {
    J.resize(lx.size(), 3);
    const Eigen::ArrayXd u = lx.array() - q[2];
    J.col(0).setOnes();
    J.col(1) = u.square().matrix();
    J.col(2) = (-2.0 * q[1] * u).matrix();
  };
  s.transform.to_internal = [](std::span<const double> p) {
    VectorXd q(3);
    q << p[0], p[1], p[2];
    return q;
  };
  s.transform.to_public = [](const VectorXd& q) {
    return std::vector<double>{q[0], q[1], q[2]};
  };
  const double mean = lx.mean();
  MatrixXd X(n, 3);
  X.col(0).setOnes();
  X.col(1) = (lx.array() - mean).matrix();
  X.col(2) = (lx.array() - mean).square().matrix();
  VectorXd b;
  if (linear_lsq(X, y, b) && b[2] != 0.0) {
    VectorXd q(3);
    q << b[0] - b[1] * b[1] / (4.0 * b[2]), b[2], mean - b[1] / (2.0 * b[2]);
    s.seeds.push_back(q);
  }
  return s;
}

FamilySetup setup_lr_law(std::span<const DataPoint> points) {
  const std::size_t n = points.size();
  VectorXd u(n), v(n), y(n);
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu += std::log(points[i].x[0]);
    mv += std::log(points[i].x[1]);
  }
  mu /= static_cast<double>(n);
  mv /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = std::log(points[i].x[0]) - mu;
    v[i] = std::log(points[i].x[1]) - mv;
    y[i] = points[i].y;
  }
  FamilySetup s;
  s.problem.n_params = 3;
  // internal (c, alpha, beta): y = exp(c - alpha u - beta v)
  s.problem.residuals = [u, v, y](const VectorXd& q, VectorXd& r) {
    r = (q[0] - q[1] * u.array() - q[2] * v.array()).exp().matrix() - y;
  };
  s.problem.jacobian = [u, v](const VectorXd& q, MatrixXd& J) {
    J.resize(u.size(), 3);
    const Eigen::ArrayXd e = (q[0] - q[1] * u.array() - q[2] * v.array()).exp();
    J.col(0) = e.matrix();
    J.col(1) = (-u.array() * e).matrix();
    J.col(2) = (-v.array() * e).matrix();
  };
  s.transform.to_internal = [mu, mv](std::span<const double> p) {
    VectorXd q(3);
    const double C = p[0] > 0.0 ? p[0] : 1.0;
    q << std::log(C) - p[1] * mu - p[2] * mv, p[1], p[2];
    return q;
  };
  s.transform.to_public = [mu, mv](const VectorXd& q) {
    return std::vector<double>{std::exp(q[0] + q[1] * mu + q[2] * mv), q[1], q[2]};
  };
  bool positive = true;
  for (std::size_t i = 0; i < n; ++i) positive = positive && y[i] > 0.0;
  if (positive) {
    MatrixXd X(n, 3);
    X.col(0).setOnes();
    X.col(1) = -u;
    X.col(2) = -v;
    VectorXd b;
    if (linear_lsq(X, y.array().log().matrix(), b)) s.seeds.push_back(b);
  }
  return s;
}

FamilySetup make_setup(CurveFamily family, std::span<const DataPoint> points) {
  switch (family) {
    case CurveFamily::PowerLaw: return setup_power_law(points);
    case CurveFamily::QuadLog: return setup_quad_log(points);
    case CurveFamily::LrLaw: return setup_lr_law(points);
  }
  fail(ErrorCode::InvalidArgument, "unknown curve family");
}

double rss_public(CurveFamily family, std::span<const DataPoint> points,
                  std::span<const double> params) {
  double s = 0.0;
  for (const auto& p : points) {
    const double r = evaluate(family, p.x, params) - p.y;
    s += r * r;
  }
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

}  // namespace

void FitOptions::validate() const {
  if (max_iterations < 1) fail(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (!(param_tol > 0.0) || !(residual_tol > 0.0)) {
    fail(ErrorCode::InvalidArgument, "tolerances must be > 0");
  }
  if (!(initial_damping > 0.0)) fail(ErrorCode::InvalidArgument, "initial_damping must be > 0");
  if (multi_start < 0) fail(ErrorCode::InvalidArgument, "multi_start must be >= 0");
}

std::size_t num_params(CurveFamily) noexcept { return 3; }

std::size_t num_inputs(CurveFamily family) noexcept {
  return family == CurveFamily::LrLaw ? 2 : 1;
}

double evaluate(CurveFamily family, const std::array<double, 2>& x,
                std::span<const double> p) {
  switch (family) {
    case CurveFamily::PowerLaw: return p[0] + p[1] * std::pow(x[0], -p[2]);
    case CurveFamily::QuadLog: {
      const double u = std::log(x[0]) - p[2];
      return p[0] + p[1] * u * u;
    }
    case CurveFamily::LrLaw:
      return p[0] * std::pow(x[0], -p[1]) * std::pow(x[1], -p[2]);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double r_squared(std::span<const double> observed, std::span<const double> predicted) {
  const double n = static_cast<double>(observed.size());
  const double mean = std::accumulate(observed.begin(), observed.end(), 0.0) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - mean) * (observed[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

NllsResult nlls_fit(CurveFamily family, std::span<const DataPoint> points,
                    std::span<const double> init, const FitOptions& options) {
  options.validate();
  const std::size_t k = num_params(family);
  if (init.size() != k) {
    fail(ErrorCode::InvalidArgument, "init must have " + std::to_string(k) + " parameters");
  }
  if (points.size() < k) {
    fail(ErrorCode::Underdetermined, std::to_string(points.size()) +
                                         " points for a " + std::to_string(k) +
                                         "-parameter family");
  }
  for (double v : init) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "init must be finite");
  }
  for (const auto& p : points) {
    for (std::size_t c = 0; c < num_inputs(family); ++c) {
      if (!(p.x[c] > 0.0) || !std::isfinite(p.x[c])) {
        fail(ErrorCode::InvalidArgument, "inputs must be positive and finite");
      }
    }
    if (!std::isfinite(p.y)) fail(ErrorCode::InvalidArgument, "targets must be finite");
  }
  for (std::size_t c = 0; c < num_inputs(family); ++c) {
    const bool constant = std::all_of(points.begin(), points.end(), [&](const DataPoint& p) {
      return p.x[c] == points.front().x[c];
    });
    if (constant) {
      fail(ErrorCode::Degenerate, "degenerate design: input " + std::to_string(c) +
                                      " takes a single value");
    }
  }

  FamilySetup setup = make_setup(family, points);
  std::vector<VectorXd> starts;
  const VectorXd q_init = setup.transform.to_internal(init);
  starts.push_back(q_init);
  for (const auto& s : setup.seeds) starts.push_back(s);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < options.multi_start; ++i) {
    VectorXd q = q_init;
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      const double z = normal(rng);
      q[j] = q[j] != 0.0 ? q[j] * std::exp(0.5 * z) : 0.1 * z;
    }
    starts.push_back(q);
  }

  LmOutcome best;
  int total_iterations = 0;
  for (const auto& q0 : starts) {
    LmOutcome o = levenberg_marquardt(setup.problem, q0, options);
    total_iterations += o.iterations;
    if (o.rss < best.rss) best = o;
  }

  NllsResult result;
  const std::vector<double> init_params(init.begin(), init.end());
  const double init_rss = rss_public(family, points, init_params);
  std::vector<double> params =
      best.q.size() ? setup.transform.to_public(best.q) : init_params;
  double rss = rss_public(family, points, params);
  bool converged = best.converged;
  if (!(rss <= init_rss)) {
    params = init_params;
    rss = init_rss;
    converged = starts.size() == 1 && best.converged;
  }
  result.params = params;
  result.rss = rss;
  result.rmse = std::sqrt(rss / static_cast<double>(points.size()));
  std::vector<double> y, yhat;
  for (const auto& p : points) {
    y.push_back(p.y);
    yhat.push_back(evaluate(family, p.x, params));
  }
  result.r2 = r_squared(y, yhat);
  result.converged = converged;
  result.iterations = total_iterations;
  result.starts = static_cast<int>(starts.size());
  return result;
}

// ---------------------------------------------------------------------------

double PowerLawFit::predict(double tokens) const { return L0 + A * std::pow(tokens, -gamma); }

void PowerLawFit::validate() const {
  if (!std::isfinite(L0) || !std::isfinite(A) || !std::isfinite(gamma)) {
    fail(ErrorCode::InvalidArgument, "power-law fit has non-finite parameters");
  }
  if (!(fit_range[0] > 0.0) || fit_range[1] < fit_range[0]) {
    fail(ErrorCode::InvalidArgument, "power-law fit has an invalid fit_range");
  }
}

PowerLawFit fit_power_law(std::span<const LossSample> samples,
                          const PowerLawOptions& options) {
  std::vector<DataPoint> points;
  for (const auto& s : samples) {
    if (static_cast<double>(s.tokens) >= options.min_tokens && s.tokens > 0) {
      points.push_back({{static_cast<double>(s.tokens), 0.0}, s.loss});
    }
  }
  if (points.size() < 4) {
    fail(ErrorCode::Underdetermined,
         "power-law fit needs >= 4 samples at or above min_tokens, got " +
             std::to_string(points.size()));
  }
  double ymin = points.front().y;
  for (const auto& p : points) ymin = std::min(ymin, p.y);
  const std::array<double, 3> init{ymin * 0.9, 1.0, 0.3};
  NllsResult r = nlls_fit(CurveFamily::PowerLaw, points, init, options.fit);

  PowerLawFit fit;
  fit.L0 = r.params[0];
  fit.A = r.params[1];
  fit.gamma = r.params[2];
  fit.r2 = r.r2;
  fit.rmse = r.rmse;
  fit.converged = r.converged;
  fit.fit_range = {points.front().x[0], points.back().x[0]};
  for (const auto& p : points) {
    fit.fit_range[0] = std::min(fit.fit_range[0], p.x[0]);
    fit.fit_range[1] = std::max(fit.fit_range[1], p.x[0]);
  }

  // Standard error of gamma from the Gauss-Newton covariance.
  const std::size_t n = points.size();
  if (r.rss > 0.0 && n > 3) {
    MatrixXd J(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = points[i].x[0];
      const double e = std::pow(x, -fit.gamma);
      J(i, 0) = 1.0;
      J(i, 1) = e;
      J(i, 2) = -fit.A * e * std::log(x);
    }
    const double s2 = r.rss / static_cast<double>(n - 3);
    const MatrixXd JtJ = J.transpose() * J;
    Eigen::FullPivLU<MatrixXd> lu(JtJ);
    if (lu.isInvertible()) {
      const double var = s2 * lu.inverse()(2, 2);
      fit.gamma_stderr = var > 0.0 ? std::sqrt(var) : 0.0;
    } else {
      fit.gamma_stderr = std::numeric_limits<double>::infinity();
    }
  }

  std::string note;
  auto flag = [&](const std::string& why) {
    if (!note.empty()) note += "; ";
    note += why;
  };
  if (!fit.converged) flag("solver did not converge");
  if (!(fit.A > 0.0)) flag("amplitude A <= 0: curve is not decreasing");
  if (!(fit.gamma > 0.0)) {
    flag("gamma <= 0: curve does not converge");
  } else if (fit.gamma < options.min_gamma) {
    flag("gamma below " + format_double(options.min_gamma) +
         ": curve has not begun to flatten over the fit window");
  }
  if (!(fit.L0 > 0.0)) flag("asymptotic loss L0 <= 0");
  if (fit.gamma > 0.0 && fit.gamma_stderr > options.max_gamma_rel_stderr * fit.gamma) {
    flag("gamma poorly determined (relative standard error " +
         format_double(fit.gamma_stderr / fit.gamma) + ")");
  }
  fit.low_trust = !note.empty();
  fit.trust_note = note;
  return fit;
}

Extrapolation extrapolate_loss(const PowerLawFit& fit, double tokens) {
  if (!(tokens > 0.0)) fail(ErrorCode::InvalidArgument, "tokens must be > 0");
  fit.validate();
  return {fit.predict(tokens), tokens > fit.fit_range[1]};
}

std::vector<LossSample> resample_curve(const PowerLawFit& fit, double interval,
                                       double lo, double hi, bool strict) {
  fit.validate();
  if (!(interval > 0.0)) fail(ErrorCode::InvalidArgument, "interval must be > 0");
  if (!(lo > 0.0) || !(lo < hi)) fail(ErrorCode::InvalidArgument, "range must satisfy 0 < lo < hi");
  if (strict) {
    if (fit.low_trust) {
      fail(ErrorCode::OutOfTrustRegion, "low-trust fit: " + fit.trust_note);
    }
    if (lo < fit.fit_range[0] || hi > kTrustExtrapolationFactor * fit.fit_range[1]) {
      fail(ErrorCode::OutOfTrustRegion,
           "range [" + format_double(lo) + ", " + format_double(hi) +
               "] outside trust region [" + format_double(fit.fit_range[0]) + ", " +
               format_double(kTrustExtrapolationFactor * fit.fit_range[1]) + "]");
    }
  }
  std::vector<LossSample> out;
  const double limit = hi * (1.0 + 1e-12);
  for (std::int64_t k = 0;; ++k) {
    const double t = lo + static_cast<double>(k) * interval;
    if (t > limit) break;
    const auto tokens = static_cast<std::uint64_t>(std::llround(t));
    out.push_back({tokens, fit.predict(static_cast<double>(tokens))});
  }
  return out;
}

// ---------------------------------------------------------------------------

double QuadLogFit::predict(double lr) const {
  const double u = std::log(lr) - eta_min;
  return L_min + C * u * u;
}

QuadLogFit fit_quad_log(std::span<const LrLossPoint> points) {
  std::vector<double> lx;
  for (const auto& p : points) {
    if (!(p.lr > 0.0) || !std::isfinite(p.lr)) {
      fail(ErrorCode::InvalidArgument, "learning rates must be positive and finite");
    }
    if (!std::isfinite(p.loss)) fail(ErrorCode::InvalidArgument, "losses must be finite");
    lx.push_back(std::log(p.lr));
  }
  std::vector<double> distinct = lx;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) {
    fail(ErrorCode::Underdetermined, "quadratic fit needs >= 3 distinct learning rates, got " +
                                         std::to_string(distinct.size()));
  }
  const std::size_t n = points.size();
  const double mean = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
  MatrixXd X(n, 3);
  VectorXd y(n);
  double ymax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = lx[i] - mean;
    X(i, 0) = 1.0;
    X(i, 1) = u;
    X(i, 2) = u * u;
    y[i] = points[i].loss;
    ymax = std::max(ymax, std::abs(y[i]));
  }
  VectorXd b = X.colPivHouseholderQr().solve(y);
  const double span = distinct.back() - distinct.front();
  // Curvature indistinguishable from zero at double precision counts as flat.
  if (!(b[2] * span * span > 1e-12 * std::max(1.0, ymax))) {
    fail(ErrorCode::NoInteriorOptimum,
         "no interior optimum: fitted curvature " + format_double(b[2]) + " is not positive");
  }
  QuadLogFit fit;
  fit.C = b[2];
  fit.eta_min = mean - b[1] / (2.0 * b[2]);
  fit.L_min = b[0] - b[1] * b[1] / (4.0 * b[2]);
  std::vector<double> obs, pred;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double yhat = fit.predict(points[i].lr);
    obs.push_back(points[i].loss);
    pred.push_back(yhat);
    rss += (yhat - points[i].loss) * (yhat - points[i].loss);
  }
  fit.r2 = r_squared(obs, pred);
  fit.rmse = std::sqrt(rss / static_cast<double>(n));
  return fit;
}

double optimal_lr(const QuadLogFit& fit) {
  if (!(fit.C > 0.0)) fail(ErrorCode::NoInteriorOptimum, "fit has no interior optimum");
  return std::exp(fit.eta_min);
}

// ---------------------------------------------------------------------------

std::string points_digest(std::span<const LossSample> samples) {
  std::string text;
  for (const auto& s : samples) {
    text += std::to_string(s.tokens);
    text += ',';
    text += format_double(s.loss);
    text += '\n';
  }
  return digest_hex(text);
}

std::string points_digest(std::span<const LrLossPoint> points) {
  std::string text;
  for (const auto& p : points) {
    text += format_double(p.lr);
    text += ',';
    text += format_double(p.loss);
    text += '\n';
  }
  return digest_hex(text);
}

nlohmann::json to_json(const PowerLawFit& fit, const std::string& input_digest) {
  return {
      {"kind", "power_law"},
      {"params", {{"L0", fit.L0}, {"A", fit.A}, {"gamma", fit.gamma}}},
      {"r2", fit.r2},
      {"rmse", fit.rmse},
      {"fit_range", {fit.fit_range[0], fit.fit_range[1]}},
      {"converged", fit.converged},
      {"low_trust", fit.low_trust},
      {"trust_note", fit.trust_note},
      {"gamma_stderr", fit.gamma_stderr},
      {"input_digest", input_digest},
  };
}

nlohmann::json to_json(const QuadLogFit& fit, const std::string& input_digest) {
  return {
      {"kind", "quad_log"},
      {"params", {{"L_min", fit.L_min}, {"C", fit.C}, {"eta_min", fit.eta_min}}},
      {"optimal_lr", std::exp(fit.eta_min)},
      {"r2", fit.r2},
      {"rmse", fit.rmse},
      {"fit_range", nullptr},
      {"input_digest", input_digest},
  };
}

namespace {
void expect_kind(const nlohmann::json& j, const char* kind) {
  if (!j.is_object() || !j.contains("kind") || j["kind"] != kind) {
    fail(ErrorCode::InvalidArgument,
         std::string("artifact kind mismatch: expected '") + kind + "'");
  }
}
}  // namespace

PowerLawFit power_law_from_json(const nlohmann::json& j) {
  expect_kind(j, "power_law");
  try {
    PowerLawFit fit;
    fit.L0 = j.at("params").at("L0").get<double>();
    fit.A = j.at("params").at("A").get<double>();
    fit.gamma = j.at("params").at("gamma").get<double>();
    fit.r2 = j.at("r2").get<double>();
    fit.rmse = j.at("rmse").get<double>();
    fit.fit_range = {j.at("fit_range").at(0).get<double>(),
                     j.at("fit_range").at(1).get<double>()};
    fit.converged = j.value("converged", true);
    fit.low_trust = j.value("low_trust", false);
    fit.trust_note = j.value("trust_note", std::string());
    // An undetermined exponent serializes its infinite stderr as null.
    const auto se = j.find("gamma_stderr");
    fit.gamma_stderr = se == j.end()     ? 0.0
                       : se->is_null()   ? std::numeric_limits<double>::infinity()
                                         : se->get<double>();
    return fit;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("power_law artifact: ") + e.what());
  }
}

QuadLogFit quad_log_from_json(const nlohmann::json& j) {
  expect_kind(j, "quad_log");
  try {
    QuadLogFit fit;
    fit.L_min = j.at("params").at("L_min").get<double>();
    fit.C = j.at("params").at("C").get<double>();
    fit.eta_min = j.at("params").at("eta_min").get<double>();
    fit.r2 = j.at("r2").get<double>();
    fit.rmse = j.at("rmse").get<double>();
    return fit;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("quad_log artifact: ") + e.what());
  }
}

}  // namespace lrscale
