// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "lrscale/lawfit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "lrscale/digest.hpp"
#include "lrscale/error.hpp"
#include "parallel.hpp"
#include "text.hpp"

namespace lrscale {
namespace {

// Log-log interpolation of a run's samples at `tokens`; empty outside the
// sampled range.
std::optional<double> interpolate_raw(const std::vector<LossSample>& samples, double tokens) {
  if (samples.empty()) return std::nullopt;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double t = static_cast<double>(samples[i].tokens);
    if (t == tokens) return samples[i].loss;
    if (t > tokens) {
      if (i == 0) return std::nullopt;
      const double t0 = static_cast<double>(samples[i - 1].tokens);
      const double w = (std::log(tokens) - std::log(t0)) / (std::log(t) - std::log(t0));
      return std::exp((1.0 - w) * std::log(samples[i - 1].loss) + w * std::log(samples[i].loss));
    }
  }
  return std::nullopt;
}

bool uses_global_lr(const RunRecord& run) {
  if (!run.module_lrs) return true;
  return std::all_of(run.module_lrs->begin(), run.module_lrs->end(),
                     [&](const auto& kv) { return kv.second == run.lr_global; });
}

double rmse_original(const std::vector<OptimalLRPoint>& pts, const LRLaw& law) {
  double s = 0.0;
  for (const auto& p : pts) {
    const double r = law.predict(p.N / law.units.n_scale, p.D / law.units.d_scale) - p.eta_star;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(pts.size()));
}

double r2_log(const std::vector<OptimalLRPoint>& pts, const LRLaw& law) {
  std::vector<double> obs, pred;
  for (const auto& p : pts) {
    obs.push_back(std::log(p.eta_star));
    pred.push_back(std::log(law.predict(p.N / law.units.n_scale, p.D / law.units.d_scale)));
  }
  return r_squared(obs, pred);
}

}  // namespace

CollectResult collect_optima(const std::vector<RunRecord>& runs,
                             const CollectOptions& options) {
  if (options.D_grid.empty()) fail(ErrorCode::InvalidArgument, "empty D grid");
  if (runs.empty()) fail(ErrorCode::InvalidArgument, "no runs to collect optima from");
  for (double D : options.D_grid) {
    if (!(D > 0.0)) fail(ErrorCode::InvalidArgument, "D grid values must be > 0");
  }

  std::vector<const RunRecord*> eligible;
  for (const auto& r : runs) {
    if (uses_global_lr(r) && !r.samples.empty()) eligible.push_back(&r);
  }

  // losses[run][d] is NaN when the run has no loss at that D.
  const std::size_t nd = options.D_grid.size();
  std::vector<std::vector<double>> losses(eligible.size(),
                                          std::vector<double>(nd, std::nan("")));
  std::vector<std::string> run_errors(eligible.size());
  parallel_for(eligible.size(), [&](std::size_t i) {
    const RunRecord& run = *eligible[i];
    if (options.source == LossSource::Smoothed) {
      try {
        const PowerLawFit fit = fit_power_law(run.samples, options.power_law);
        for (std::size_t d = 0; d < nd; ++d) losses[i][d] = fit.predict(options.D_grid[d]);
      } catch (const Error& e) {
        run_errors[i] = e.what();
      }
    } else {
      for (std::size_t d = 0; d < nd; ++d) {
        if (auto v = interpolate_raw(run.samples, options.D_grid[d])) losses[i][d] = *v;
      }
    }
  });

  struct Group {
    double N = 0.0;
    std::vector<std::size_t> members;
  };
  std::map<std::string, Group> groups;
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    const RunRecord& r = *eligible[i];
    Group& g = groups[r.shape.name];
    g.N = options.param_count == ParamCount::Total ? r.shape.total_params
                                                   : r.shape.active_params;
    g.members.push_back(i);
  }

  struct Cell {
    std::string shape;
    double N = 0.0;
    double D = 0.0;
    std::vector<LrLossPoint> points;
  };
  std::vector<Cell> cells;
  for (const auto& [name, g] : groups) {
    for (std::size_t d = 0; d < nd; ++d) {
      Cell c{name, g.N, options.D_grid[d], {}};
      for (std::size_t i : g.members) {
        if (std::isfinite(losses[i][d])) c.points.push_back({eligible[i]->lr_global, losses[i][d]});
      }
      cells.push_back(std::move(c));
    }
  }

  std::vector<std::optional<OptimalLRPoint>> found(cells.size());
  std::vector<std::string> reasons(cells.size());
  parallel_for(cells.size(), [&](std::size_t k) {
    const Cell& c = cells[k];
    try {
      const QuadLogFit fit = fit_quad_log(c.points);
      found[k] = OptimalLRPoint{c.N, c.D, optimal_lr(fit), fit.r2, c.shape};
    } catch (const Error& e) {
      reasons[k] = e.what();
    }
  });

  CollectResult result;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (found[k]) {
      result.points.push_back(*found[k]);
    } else {
      result.failures.push_back({cells[k].shape, cells[k].D, reasons[k]});
    }
  }
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    if (!run_errors[i].empty()) {
      result.failures.push_back({eligible[i]->shape.name, 0.0,
                                 "run " + eligible[i]->run_id + ": " + run_errors[i]});
    }
  }
  std::stable_sort(result.points.begin(), result.points.end(),
                   [](const OptimalLRPoint& a, const OptimalLRPoint& b) {
                     return a.N != b.N ? a.N < b.N : a.D < b.D;
                   });
  if (result.points.empty()) {
    fail(ErrorCode::NoInteriorOptimum,
         "all " + std::to_string(cells.size()) + " (N, D) cells failed" +
             (result.failures.empty() ? "" : ": " + result.failures.front().reason));
  }
  return result;
}

double LRLaw::predict(double N, double D) const {
  return C_eta * std::pow(N, -alpha_N) * std::pow(D, -beta_D);
}

LawFitResult fit_lr_law_detailed(const std::vector<OptimalLRPoint>& points,
                                 const LawUnits& units, const FitOptions& options) {
  if (points.size() < 4) {
    fail(ErrorCode::Underdetermined,
         "law fit needs >= 4 points, got " + std::to_string(points.size()));
  }
  std::set<double> Ns, Ds;
  for (const auto& p : points) {
    if (!(p.N > 0.0 && p.D > 0.0 && p.eta_star > 0.0)) {
      fail(ErrorCode::InvalidArgument, "optimal-LR points need N, D, eta* > 0");
    }
    Ns.insert(p.N);
    Ds.insert(p.D);
  }
  if (Ns.size() < 2 || Ds.size() < 2) {
    fail(ErrorCode::Degenerate, "rank-deficient design: need >= 2 distinct N and >= 2 distinct D");
  }
  if (!(units.n_scale > 0.0 && units.d_scale > 0.0)) {
    fail(ErrorCode::InvalidArgument, "unit scales must be > 0");
  }

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  std::vector<DataPoint> data;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    const double N = p.N / units.n_scale;
    const double D = p.D / units.d_scale;
    X(i, 0) = 1.0;
    X(i, 1) = -std::log(N);
    X(i, 2) = -std::log(D);
    y[i] = std::log(p.eta_star);
    data.push_back({{N, D}, p.eta_star});
  }
  const Eigen::VectorXd b = X.colPivHouseholderQr().solve(y);

  LRLaw seed;
  seed.C_eta = std::exp(b[0]);
  seed.alpha_N = b[1];
  seed.beta_D = b[2];
  seed.units = units;

  LawFitResult out;
  out.seed_rmse = rmse_original(points, seed);

  const std::array<double, 3> init{seed.C_eta, seed.alpha_N, seed.beta_D};
  LRLaw law = seed;
  try {
    const NllsResult refined = nlls_fit(CurveFamily::LrLaw, data, init, options);
    LRLaw candidate = seed;
    candidate.C_eta = refined.params[0];
    candidate.alpha_N = refined.params[1];
    candidate.beta_D = refined.params[2];
    if (candidate.C_eta > 0.0 && rmse_original(points, candidate) < out.seed_rmse) {
      law = candidate;
      law.refined = true;
    }
  } catch (const Error&) {
    // The log-linear seed stands.
  }
  law.rmse = rmse_original(points, law);
  law.r2 = r2_log(points, law);
  out.law = law;
  return out;
}

LRLaw fit_lr_law(const std::vector<OptimalLRPoint>& points, const LawUnits& units) {
  return fit_lr_law_detailed(points, units).law;
}

double predict_lr(const LRLaw& law, double N, double D,
                  const std::optional<LawUnits>& declared) {
  if (!(N > 0.0 && D > 0.0)) fail(ErrorCode::InvalidArgument, "N and D must be > 0");
  if (declared && !(declared->n_scale == law.units.n_scale &&
                    declared->d_scale == law.units.d_scale)) {
    fail(ErrorCode::UnitMismatch,
         "law expects N in units of " + format_double(law.units.n_scale) + " and D in units of " +
             format_double(law.units.d_scale));
  }
  return law.predict(N, D);
}

double lr_ratio(const LRLaw& law, double N1, double N2, double D1, double D2) {
  if (!(N1 > 0.0 && N2 > 0.0 && D1 > 0.0 && D2 > 0.0)) {
    fail(ErrorCode::InvalidArgument, "lr_ratio inputs must be > 0");
  }
  return std::pow(N1 / N2, -law.alpha_N) * std::pow(D1 / D2, -law.beta_D);
}

LRLaw rescale_units(const LRLaw& law, const LawUnits& units) {
  LRLaw out = law;
  out.units = units;
  out.C_eta = law.C_eta * std::pow(units.n_scale / law.units.n_scale, -law.alpha_N) *
              std::pow(units.d_scale / law.units.d_scale, -law.beta_D);
  return out;
}

std::string points_digest(const std::vector<OptimalLRPoint>& points) {
  std::string text;
  for (const auto& p : points) {
    text += format_double(p.N) + "," + format_double(p.D) + "," + format_double(p.eta_star) + "\n";
  }
  return digest_hex(text);
}

nlohmann::json to_json(const LRLaw& law, const std::string& digest) {
  return {{"kind", "lr_law"},
          {"C_eta", law.C_eta},
          {"alpha_N", law.alpha_N},
          {"beta_D", law.beta_D},
          {"units",
           {{"n_scale", law.units.n_scale},
            {"d_scale", law.units.d_scale},
            {"n_label", law.units.n_label},
            {"d_label", law.units.d_label}}},
          {"r2", law.r2},
          {"rmse", law.rmse},
          {"refined", law.refined},
          {"points_digest", digest}};
}

LRLaw lr_law_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("kind", "") != "lr_law") {
    fail(ErrorCode::InvalidArgument, "artifact kind mismatch: expected 'lr_law'");
  }
  try {
    LRLaw law;
    law.C_eta = j.at("C_eta").get<double>();
    law.alpha_N = j.at("alpha_N").get<double>();
    law.beta_D = j.at("beta_D").get<double>();
    const auto& u = j.at("units");
    law.units.n_scale = u.at("n_scale").get<double>();
    law.units.d_scale = u.at("d_scale").get<double>();
    law.units.n_label = u.value("n_label", "params");
    law.units.d_label = u.value("d_label", "tokens");
    law.r2 = j.at("r2").get<double>();
    law.rmse = j.at("rmse").get<double>();
    law.refined = j.value("refined", false);
    return law;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("lr_law artifact: ") + e.what());
  }
}

nlohmann::json to_json(const std::vector<OptimalLRPoint>& points) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : points) {
    arr.push_back({{"N", p.N},
                   {"D", p.D},
                   {"eta_star", p.eta_star},
                   {"source_r2", p.source_r2},
                   {"shape", p.shape}});
  }
  return {{"kind", "optima"}, {"points", arr}};
}

std::vector<OptimalLRPoint> optima_from_json(const nlohmann::json& j) {
  const nlohmann::json& arr = j.is_array() ? j : j.at("points");
  std::vector<OptimalLRPoint> out;
  try {
    for (const auto& p : arr) {
      out.push_back({p.at("N").get<double>(), p.at("D").get<double>(),
                     p.at("eta_star").get<double>(), p.value("source_r2", 1.0),
                     p.value("shape", std::string())});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("optima: ") + e.what());
  }
  return out;
}

}  // namespace lrscale
