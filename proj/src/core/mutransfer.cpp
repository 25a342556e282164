// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "lrscale/mutransfer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "lrscale/error.hpp"
#include "lrscale/ingest.hpp"

namespace lrscale {
namespace {

std::int64_t checked_narrow(__int128 v) {
  if (v > static_cast<__int128>(INT64_MAX) || v < 1) {
    fail(ErrorCode::InvalidArgument, "ratio does not fit in 64 bits");
  }
  return static_cast<std::int64_t>(v);
}

__int128 gcd128(__int128 a, __int128 b) {
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Exponents of (m_N, m_L, m_D) for one multiplier.
struct Exponents {
  double N = 0.0;
  double L = 0.0;
  double D = 0.0;
};

Multiplier monomial(const ShapeRatios& r, Exponents e) {
  Multiplier m;
  m.exp_N = e.N;
  m.exp_L = e.L;
  m.exp_D = e.D;
  // Fixed evaluation order keeps equal ratios bitwise equal.
  m.value = std::pow(r.m_N.value(), e.N) * std::pow(r.m_L.value(), e.L) *
            std::pow(r.m_D.value(), e.D);
  return m;
}

void fill_groups(TransferPlan& plan) {
  const bool cp = plan.variant == TransferVariant::CompleteP;
  const double a = plan.alpha_depth;
  const double lr_depth = cp ? a - 1.0 : 0.0;
  const double eps_depth = cp ? -a : 0.0;
  const ShapeRatios& r = plan.ratios;
  auto group = [&](Exponents init, Exponents lr, Exponents eps, Exponents wd,
                   bool applicable = true) {
    return GroupMultipliers{monomial(r, init), monomial(r, lr), monomial(r, eps),
                            monomial(r, wd), applicable};
  };
  plan.groups.clear();
  plan.groups[TransferGroup::InputEmb] =
      group({0, 0, 0}, {0, 0, -0.5}, {-1, 0, 0.5}, {0, 0, -0.5});
  plan.groups[TransferGroup::HiddenWeights] =
      group({-1, 0, 0}, {-1, lr_depth, -0.5}, {-1, eps_depth, 0.5}, {1, 0, -0.5});
  plan.groups[TransferGroup::HiddenBiasesNorms] =
      group({0, 0, 0}, {0, lr_depth, -0.5}, {-1, eps_depth, 0.5}, {0, 0, -0.5});
  plan.groups[TransferGroup::UnembLN] =
      group({0, 0, 0}, {0, 0, -0.5}, {0, 0, 0.5}, {0, 0, -0.5});
  plan.groups[TransferGroup::UnembWeights] =
      group({-2, 0, 0}, {-1, 0, -0.5}, {0, 0, 0.5}, {1, 0, -0.5});
  plan.groups[TransferGroup::QKNorms] =
      group({0, 0, 0}, {0, lr_depth, -0.5}, {0, eps_depth, 0.5}, {0, 0, -0.5}, cp);
  plan.residual = monomial(r, {0, eps_depth, 0});
}

}  // namespace

Ratio::Ratio(std::int64_t num, std::int64_t den) {
  if (num <= 0 || den <= 0) fail(ErrorCode::InvalidArgument, "ratio terms must be positive");
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Ratio operator*(const Ratio& a, const Ratio& b) {
  __int128 n = static_cast<__int128>(a.num_) * b.num_;
  __int128 d = static_cast<__int128>(a.den_) * b.den_;
  const __int128 g = gcd128(n, d);
  Ratio r;
  r.num_ = checked_narrow(n / g);
  r.den_ = checked_narrow(d / g);
  return r;
}

std::string_view to_string(TransferVariant variant) noexcept {
  return variant == TransferVariant::MuP ? "mup" : "complete_p";
}

TransferVariant transfer_variant_from_string(std::string_view name) {
  if (name == "mup" || name == "muP" || name == "mu_p") return TransferVariant::MuP;
  if (name == "complete_p" || name == "completep" || name == "complete-p") {
    return TransferVariant::CompleteP;
  }
  fail(ErrorCode::InvalidArgument, "unknown transfer variant '" + std::string(name) + "'");
}

std::string_view to_string(TransferGroup group) noexcept {
  switch (group) {
    case TransferGroup::InputEmb: return "input_emb";
    case TransferGroup::HiddenWeights: return "hidden_weights";
    case TransferGroup::HiddenBiasesNorms: return "hidden_biases_norms";
    case TransferGroup::UnembLN: return "unemb_ln";
    case TransferGroup::UnembWeights: return "unemb_weights";
    case TransferGroup::QKNorms: return "qk_norms";
  }
  return "unknown";
}

TransferGroup transfer_group_from_string(std::string_view name) {
  for (TransferGroup g : kAllTransferGroups) {
    if (to_string(g) == name) return g;
  }
  fail(ErrorCode::Parse, "unknown transfer group '" + std::string(name) + "'");
}

ShapeRatios shape_ratios(const ModelShape& proxy, const ModelShape& target,
                         std::uint64_t tokens_proxy, std::uint64_t tokens_target) {
  if (proxy.hidden_size < 1 || target.hidden_size < 1 || proxy.num_layers < 1 ||
      target.num_layers < 1) {
    fail(ErrorCode::InvalidArgument, "shape dimensions must be positive");
  }
  if (tokens_proxy == 0 || tokens_target == 0 || tokens_proxy > INT64_MAX ||
      tokens_target > INT64_MAX) {
    fail(ErrorCode::InvalidArgument, "token horizons must be positive");
  }
  return {Ratio(target.hidden_size, proxy.hidden_size),
          Ratio(target.num_layers, proxy.num_layers),
          Ratio(static_cast<std::int64_t>(tokens_target), static_cast<std::int64_t>(tokens_proxy))};
}

double residual_multiplier(double m_L, double alpha_depth) {
  if (!(m_L > 0.0)) fail(ErrorCode::InvalidArgument, "m_L must be > 0");
  return std::pow(m_L, -alpha_depth);
}

TransferPlan make_transfer_plan(const ShapeRatios& ratios, double alpha_depth,
                                TransferVariant variant) {
  if (!std::isfinite(alpha_depth)) fail(ErrorCode::InvalidArgument, "alpha_depth must be finite");
  TransferPlan plan;
  plan.ratios = ratios;
  plan.alpha_depth = alpha_depth;
  plan.variant = variant;
  fill_groups(plan);
  return plan;
}

TransferPlan make_transfer_plan(const ModelShape& proxy, const ModelShape& target,
                                std::uint64_t tokens_proxy, std::uint64_t tokens_target,
                                double alpha_depth, TransferVariant variant) {
  TransferPlan plan = make_transfer_plan(
      shape_ratios(proxy, target, tokens_proxy, tokens_target), alpha_depth, variant);
  plan.proxy = proxy;
  plan.target = target;
  plan.tokens_proxy = tokens_proxy;
  plan.tokens_target = tokens_target;
  return plan;
}

TransferPlan compose_plans(const TransferPlan& p1, const TransferPlan& p2) {
  if (p1.alpha_depth != p2.alpha_depth || p1.variant != p2.variant) {
    fail(ErrorCode::InvalidArgument, "plans differ in alpha_depth or variant");
  }
  const bool shaped = !p1.target.name.empty() || !p2.proxy.name.empty();
  if (shaped && !(p1.target == p2.proxy)) {
    fail(ErrorCode::ShapeMismatch, "first plan's target '" + p1.target.name +
                                       "' is not the second plan's proxy '" + p2.proxy.name + "'");
  }
  if ((p1.tokens_target || p2.tokens_proxy) && p1.tokens_target != p2.tokens_proxy) {
    fail(ErrorCode::ShapeMismatch, "token horizons do not chain");
  }
  ShapeRatios r{p1.ratios.m_N * p2.ratios.m_N, p1.ratios.m_L * p2.ratios.m_L,
                p1.ratios.m_D * p2.ratios.m_D};
  TransferPlan out = make_transfer_plan(r, p1.alpha_depth, p1.variant);
  out.proxy = p1.proxy;
  out.target = p2.target;
  out.tokens_proxy = p1.tokens_proxy;
  out.tokens_target = p2.tokens_target;
  return out;
}

void BaseHParams::validate() const {
  if (!(eta_b > 0.0 && sigma_b > 0.0 && eps_b > 0.0 && lambda_b >= 0.0 && tokens_b >= 0.0)) {
    fail(ErrorCode::InvalidArgument,
         "base hyperparameters: eta_b, sigma_b, eps_b must be > 0 and lambda_b >= 0");
  }
}

AppliedHParams apply_plan(const TransferPlan& plan, const BaseHParams& base) {
  base.validate();
  AppliedHParams out;
  for (const auto& [g, m] : plan.groups) {
    out[g] = GroupHParams{base.sigma_b * std::sqrt(m.init_var.value), base.eta_b * m.lr.value,
                          base.eps_b * m.eps.value, base.lambda_b * m.wd.value, m.applicable};
  }
  return out;
}

namespace {

nlohmann::json ratio_json(const Ratio& r) {
  return {{"num", r.num()}, {"den", r.den()}, {"value", r.value()}};
}

Ratio ratio_from_json(const nlohmann::json& j) {
  return Ratio(j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>());
}

nlohmann::json mult_json(const Multiplier& m) {
  return {{"value", m.value}, {"exp_N", m.exp_N}, {"exp_L", m.exp_L}, {"exp_D", m.exp_D}};
}

}  // namespace

nlohmann::json to_json(const TransferPlan& plan) {
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [g, m] : plan.groups) {
    groups[std::string(to_string(g))] = {{"init_var_mult", mult_json(m.init_var)},
                                         {"lr_mult", mult_json(m.lr)},
                                         {"eps_mult", mult_json(m.eps)},
                                         {"wd_mult", mult_json(m.wd)},
                                         {"applicable", m.applicable}};
  }
  nlohmann::json j = {{"kind", "transfer_plan"},
                      {"variant", std::string(to_string(plan.variant))},
                      {"alpha_depth", plan.alpha_depth},
                      {"m_N", ratio_json(plan.ratios.m_N)},
                      {"m_L", ratio_json(plan.ratios.m_L)},
                      {"m_D", ratio_json(plan.ratios.m_D)},
                      {"tokens_proxy", plan.tokens_proxy},
                      {"tokens_target", plan.tokens_target},
                      {"residual_mult", mult_json(plan.residual)},
                      {"groups", groups}};
  j["proxy"] = plan.proxy.name.empty() ? nlohmann::json(nullptr) : to_json(plan.proxy);
  j["target"] = plan.target.name.empty() ? nlohmann::json(nullptr) : to_json(plan.target);
  return j;
}

TransferPlan transfer_plan_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("kind", "") != "transfer_plan") {
    fail(ErrorCode::InvalidArgument, "artifact kind mismatch: expected 'transfer_plan'");
  }
  try {
    ShapeRatios r{ratio_from_json(j.at("m_N")), ratio_from_json(j.at("m_L")),
                  ratio_from_json(j.at("m_D"))};
    TransferPlan plan =
        make_transfer_plan(r, j.at("alpha_depth").get<double>(),
                           transfer_variant_from_string(j.at("variant").get<std::string>()));
    if (!j.at("proxy").is_null()) plan.proxy = shape_from_json(j.at("proxy"));
    if (!j.at("target").is_null()) plan.target = shape_from_json(j.at("target"));
    plan.tokens_proxy = j.at("tokens_proxy").get<std::uint64_t>();
    plan.tokens_target = j.at("tokens_target").get<std::uint64_t>();
    return plan;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("transfer_plan artifact: ") + e.what());
  }
}

nlohmann::json to_json(const AppliedHParams& hparams) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [g, h] : hparams) {
    j[std::string(to_string(g))] = {{"init_std", h.init_std},
                                    {"lr", h.lr},
                                    {"eps", h.eps},
                                    {"wd", h.wd},
                                    {"applicable", h.applicable}};
  }
  return j;
}

std::string render_table(const TransferPlan& plan) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "variant %s  alpha %.6g  m_N %lld/%lld  m_L %lld/%lld  m_D %lld/%lld\n",
                std::string(to_string(plan.variant)).c_str(), plan.alpha_depth,
                static_cast<long long>(plan.ratios.m_N.num()),
                static_cast<long long>(plan.ratios.m_N.den()),
                static_cast<long long>(plan.ratios.m_L.num()),
                static_cast<long long>(plan.ratios.m_L.den()),
                static_cast<long long>(plan.ratios.m_D.num()),
                static_cast<long long>(plan.ratios.m_D.den()));
  out << line;
  std::snprintf(line, sizeof line, "%-14s %-22s %14s\n", "Multipliers", "MHA/MLP residual",
                "");
  out << line;
  std::snprintf(line, sizeof line, "%-14s %-22s %14.8g\n", "", "x m_L^-alpha",
                plan.residual.value);
  out << line;
  auto section = [&](const char* title, auto pick) {
    out << title << '\n';
    for (TransferGroup g : kAllTransferGroups) {
      const GroupMultipliers& m = plan.groups.at(g);
      const Multiplier& v = pick(m);
      std::snprintf(line, sizeof line, "  %-22s x %-14.8g (m_N^%g m_L^%g m_D^%g)%s\n",
                    std::string(to_string(g)).c_str(), v.value, v.exp_N, v.exp_L, v.exp_D,
                    m.applicable ? "" : "  NA");
      out << line;
    }
  };
  section("Init variance", [](const GroupMultipliers& m) -> const Multiplier& { return m.init_var; });
  section("Learning rate", [](const GroupMultipliers& m) -> const Multiplier& { return m.lr; });
  section("AdamW eps", [](const GroupMultipliers& m) -> const Multiplier& { return m.eps; });
  section("Weight decay", [](const GroupMultipliers& m) -> const Multiplier& { return m.wd; });
  return out.str();
}

}  // namespace lrscale
