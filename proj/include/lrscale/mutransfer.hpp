// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// Hyperparameter transfer from a proxy model to a target model under muP or
// Complete-P. Every multiplier is a monomial m_N^a * m_L^b * m_D^c in the
// width, depth and token-horizon ratios; the ratios themselves are kept as
// exact rationals so that composed plans match direct plans bit for bit.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "lrscale/types.hpp"

namespace lrscale {

/// Reduced positive fraction.
class Ratio {
 public:
  Ratio() = default;
  Ratio(std::int64_t num, std::int64_t den);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double value() const noexcept {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  friend Ratio operator*(const Ratio& a, const Ratio& b);
  friend bool operator==(const Ratio&, const Ratio&) = default;

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

enum class TransferVariant { MuP, CompleteP };

std::string_view to_string(TransferVariant variant) noexcept;
TransferVariant transfer_variant_from_string(std::string_view name);

enum class TransferGroup {
  InputEmb,
  HiddenWeights,
  HiddenBiasesNorms,
  UnembLN,
  UnembWeights,
  QKNorms,
};

inline constexpr std::array<TransferGroup, 6> kAllTransferGroups = {
    TransferGroup::InputEmb,      TransferGroup::HiddenWeights,
    TransferGroup::HiddenBiasesNorms, TransferGroup::UnembLN,
    TransferGroup::UnembWeights,  TransferGroup::QKNorms};

std::string_view to_string(TransferGroup group) noexcept;
TransferGroup transfer_group_from_string(std::string_view name);

/// value = m_N^exp_N * m_L^exp_L * m_D^exp_D.
struct Multiplier {
  double value = 1.0;
  double exp_N = 0.0;
  double exp_L = 0.0;
  double exp_D = 0.0;

  friend bool operator==(const Multiplier&, const Multiplier&) = default;
};

struct GroupMultipliers {
  Multiplier init_var;
  Multiplier lr;
  Multiplier eps;
  Multiplier wd;
  // False for QK norms under muP, which has no rule for them. The
  // multipliers then hold the m_L-free Complete-P values.
  bool applicable = true;

  friend bool operator==(const GroupMultipliers&, const GroupMultipliers&) = default;
};

struct ShapeRatios {
  Ratio m_N;
  Ratio m_L;
  Ratio m_D;
};

/// m_N from hidden_size, m_L from num_layers, m_D from the token horizons.
ShapeRatios shape_ratios(const ModelShape& proxy, const ModelShape& target,
                         std::uint64_t tokens_proxy, std::uint64_t tokens_target);

/// m_L^-alpha_depth.
double residual_multiplier(double m_L, double alpha_depth);

struct TransferPlan {
  ModelShape proxy;
  ModelShape target;
  std::uint64_t tokens_proxy = 0;
  std::uint64_t tokens_target = 0;
  ShapeRatios ratios;
  double alpha_depth = 1.0;
  TransferVariant variant = TransferVariant::CompleteP;
  std::map<TransferGroup, GroupMultipliers> groups;
  Multiplier residual;

  const GroupMultipliers& at(TransferGroup group) const { return groups.at(group); }
  double residual_mult() const noexcept { return residual.value; }
};

TransferPlan make_transfer_plan(const ModelShape& proxy, const ModelShape& target,
                                std::uint64_t tokens_proxy,
                                std::uint64_t tokens_target, double alpha_depth,
                                TransferVariant variant);

/// Plan from explicit ratios; shapes are left empty.
TransferPlan make_transfer_plan(const ShapeRatios& ratios, double alpha_depth,
                                TransferVariant variant);

/// A->B followed by B->C. Throws ShapeMismatch when p1's target is not p2's
/// proxy (or the horizons do not chain) and InvalidArgument when alpha or the
/// variant differ.
TransferPlan compose_plans(const TransferPlan& p1, const TransferPlan& p2);

struct BaseHParams {
  double eta_b = 5e-4;
  double sigma_b = 0.02;
  double eps_b = 1e-8;
  double lambda_b = 0.1;
  double tokens_b = 0.0;

  void validate() const;
};

struct GroupHParams {
  double init_std = 0.0;
  double lr = 0.0;
  double eps = 0.0;
  double wd = 0.0;
  bool applicable = true;
};

using AppliedHParams = std::map<TransferGroup, GroupHParams>;

/// init std = sigma_b * sqrt(init_var), the rest scale linearly.
AppliedHParams apply_plan(const TransferPlan& plan, const BaseHParams& base);

nlohmann::json to_json(const TransferPlan& plan);
TransferPlan transfer_plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AppliedHParams& hparams);

/// Human-readable table in the layout of the transfer-rule table.
std::string render_table(const TransferPlan& plan);

}  // namespace lrscale
