// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// Plain data types shared by the run store, the fitters and the planners.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lrscale {

/// One validation-loss observation. `tokens` is a raw token count.
struct LossSample {
  std::uint64_t tokens = 0;
  double loss = 0.0;

  friend bool operator==(const LossSample&, const LossSample&) = default;
};

struct ModelShape {
  std::string name;
  double total_params = 0.0;
  double active_params = 0.0;
  std::int64_t hidden_size = 0;
  std::int64_t num_layers = 0;
  std::int64_t attn_heads = 0;
  std::int64_t kv_heads = 0;
  std::int64_t intermediate_size = 0;
  bool moe = false;

  /// Throws Error(InvalidArgument) naming the first violated invariant.
  void validate() const;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// Warmup-Stable-Decay learning-rate schedule.
///
/// Linear warmup from 0 to `peak_lr` over `warmup_steps`, constant at
/// `peak_lr` for the stable phase, then linear decay to
/// `decay_fraction * peak_lr` over `decay_steps` (0 means stable-only).
struct WSDSchedule {
  std::int64_t warmup_steps = 1000;
  double peak_lr = 1e-3;
  double decay_fraction = 0.1;
  std::int64_t decay_steps = 0;

  void validate() const;

  friend bool operator==(const WSDSchedule&, const WSDSchedule&) = default;
};

/// Parameter groups of the module-level learning-rate search. Hidden covers
/// attention and norm parameters; Router covers the router matrix and the
/// experts.
enum class ModuleGroup { Embedding, Hidden, Router, LMHead };

inline constexpr std::array<ModuleGroup, 4> kAllModuleGroups = {
    ModuleGroup::Embedding, ModuleGroup::Hidden, ModuleGroup::Router,
    ModuleGroup::LMHead};

/// Wire names: embedding | hidden | router | lm_head.
std::string_view to_string(ModuleGroup group) noexcept;
ModuleGroup module_group_from_string(std::string_view name);

using ModuleLRs = std::map<ModuleGroup, double>;

struct RunRecord {
  std::string run_id;
  ModelShape shape;
  double lr_global = 0.0;
  std::optional<ModuleLRs> module_lrs;
  WSDSchedule schedule;
  std::int64_t batch_tokens = 0;
  // Every top-level field outside the record schema, preserved verbatim.
  nlohmann::json other_hparams = nlohmann::json::object();
  std::vector<LossSample> samples;

  void validate() const;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

}  // namespace lrscale
