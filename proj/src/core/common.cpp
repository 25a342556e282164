// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "lrscale/digest.hpp"
#include "lrscale/error.hpp"
#include "lrscale/types.hpp"
#include "lrscale/units.hpp"

namespace lrscale {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Duplicate: return "duplicate";
    case ErrorCode::Underdetermined: return "underdetermined";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::NoInteriorOptimum: return "no_interior_optimum";
    case ErrorCode::NotConverged: return "not_converged";
    case ErrorCode::PlanComplete: return "plan_complete";
    case ErrorCode::ShapeMismatch: return "shape_mismatch";
    case ErrorCode::UnitMismatch: return "unit_mismatch";
    case ErrorCode::OutOfTrustRegion: return "out_of_trust_region";
    case ErrorCode::Diverged: return "diverged";
    case ErrorCode::Io: return "io";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

double parse_quantity(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.remove_suffix(1);
  }
  if (text.empty()) fail(ErrorCode::Parse, "empty quantity");
  double scale = 1.0;
  switch (std::tolower(static_cast<unsigned char>(text.back()))) {
    case 'k': scale = 1e3; break;
    case 'm': scale = 1e6; break;
    case 'b':
    case 'g': scale = 1e9; break;
    case 't': scale = 1e12; break;
    default: break;
  }
  if (scale != 1.0) text.remove_suffix(1);
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(value)) {
    fail(ErrorCode::Parse, "not a quantity: '" + std::string(text) + "'");
  }
  return value * scale;
}

void ModelShape::validate() const {
  auto require = [&](bool ok, const char* field, const char* what) {
    if (!ok) {
      fail(ErrorCode::InvalidArgument,
           "model." + std::string(field) + ": " + what + " (shape '" + name + "')");
    }
  };
  require(!name.empty(), "name", "must be nonempty");
  require(std::isfinite(total_params) && total_params >= 1, "total_params", "must be >= 1");
  require(std::isfinite(active_params) && active_params >= 1, "active_params",
          "must be >= 1");
  require(active_params <= total_params, "active_params", "must not exceed total_params");
  require(hidden_size >= 1, "hidden_size", "must be >= 1");
  require(num_layers >= 1, "num_layers", "must be >= 1");
  require(attn_heads >= 1, "attn_heads", "must be >= 1");
  require(kv_heads >= 1, "kv_heads", "must be >= 1");
  require(intermediate_size >= 1, "intermediate_size", "must be >= 1");
  require(attn_heads % kv_heads == 0, "kv_heads", "must divide attn_heads");
}

void WSDSchedule::validate() const {
  if (warmup_steps < 0) fail(ErrorCode::InvalidArgument, "schedule.warmup_steps: must be >= 0");
  if (!(decay_fraction > 0.0 && decay_fraction <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "schedule.decay_fraction: must be in (0, 1]");
  }
  if (decay_steps < 0) fail(ErrorCode::InvalidArgument, "schedule.decay_steps: must be >= 0");
  if (!(std::isfinite(peak_lr) && peak_lr >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "schedule.peak_lr: must be finite and >= 0");
  }
}

std::string_view to_string(ModuleGroup group) noexcept {
  switch (group) {
    case ModuleGroup::Embedding: return "embedding";
    case ModuleGroup::Hidden: return "hidden";
    case ModuleGroup::Router: return "router";
    case ModuleGroup::LMHead: return "lm_head";
  }
  return "unknown";
}

ModuleGroup module_group_from_string(std::string_view name) {
  for (ModuleGroup g : kAllModuleGroups) {
    if (to_string(g) == name) return g;
  }
  fail(ErrorCode::Parse, "unknown module group '" + std::string(name) + "'");
}

void RunRecord::validate() const {
  if (run_id.empty()) fail(ErrorCode::InvalidArgument, "run_id: must be nonempty");
  shape.validate();
  if (!(std::isfinite(lr_global) && lr_global > 0.0)) {
    fail(ErrorCode::InvalidArgument, "lr_global: must be > 0");
  }
  if (module_lrs) {
    for (const auto& [group, lr] : *module_lrs) {
      if (!(std::isfinite(lr) && lr > 0.0)) {
        fail(ErrorCode::InvalidArgument,
             "module_lrs." + std::string(to_string(group)) + ": must be > 0");
      }
    }
  }
  schedule.validate();
  if (batch_tokens < 1) fail(ErrorCode::InvalidArgument, "batch_tokens: must be >= 1");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LossSample& s = samples[i];
    if (!(std::isfinite(s.loss) && s.loss > 0.0)) {
      fail(ErrorCode::InvalidArgument,
           "loss: sample " + std::to_string(i) + " must be finite and > 0");
    }
    if (i > 0 && s.tokens <= samples[i - 1].tokens) {
      fail(ErrorCode::InvalidArgument,
           "tokens: sample " + std::to_string(i) + " not strictly increasing");
    }
  }
}

}  // namespace lrscale
