// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale residual transformer with hand-written gradients, AdamW and a
// WSD schedule. Used for coordinate checks and update-RMS diagnostics.
//
// Block layout (pre-norm, RMSNorm with learned gain):
//   h += r * Wo * attn(QKNorm(Wq a), QKNorm(Wk a), Wv a),  a = norm(h)
//   h += r * mlp(norm(h))
// where r is the residual multiplier and mlp is either a SiLU MLP or a top-1
// router over two SiLU experts, scaled by the selected router probability.
// Attention scores use 1/sqrt(head_dim) in every parametrization.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lrscale/mutransfer.hpp"
#include "lrscale/types.hpp"

namespace lrscale::micro {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Parametrization { SP, MuPComplete };

std::string_view to_string(Parametrization p) noexcept;
Parametrization parametrization_from_string(std::string_view name);

struct NetConfig {
  int width = 64;
  int depth = 2;
  int heads = 4;
  int vocab = 64;
  int mlp_ratio = 2;
  int moe_experts = 0;  // 0 = dense MLP, 2 = top-1 routed experts
  bool qk_norm = true;
  Parametrization parametrization = Parametrization::SP;
  double residual_mult = 1.0;
  // Per transfer group: init std, peak lr, AdamW eps and weight decay. Norm
  // gains start at 1 regardless of init_std.
  AppliedHParams hparams;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Uniform hyperparameters: every non-norm std 0.02, one lr/eps/wd.
NetConfig sp_config(int width, int depth, double lr, std::uint64_t seed = 1);

/// Complete-P config at `width`/`depth`, transferred from a base model of
/// `base_width`/`base_depth` whose hyperparameters are `base` (alpha = 1,
/// equal token horizons).
NetConfig mup_config(int width, int depth, int base_width, int base_depth,
                     const BaseHParams& base, std::uint64_t seed = 1);

/// Tensor roles. Module groups follow the module-level search; transfer
/// groups follow the transfer rules.
struct TensorInfo {
  std::string name;
  ModuleGroup module = ModuleGroup::Hidden;
  TransferGroup group = TransferGroup::HiddenWeights;
  bool is_gain = false;
};

class Net {
 public:
  explicit Net(const NetConfig& config);

  const NetConfig& config() const noexcept { return config_; }
  std::size_t num_tensors() const noexcept { return params_.size(); }
  const TensorInfo& info(std::size_t i) const { return infos_[i]; }
  Matrix& param(std::size_t i) { return params_[i]; }
  const Matrix& param(std::size_t i) const { return params_[i]; }
  std::size_t index_of(const std::string& name) const;
  std::size_t num_scalars() const;

  bool operator==(const Net& other) const;

 private:
  NetConfig config_;
  std::vector<Matrix> params_;
  std::vector<TensorInfo> infos_;
};

Net build_net(const NetConfig& config);

/// Token batch: `inputs` and `targets` hold batch * seq_len ids, row-major by
/// sequence.
struct Batch {
  int batch = 0;
  int seq_len = 0;
  std::vector<int> inputs;
  std::vector<int> targets;
};

/// Activations recorded for coordinate checks.
struct Probe {
  Matrix embed;        // embedding-layer outputs, (B*T) x width
  Vector attn_logits;  // every causal pre-softmax score, all layers and heads
  Matrix logits;       // output logits, (B*T) x vocab
};

struct ForwardOptions {
  bool bypass_qk_norm = false;  // scores from raw q, k (ablation)
};

double loss(const Net& net, const Batch& batch);
/// Loss and gradients, one matrix per tensor.
double loss_and_grad(const Net& net, const Batch& batch, std::vector<Matrix>& grads);
Probe probe(const Net& net, const Batch& batch, const ForwardOptions& options = {});

/// Top-1 expert index per token of the MoE layer in `layer`; empty for
/// dense nets.
std::vector<int> routing(const Net& net, const Batch& batch, int layer);

// ---------------------------------------------------------------------------
// Synthetic task: next-token prediction on a seeded first-order Markov chain.

struct TaskSpec {
  int vocab = 64;
  int seq_len = 16;
  int batch = 8;
  int branching = 4;  // likely successors per token
  std::uint64_t seed = 7;
};

class MarkovTask {
 public:
  explicit MarkovTask(const TaskSpec& spec);

  const TaskSpec& spec() const noexcept { return spec_; }
  /// The `index`-th training batch; a pure function of (spec, index).
  Batch batch(std::uint64_t index) const;
  /// Fixed probe batch of `sequences` sequences, independent of training data.
  Batch probe_batch(int sequences) const;
  double transition(int from, int to) const { return transitions_(from, to); }

 private:
  Batch sample(std::uint64_t stream, int sequences) const;

  TaskSpec spec_;
  Matrix transitions_;
  std::vector<std::vector<double>> cdf_;
};

// ---------------------------------------------------------------------------
// Schedule and optimizer.

/// WSD learning rate after `step` updates, with `total_stable_steps` steps of
/// constant peak LR between warmup and decay.
double wsd_lr(const WSDSchedule& schedule, std::int64_t step,
              std::int64_t total_stable_steps);

struct AdamWSettings {
  double beta1 = 0.9;
  double beta2 = 0.95;
};

struct TrainOptions {
  AdamWSettings adam;
  WSDSchedule schedule{.warmup_steps = 50, .peak_lr = 1.0, .decay_fraction = 0.1,
                       .decay_steps = 0};
  int steps = 200;
  std::vector<int> checkpoints;  // update counts; 0 = before training
  bool keep_snapshots = false;
  std::optional<Batch> probe;     // when set, coordinate stats per checkpoint
  bool ablate_qk_norm = false;
};

struct CoordStats {
  int step = 0;
  double std_embed = 0.0;
  double std_attn_logits = 0.0;
  double std_logits = 0.0;
  std::string probe_digest;
};

struct Checkpoint {
  int step = 0;
  // Per tensor, RMS of the pre-LR AdamW direction m_hat / (sqrt(v_hat) + eps)
  // of the last update; zero at step 0.
  std::vector<double> update_rms;
  std::map<std::string, double> update_rms_by_layer;
  std::optional<CoordStats> coords;
  std::optional<std::vector<Matrix>> snapshot;
};

struct TrainTrace {
  std::vector<std::string> tensor_names;
  std::vector<bool> hidden_tensor;  // module group Hidden or Router
  std::vector<double> losses;       // per update
  std::vector<Checkpoint> checkpoints;
  bool diverged = false;
  int diverged_at = -1;
};

/// The schedule's peak_lr scales every group's lr: the effective rate of a
/// group at update s is group.lr * wsd_lr(schedule, s) / schedule.peak_lr.
TrainTrace train(Net& net, const MarkovTask& task, const TrainOptions& options);

/// Standard deviation over coordinates of (current - baseline) activations.
CoordStats coord_stats(const Net& net, const Probe& baseline, const Batch& probe_batch,
                       bool ablate_qk_norm, int step = 0);

/// Max over sampled coordinates of |analytic - central difference| /
/// (|analytic| + |central difference| + 1e-8).
struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::map<std::string, double> per_tensor;
};

GradCheckResult grad_check(const Net& net, const Batch& batch, double epsilon,
                           int coords_per_tensor = 6);

/// Same measure for an arbitrary scalar function and its gradient.
GradCheckResult grad_check_function(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> point, std::span<const double> analytic, double epsilon);

// ---------------------------------------------------------------------------
// Coordinate-check sweeps.

struct SweepConfig {
  std::vector<int> widths{32, 64, 128, 256};
  int depth = 2;
  int heads = 4;
  int moe_experts = 0;
  bool qk_norm = false;
  bool ablate_qk_norm = false;
  Parametrization parametrization = Parametrization::SP;
  BaseHParams base{.eta_b = 3e-3, .sigma_b = 0.02, .eps_b = 1e-8, .lambda_b = 0.0,
                   .tokens_b = 0.0};
  TaskSpec task;
  int probe_sequences = 8;
  int steps = 500;
  int warmup_steps = 50;
  std::vector<int> checkpoints{0, 50, 100, 250, 500};
  std::uint64_t seed = 1;
};

struct WidthSeries {
  int width = 0;
  std::vector<CoordStats> stats;
  bool diverged = false;
};

struct TrendSummary {
  int step = 0;
  std::optional<double> rho_embed;  // Spearman rank correlation vs width
  std::optional<double> rho_attn_logits;
  std::optional<double> rho_logits;
  double ratio_embed = 0.0;  // max / min over widths
  double ratio_attn_logits = 0.0;
  double ratio_logits = 0.0;
};

struct CoordCheckReport {
  SweepConfig config;
  std::vector<WidthSeries> widths;
  std::vector<TrendSummary> trends;
  bool partial = false;  // some run diverged
  // Step series at one width (the data-size axis at fixed batch).
  std::optional<WidthSeries> step_series;
  // Per site: std growth over 10x steps divided by growth over the width
  // sweep, final checkpoint.
  std::map<std::string, double> step_vs_width_growth;
};

NetConfig sweep_net_config(const SweepConfig& sweep, int width);

CoordCheckReport coord_check_sweep(const SweepConfig& sweep);

/// CoordStats at every checkpoint of one training run.
WidthSeries step_stability_probe(const SweepConfig& sweep, int width);

/// Sweep plus a step series at the smallest width, with growth ratios.
CoordCheckReport coord_check_with_steps(const SweepConfig& sweep);

std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

nlohmann::json to_json(const TrainTrace& trace);
nlohmann::json to_json(const CoordCheckReport& report);
nlohmann::json to_json(const NetConfig& config);
NetConfig net_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepConfig& config);
SweepConfig sweep_config_from_json(const nlohmann::json& j);

}  // namespace lrscale::micro
