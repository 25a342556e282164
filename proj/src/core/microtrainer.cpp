// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "lrscale/microtrainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "lrscale/digest.hpp"
#include "lrscale/error.hpp"
#include "parallel.hpp"

namespace lrscale::micro {
namespace {

constexpr double kNormEps = 1e-6;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Box-Muller on raw engine output, so draws do not depend on the standard
// library's distribution implementation.
double normal(std::mt19937_64& rng) {
  const double u1 = uniform01(rng) + 0x1.0p-54;
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

struct TensorSpec {
  TensorInfo info;
  int rows = 0;
  int cols = 0;
};

struct LayerIdx {
  int attn_norm = -1, wq = -1, wk = -1, wv = -1, wo = -1;
  int q_norm = -1, k_norm = -1;
  int mlp_norm = -1, w_up = -1, w_down = -1, router = -1;
  std::vector<int> ex_up, ex_down;
};

struct Layout {
  int embed = -1;
  std::vector<LayerIdx> layers;
  int final_norm = -1;
  int lm_head = -1;
  std::vector<TensorSpec> specs;
};

Layout make_layout(const NetConfig& c) {
  Layout lay;
  auto add = [&](std::string name, int rows, int cols, ModuleGroup module, TransferGroup group,
                 bool gain) {
    lay.specs.push_back({TensorInfo{std::move(name), module, group, gain}, rows, cols});
    return static_cast<int>(lay.specs.size() - 1);
  };
  const int W = c.width;
  const int F = c.width * c.mlp_ratio;
  const int hd = c.width / c.heads;
  using MG = ModuleGroup;
  using TG = TransferGroup;
  lay.embed = add("embed", c.vocab, W, MG::Embedding, TG::InputEmb, false);
  for (int l = 0; l < c.depth; ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    LayerIdx li;
    li.attn_norm = add(p + "attn_norm", 1, W, MG::Hidden, TG::HiddenBiasesNorms, true);
    li.wq = add(p + "wq", W, W, MG::Hidden, TG::HiddenWeights, false);
    li.wk = add(p + "wk", W, W, MG::Hidden, TG::HiddenWeights, false);
    li.wv = add(p + "wv", W, W, MG::Hidden, TG::HiddenWeights, false);
    li.wo = add(p + "wo", W, W, MG::Hidden, TG::HiddenWeights, false);
    if (c.qk_norm) {
      li.q_norm = add(p + "q_norm", 1, hd, MG::Hidden, TG::QKNorms, true);
      li.k_norm = add(p + "k_norm", 1, hd, MG::Hidden, TG::QKNorms, true);
    }
    li.mlp_norm = add(p + "mlp_norm", 1, W, MG::Hidden, TG::HiddenBiasesNorms, true);
    if (c.moe_experts == 0) {
      li.w_up = add(p + "w_up", W, F, MG::Hidden, TG::HiddenWeights, false);
      li.w_down = add(p + "w_down", F, W, MG::Hidden, TG::HiddenWeights, false);
    } else {
      li.router = add(p + "router", W, c.moe_experts, MG::Router, TG::HiddenWeights, false);
      for (int e = 0; e < c.moe_experts; ++e) {
        const std::string q = p + "experts." + std::to_string(e) + ".";
        li.ex_up.push_back(add(q + "w_up", W, F, MG::Router, TG::HiddenWeights, false));
        li.ex_down.push_back(add(q + "w_down", F, W, MG::Router, TG::HiddenWeights, false));
      }
    }
    lay.layers.push_back(std::move(li));
  }
  lay.final_norm = add("final_norm", 1, W, MG::LMHead, TG::UnembLN, true);
  lay.lm_head = add("lm_head", W, c.vocab, MG::LMHead, TG::UnembWeights, false);
  return lay;
}

// Row-wise RMSNorm with a shared gain row.
void rms_forward(const Matrix& x, const Matrix& g, Matrix& xhat, Vector& inv, Matrix& y) {
  const auto n = static_cast<double>(x.cols());
  inv.resize(x.rows());
  xhat.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    inv(i) = 1.0 / std::sqrt(x.row(i).squaredNorm() / n + kNormEps);
    xhat.row(i) = x.row(i) * inv(i);
  }
  y = xhat.array().rowwise() * g.row(0).array();
}

void rms_backward(const Matrix& dy, const Matrix& xhat, const Vector& inv, const Matrix& g,
                  Matrix& dx, Matrix& dg) {
  const auto n = static_cast<double>(xhat.cols());
  const Matrix dxhat = dy.array().rowwise() * g.row(0).array();
  dg += (dy.array() * xhat.array()).colwise().sum().matrix();
  dx.resize(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double proj = dxhat.row(i).dot(xhat.row(i)) / n;
    dx.row(i) = inv(i) * (dxhat.row(i) - proj * xhat.row(i));
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix silu(const Matrix& u) {
  return u.unaryExpr([](double x) { return x * sigmoid(x); });
}

Matrix silu_grad(const Matrix& u) {
  return u.unaryExpr([](double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
  });
}

using RowMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Matrix>;

struct LayerCache {
  Matrix h_in, a_hat, a;
  Vector a_inv;
  Matrix q, k, v;
  Matrix qn, kn;  // per-head normalized q, k (copies of q, k without QK-Norm)
  Matrix q_hat, k_hat;
  Vector q_inv, k_inv;
  std::vector<Matrix> probs;  // per (sequence, head), T x T
  Matrix o;
  Matrix h_mid, b_hat, bn;
  Vector b_inv;
  Matrix u;  // dense MLP pre-activation
  // MoE
  Matrix z, p;
  std::vector<int> choice;
  std::vector<std::vector<int>> rows_of;  // token rows per expert
  std::vector<Matrix> ex_in, ex_u, ex_y;
};

struct ForwardState {
  Matrix x0;
  std::vector<LayerCache> layers;
  Matrix f_hat, f;
  Vector f_inv;
  Matrix logits, probs;
  double loss = 0.0;
  std::vector<double> scores;
};

void check_batch(const NetConfig& c, const Batch& batch) {
  const auto n = static_cast<std::size_t>(batch.batch) * static_cast<std::size_t>(batch.seq_len);
  if (batch.batch < 1 || batch.seq_len < 1 || batch.inputs.size() != n ||
      batch.targets.size() != n) {
    fail(ErrorCode::ShapeMismatch, "batch: inputs/targets must hold batch * seq_len ids");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (batch.inputs[i] < 0 || batch.inputs[i] >= c.vocab || batch.targets[i] < 0 ||
        batch.targets[i] >= c.vocab) {
      fail(ErrorCode::InvalidArgument, "batch: token id outside the vocabulary");
    }
  }
}

// One expert MLP on a gathered row block.
Matrix expert_forward(const Matrix& x, const Matrix& w_up, const Matrix& w_down, Matrix& u) {
  u = x * w_up;
  return silu(u) * w_down;
}

void forward(const Net& net, const Layout& lay, const Batch& batch, ForwardState& st,
             bool record_scores, bool bypass_qk_norm) {
  const NetConfig& c = net.config();
  check_batch(c, batch);
  const int B = batch.batch;
  const int T = batch.seq_len;
  const int N = B * T;
  const int W = c.width;
  const int H = c.heads;
  const int hd = W / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const double r = c.residual_mult;

  const Matrix& E = net.param(lay.embed);
  st.x0.resize(N, W);
  for (int i = 0; i < N; ++i) st.x0.row(i) = E.row(batch.inputs[i]);
  Matrix h = st.x0;
  st.layers.assign(c.depth, LayerCache{});
  st.scores.clear();

  for (int l = 0; l < c.depth; ++l) {
    const LayerIdx& li = lay.layers[l];
    LayerCache& lc = st.layers[l];
    lc.h_in = h;
    rms_forward(h, net.param(li.attn_norm), lc.a_hat, lc.a_inv, lc.a);
    lc.q = lc.a * net.param(li.wq);
    lc.k = lc.a * net.param(li.wk);
    lc.v = lc.a * net.param(li.wv);
    if (c.qk_norm) {
      Matrix qh, kh;
      rms_forward(ConstRowMap(lc.q.data(), N * H, hd), net.param(li.q_norm), lc.q_hat, lc.q_inv,
                  qh);
      rms_forward(ConstRowMap(lc.k.data(), N * H, hd), net.param(li.k_norm), lc.k_hat, lc.k_inv,
                  kh);
      lc.qn = ConstRowMap(qh.data(), N, W);
      lc.kn = ConstRowMap(kh.data(), N, W);
    } else {
      lc.qn = lc.q;
      lc.kn = lc.k;
    }
    lc.o.setZero(N, W);
    lc.probs.assign(static_cast<std::size_t>(B) * H, Matrix());
    for (int b = 0; b < B; ++b) {
      for (int hh = 0; hh < H; ++hh) {
        const auto Q = lc.qn.block(b * T, hh * hd, T, hd);
        const auto K = lc.kn.block(b * T, hh * hd, T, hd);
        const auto V = lc.v.block(b * T, hh * hd, T, hd);
        Matrix S = (Q * K.transpose()) * scale;
        if (record_scores) {
          if (bypass_qk_norm && c.qk_norm) {
            const Matrix raw = (lc.q.block(b * T, hh * hd, T, hd) *
                                lc.k.block(b * T, hh * hd, T, hd).transpose()) *
                               scale;
            for (int i = 0; i < T; ++i)
              for (int j = 0; j <= i; ++j) st.scores.push_back(raw(i, j));
          } else {
            for (int i = 0; i < T; ++i)
              for (int j = 0; j <= i; ++j) st.scores.push_back(S(i, j));
          }
        }
        Matrix P = Matrix::Zero(T, T);
        for (int i = 0; i < T; ++i) {
          const double mx = S.row(i).head(i + 1).maxCoeff();
          double sum = 0.0;
          for (int j = 0; j <= i; ++j) {
            P(i, j) = std::exp(S(i, j) - mx);
            sum += P(i, j);
          }
          P.row(i).head(i + 1) /= sum;
        }
        lc.o.block(b * T, hh * hd, T, hd) = P * V;
        lc.probs[static_cast<std::size_t>(b) * H + hh] = std::move(P);
      }
    }
    h = lc.h_in + r * (lc.o * net.param(li.wo));
    lc.h_mid = h;
    rms_forward(h, net.param(li.mlp_norm), lc.b_hat, lc.b_inv, lc.bn);
    if (c.moe_experts == 0) {
      lc.u = lc.bn * net.param(li.w_up);
      h += r * (silu(lc.u) * net.param(li.w_down));
    } else {
      const int X = c.moe_experts;
      lc.z = lc.bn * net.param(li.router);
      lc.p.resize(N, X);
      lc.choice.assign(N, 0);
      lc.rows_of.assign(X, {});
      for (int i = 0; i < N; ++i) {
        const double mx = lc.z.row(i).maxCoeff();
        double sum = 0.0;
        for (int e = 0; e < X; ++e) sum += (lc.p(i, e) = std::exp(lc.z(i, e) - mx));
        lc.p.row(i) /= sum;
        int best = 0;
        for (int e = 1; e < X; ++e)
          if (lc.p(i, e) > lc.p(i, best)) best = e;
        lc.choice[i] = best;
        lc.rows_of[best].push_back(i);
      }
      lc.ex_in.assign(X, Matrix());
      lc.ex_u.assign(X, Matrix());
      lc.ex_y.assign(X, Matrix());
      for (int e = 0; e < X; ++e) {
        const auto& rows = lc.rows_of[e];
        if (rows.empty()) continue;
        Matrix xin(static_cast<Eigen::Index>(rows.size()), W);
        for (std::size_t k = 0; k < rows.size(); ++k) xin.row(k) = lc.bn.row(rows[k]);
        lc.ex_y[e] = expert_forward(xin, net.param(li.ex_up[e]), net.param(li.ex_down[e]),
                                    lc.ex_u[e]);
        for (std::size_t k = 0; k < rows.size(); ++k) {
          h.row(rows[k]) += r * lc.p(rows[k], e) * lc.ex_y[e].row(k);
        }
        lc.ex_in[e] = std::move(xin);
      }
    }
  }

  rms_forward(h, net.param(lay.final_norm), st.f_hat, st.f_inv, st.f);
  st.logits = st.f * net.param(lay.lm_head);
  st.probs.resize(N, c.vocab);
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    const double mx = st.logits.row(i).maxCoeff();
    const auto ex = (st.logits.row(i).array() - mx).exp();
    const double sum = ex.sum();
    st.probs.row(i) = ex / sum;
    total += std::log(sum) + mx - st.logits(i, batch.targets[i]);
  }
  st.loss = total / N;
}

void backward(const Net& net, const Layout& lay, const Batch& batch, const ForwardState& st,
              std::vector<Matrix>& grads) {
  const NetConfig& c = net.config();
  const int B = batch.batch;
  const int T = batch.seq_len;
  const int N = B * T;
  const int W = c.width;
  const int H = c.heads;
  const int hd = W / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const double r = c.residual_mult;

  grads.resize(net.num_tensors());
  for (std::size_t i = 0; i < net.num_tensors(); ++i) {
    grads[i].setZero(net.param(i).rows(), net.param(i).cols());
  }

  Matrix dlogits = st.probs;
  for (int i = 0; i < N; ++i) dlogits(i, batch.targets[i]) -= 1.0;
  dlogits /= static_cast<double>(N);
  grads[lay.lm_head] = st.f.transpose() * dlogits;
  const Matrix df = dlogits * net.param(lay.lm_head).transpose();
  Matrix dh;
  rms_backward(df, st.f_hat, st.f_inv, net.param(lay.final_norm), dh, grads[lay.final_norm]);

  for (int l = c.depth - 1; l >= 0; --l) {
    const LayerIdx& li = lay.layers[l];
    const LayerCache& lc = st.layers[l];

    // MLP branch.
    const Matrix dm = r * dh;
    Matrix dbn;
    if (c.moe_experts == 0) {
      const Matrix s = silu(lc.u);
      grads[li.w_down] += s.transpose() * dm;
      const Matrix du = (dm * net.param(li.w_down).transpose()).cwiseProduct(silu_grad(lc.u));
      grads[li.w_up] += lc.bn.transpose() * du;
      dbn = du * net.param(li.w_up).transpose();
    } else {
      const int X = c.moe_experts;
      dbn.setZero(N, W);
      Matrix dz = Matrix::Zero(N, X);
      for (int e = 0; e < X; ++e) {
        const auto& rows = lc.rows_of[e];
        if (rows.empty()) continue;
        const auto R = static_cast<Eigen::Index>(rows.size());
        Matrix dy(R, W);
        for (Eigen::Index k = 0; k < R; ++k) {
          const int i = rows[k];
          dy.row(k) = lc.p(i, e) * dm.row(i);
          const double dp = dm.row(i).dot(lc.ex_y[e].row(k));
          for (int j = 0; j < X; ++j) {
            dz(i, j) = dp * lc.p(i, e) * ((j == e ? 1.0 : 0.0) - lc.p(i, j));
          }
        }
        const Matrix s = silu(lc.ex_u[e]);
        grads[li.ex_down[e]] += s.transpose() * dy;
        const Matrix du =
            (dy * net.param(li.ex_down[e]).transpose()).cwiseProduct(silu_grad(lc.ex_u[e]));
        grads[li.ex_up[e]] += lc.ex_in[e].transpose() * du;
        const Matrix dx = du * net.param(li.ex_up[e]).transpose();
        for (Eigen::Index k = 0; k < R; ++k) dbn.row(rows[k]) += dx.row(k);
      }
      grads[li.router] += lc.bn.transpose() * dz;
      dbn += dz * net.param(li.router).transpose();
    }
    Matrix dtmp;
    rms_backward(dbn, lc.b_hat, lc.b_inv, net.param(li.mlp_norm), dtmp, grads[li.mlp_norm]);
    dh += dtmp;

    // Attention branch.
    const Matrix dattn = r * dh;
    grads[li.wo] += lc.o.transpose() * dattn;
    const Matrix dO = dattn * net.param(li.wo).transpose();
    Matrix dqn = Matrix::Zero(N, W);
    Matrix dkn = Matrix::Zero(N, W);
    Matrix dv = Matrix::Zero(N, W);
    for (int b = 0; b < B; ++b) {
      for (int hh = 0; hh < H; ++hh) {
        const Matrix& P = lc.probs[static_cast<std::size_t>(b) * H + hh];
        const auto Q = lc.qn.block(b * T, hh * hd, T, hd);
        const auto K = lc.kn.block(b * T, hh * hd, T, hd);
        const auto V = lc.v.block(b * T, hh * hd, T, hd);
        const auto dOh = dO.block(b * T, hh * hd, T, hd);
        dv.block(b * T, hh * hd, T, hd) = P.transpose() * dOh;
        const Matrix dP = dOh * V.transpose();
        const Vector rowdot = (dP.array() * P.array()).rowwise().sum();
        const Matrix dS = (P.array() * (dP.array().colwise() - rowdot.array())).matrix() * scale;
        dqn.block(b * T, hh * hd, T, hd) = dS * K;
        dkn.block(b * T, hh * hd, T, hd) = dS.transpose() * Q;
      }
    }
    Matrix dq, dk;
    if (c.qk_norm) {
      Matrix dqh, dkh;
      rms_backward(ConstRowMap(dqn.data(), N * H, hd), lc.q_hat, lc.q_inv, net.param(li.q_norm),
                   dqh, grads[li.q_norm]);
      rms_backward(ConstRowMap(dkn.data(), N * H, hd), lc.k_hat, lc.k_inv, net.param(li.k_norm),
                   dkh, grads[li.k_norm]);
      dq = ConstRowMap(dqh.data(), N, W);
      dk = ConstRowMap(dkh.data(), N, W);
    } else {
      dq = std::move(dqn);
      dk = std::move(dkn);
    }
    grads[li.wq] += lc.a.transpose() * dq;
    grads[li.wk] += lc.a.transpose() * dk;
    grads[li.wv] += lc.a.transpose() * dv;
    const Matrix da = dq * net.param(li.wq).transpose() + dk * net.param(li.wk).transpose() +
                      dv * net.param(li.wv).transpose();
    rms_backward(da, lc.a_hat, lc.a_inv, net.param(li.attn_norm), dtmp, grads[li.attn_norm]);
    dh += dtmp;
  }

  Matrix& dE = grads[lay.embed];
  for (int i = 0; i < N; ++i) dE.row(batch.inputs[i]) += dh.row(i);
}

double population_std(const double* d, std::size_t n) {
  if (n == 0) return 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += d[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (d[i] - mean) * (d[i] - mean);
  return std::sqrt(ss / static_cast<double>(n));
}

std::string batch_digest(const Batch& batch) {
  std::string bytes;
  bytes.reserve(8 + 8 * batch.inputs.size());
  auto put = [&](std::int32_t v) { bytes.append(reinterpret_cast<const char*>(&v), sizeof v); };
  put(batch.batch);
  put(batch.seq_len);
  for (int t : batch.inputs) put(t);
  for (int t : batch.targets) put(t);
  return digest_hex(bytes);
}

std::string layer_key(const std::string& name) {
  if (name.rfind("layers.", 0) == 0) {
    const auto dot = name.find('.', 7);
    return name.substr(0, dot);
  }
  return name;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json stats_json(const CoordStats& s) {
  return {{"step", s.step},
          {"std_embed", s.std_embed},
          {"std_attn_logits", s.std_attn_logits},
          {"std_logits", s.std_logits},
          {"probe_digest", s.probe_digest}};
}

nlohmann::json series_json(const WidthSeries& w) {
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& s : w.stats) stats.push_back(stats_json(s));
  return {{"width", w.width}, {"diverged", w.diverged}, {"stats", stats}};
}

}  // namespace

std::string_view to_string(Parametrization p) noexcept {
  return p == Parametrization::SP ? "sp" : "mup_complete";
}

Parametrization parametrization_from_string(std::string_view name) {
  if (name == "sp" || name == "SP") return Parametrization::SP;
  if (name == "mup_complete" || name == "muP_complete" || name == "mup" ||
      name == "complete_p") {
    return Parametrization::MuPComplete;
  }
  fail(ErrorCode::InvalidArgument, "unknown parametrization '" + std::string(name) + "'");
}

void NetConfig::validate() const {
  if (width < 1 || heads < 1 || width % heads != 0) {
    fail(ErrorCode::InvalidArgument, "net: width must be a positive multiple of heads");
  }
  if (depth < 1) fail(ErrorCode::InvalidArgument, "net: depth must be >= 1");
  if (vocab < 2) fail(ErrorCode::InvalidArgument, "net: vocab must be >= 2");
  if (mlp_ratio < 1) fail(ErrorCode::InvalidArgument, "net: mlp_ratio must be >= 1");
  if (moe_experts != 0 && moe_experts != 2) {
    fail(ErrorCode::InvalidArgument, "net: moe_experts must be 0 or 2");
  }
  if (!(residual_mult > 0.0 && std::isfinite(residual_mult))) {
    fail(ErrorCode::InvalidArgument, "net: residual_mult must be > 0");
  }
  for (TransferGroup g : kAllTransferGroups) {
    if (g == TransferGroup::QKNorms && !qk_norm) continue;
    auto it = hparams.find(g);
    if (it == hparams.end()) {
      fail(ErrorCode::InvalidArgument,
           "net: missing hyperparameters for group " + std::string(to_string(g)));
    }
    const GroupHParams& h = it->second;
    if (!(h.init_std > 0.0 && h.lr > 0.0 && h.eps > 0.0 && h.wd >= 0.0) ||
        !std::isfinite(h.init_std + h.lr + h.eps + h.wd)) {
      fail(ErrorCode::InvalidArgument, "net: group " + std::string(to_string(g)) +
                                           " needs init_std, lr, eps > 0 and wd >= 0");
    }
  }
}

NetConfig sp_config(int width, int depth, double lr, std::uint64_t seed) {
  NetConfig c;
  c.width = width;
  c.depth = depth;
  c.seed = seed;
  for (TransferGroup g : kAllTransferGroups) c.hparams[g] = GroupHParams{0.02, lr, 1e-8, 0.1, true};
  return c;
}

NetConfig mup_config(int width, int depth, int base_width, int base_depth,
                     const BaseHParams& base, std::uint64_t seed) {
  if (base_width < 1 || base_depth < 1) {
    fail(ErrorCode::InvalidArgument, "mup_config: base width and depth must be >= 1");
  }
  const ShapeRatios ratios{Ratio(width, base_width), Ratio(depth, base_depth), Ratio(1, 1)};
  const TransferPlan plan = make_transfer_plan(ratios, 1.0, TransferVariant::CompleteP);
  NetConfig c;
  c.width = width;
  c.depth = depth;
  c.seed = seed;
  c.parametrization = Parametrization::MuPComplete;
  c.residual_mult = plan.residual_mult();
  c.hparams = apply_plan(plan, base);
  return c;
}

Net::Net(const NetConfig& config) : config_(config) {
  config_.validate();
  const Layout lay = make_layout(config_);
  for (std::size_t i = 0; i < lay.specs.size(); ++i) {
    const TensorSpec& s = lay.specs[i];
    Matrix m(s.rows, s.cols);
    if (s.info.is_gain) {
      m.setOnes();
    } else {
      std::mt19937_64 rng(splitmix64(config_.seed ^ splitmix64(i + 1)));
      const double sd = config_.hparams.at(s.info.group).init_std;
      for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = sd * normal(rng);
    }
    params_.push_back(std::move(m));
    infos_.push_back(s.info);
  }
}

std::size_t Net::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < infos_.size(); ++i) {
    if (infos_[i].name == name) return i;
  }
  fail(ErrorCode::InvalidArgument, "no tensor named '" + name + "'");
}

std::size_t Net::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
  return n;
}

bool Net::operator==(const Net& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].rows() != other.params_[i].rows() ||
        params_[i].cols() != other.params_[i].cols() || params_[i] != other.params_[i]) {
      return false;
    }
  }
  return true;
}

Net build_net(const NetConfig& config) { return Net(config); }

double loss(const Net& net, const Batch& batch) {
  const Layout lay = make_layout(net.config());
  ForwardState st;
  forward(net, lay, batch, st, false, false);
  return st.loss;
}

double loss_and_grad(const Net& net, const Batch& batch, std::vector<Matrix>& grads) {
  const Layout lay = make_layout(net.config());
  ForwardState st;
  forward(net, lay, batch, st, false, false);
  backward(net, lay, batch, st, grads);
  return st.loss;
}

Probe probe(const Net& net, const Batch& batch, const ForwardOptions& options) {
  const Layout lay = make_layout(net.config());
  ForwardState st;
  forward(net, lay, batch, st, true, options.bypass_qk_norm);
  Probe p;
  p.embed = std::move(st.x0);
  p.attn_logits = Eigen::Map<const Vector>(st.scores.data(),
                                           static_cast<Eigen::Index>(st.scores.size()));
  p.logits = std::move(st.logits);
  return p;
}

std::vector<int> routing(const Net& net, const Batch& batch, int layer) {
  if (layer < 0 || layer >= net.config().depth) {
    fail(ErrorCode::InvalidArgument, "routing: layer out of range");
  }
  if (net.config().moe_experts == 0) return {};
  const Layout lay = make_layout(net.config());
  ForwardState st;
  forward(net, lay, batch, st, false, false);
  return st.layers[layer].choice;
}

MarkovTask::MarkovTask(const TaskSpec& spec) : spec_(spec) {
  if (spec.vocab < 2 || spec.seq_len < 1 || spec.batch < 1 || spec.branching < 1 ||
      spec.branching > spec.vocab) {
    fail(ErrorCode::InvalidArgument,
         "task: need vocab >= 2, seq_len >= 1, batch >= 1, 1 <= branching <= vocab");
  }
  const int V = spec.vocab;
  std::mt19937_64 rng(splitmix64(spec.seed));
  transitions_ = Matrix::Constant(V, V, 0.1 / V);
  std::vector<int> perm(V);
  for (int i = 0; i < V; ++i) {
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<double> w(spec.branching);
    for (int k = 0; k < spec.branching; ++k) {
      const auto j = k + static_cast<int>(uniform01(rng) * (V - k));
      std::swap(perm[k], perm[std::min(j, V - 1)]);
      w[k] = 1.0 + 3.0 * uniform01(rng);
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (int k = 0; k < spec.branching; ++k) transitions_(i, perm[k]) += 0.9 * w[k] / total;
  }
  cdf_.assign(V, std::vector<double>(V));
  for (int i = 0; i < V; ++i) {
    double acc = 0.0;
    for (int j = 0; j < V; ++j) cdf_[i][j] = (acc += transitions_(i, j));
    cdf_[i][V - 1] = 1.0;
  }
}

Batch MarkovTask::sample(std::uint64_t stream, int sequences) const {
  std::mt19937_64 rng(splitmix64(spec_.seed) ^ splitmix64(stream + 0x5bd1e995ULL));
  Batch b;
  b.batch = sequences;
  b.seq_len = spec_.seq_len;
  const int V = spec_.vocab;
  for (int s = 0; s < sequences; ++s) {
    int tok = std::min(static_cast<int>(uniform01(rng) * V), V - 1);
    for (int t = 0; t < spec_.seq_len; ++t) {
      const double u = uniform01(rng);
      const auto& row = cdf_[tok];
      const int next =
          std::min(static_cast<int>(std::upper_bound(row.begin(), row.end(), u) - row.begin()),
                   V - 1);
      b.inputs.push_back(tok);
      b.targets.push_back(next);
      tok = next;
    }
  }
  return b;
}

Batch MarkovTask::batch(std::uint64_t index) const { return sample(index, spec_.batch); }

Batch MarkovTask::probe_batch(int sequences) const {
  if (sequences < 1) fail(ErrorCode::InvalidArgument, "probe batch needs >= 1 sequence");
  return sample((1ULL << 63) | static_cast<std::uint64_t>(sequences), sequences);
}

double wsd_lr(const WSDSchedule& s, std::int64_t step, std::int64_t total_stable_steps) {
  if (step < 0) fail(ErrorCode::InvalidArgument, "wsd_lr: step must be >= 0");
  if (total_stable_steps < 0) fail(ErrorCode::InvalidArgument, "wsd_lr: stable steps must be >= 0");
  s.validate();
  if (step < s.warmup_steps) {
    return s.peak_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  const std::int64_t into_decay = step - s.warmup_steps - total_stable_steps;
  if (into_decay <= 0 || s.decay_steps == 0) return s.peak_lr;
  if (into_decay >= s.decay_steps) return s.decay_fraction * s.peak_lr;
  const double frac = static_cast<double>(into_decay) / static_cast<double>(s.decay_steps);
  return s.peak_lr * (1.0 - (1.0 - s.decay_fraction) * frac);
}

CoordStats coord_stats(const Net& net, const Probe& baseline, const Batch& probe_batch,
                       bool ablate_qk_norm, int step) {
  const Probe now = probe(net, probe_batch, ForwardOptions{ablate_qk_norm});
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
  };
  if (!same(now.embed, baseline.embed) || !same(now.logits, baseline.logits) ||
      now.attn_logits.size() != baseline.attn_logits.size()) {
    fail(ErrorCode::ShapeMismatch, "coord_stats: probe does not match the baseline shape");
  }
  CoordStats s;
  s.step = step;
  const Matrix de = now.embed - baseline.embed;
  const Vector da = now.attn_logits - baseline.attn_logits;
  const Matrix dl = now.logits - baseline.logits;
  s.std_embed = population_std(de.data(), static_cast<std::size_t>(de.size()));
  s.std_attn_logits = population_std(da.data(), static_cast<std::size_t>(da.size()));
  s.std_logits = population_std(dl.data(), static_cast<std::size_t>(dl.size()));
  s.probe_digest = batch_digest(probe_batch);
  return s;
}

TrainTrace train(Net& net, const MarkovTask& task, const TrainOptions& options) {
  if (options.steps < 1) fail(ErrorCode::InvalidArgument, "train: steps must be >= 1");
  options.schedule.validate();
  if (net.config().vocab != task.spec().vocab) {
    fail(ErrorCode::ShapeMismatch, "train: net vocab differs from task vocab");
  }
  const auto& a = options.adam;
  if (!(a.beta1 >= 0.0 && a.beta1 < 1.0 && a.beta2 >= 0.0 && a.beta2 < 1.0)) {
    fail(ErrorCode::InvalidArgument, "train: AdamW betas must lie in [0, 1)");
  }
  std::set<int> checkpoints;
  for (int c : options.checkpoints) {
    if (c < 0 || c > options.steps) {
      fail(ErrorCode::InvalidArgument, "train: checkpoint " + std::to_string(c) +
                                           " outside [0, " + std::to_string(options.steps) + "]");
    }
    checkpoints.insert(c);
  }

  const std::size_t n = net.num_tensors();
  TrainTrace trace;
  for (std::size_t i = 0; i < n; ++i) {
    trace.tensor_names.push_back(net.info(i).name);
    trace.hidden_tensor.push_back(net.info(i).module == ModuleGroup::Hidden ||
                                  net.info(i).module == ModuleGroup::Router);
  }

  std::optional<Probe> baseline;
  if (options.probe) {
    baseline = probe(net, *options.probe, ForwardOptions{options.ablate_qk_norm});
  }
  std::vector<double> last_rms(n, 0.0);
  std::vector<double> last_ss(n, 0.0);
  auto record = [&](int step) {
    Checkpoint cp;
    cp.step = step;
    cp.update_rms = last_rms;
    std::map<std::string, std::pair<double, double>> acc;
    for (std::size_t i = 0; i < n; ++i) {
      auto& [ss, count] = acc[layer_key(net.info(i).name)];
      ss += last_ss[i];
      count += static_cast<double>(net.param(i).size());
    }
    for (const auto& [key, v] : acc) cp.update_rms_by_layer[key] = std::sqrt(v.first / v.second);
    if (baseline) {
      cp.coords = coord_stats(net, *baseline, *options.probe, options.ablate_qk_norm, step);
    }
    if (options.keep_snapshots) {
      std::vector<Matrix> snap;
      for (std::size_t i = 0; i < n; ++i) snap.push_back(net.param(i));
      cp.snapshot = std::move(snap);
    }
    trace.checkpoints.push_back(std::move(cp));
  };
  if (checkpoints.count(0)) record(0);

  const WSDSchedule& sched = options.schedule;
  const std::int64_t stable =
      std::max<std::int64_t>(0, options.steps - sched.warmup_steps - sched.decay_steps);
  std::vector<Matrix> m(n), v(n), grads;
  for (std::size_t i = 0; i < n; ++i) {
    m[i].setZero(net.param(i).rows(), net.param(i).cols());
    v[i].setZero(net.param(i).rows(), net.param(i).cols());
  }
  double pow1 = 1.0;
  double pow2 = 1.0;
  for (int s = 1; s <= options.steps; ++s) {
    const double L = loss_and_grad(net, task.batch(static_cast<std::uint64_t>(s - 1)), grads);
    bool finite = std::isfinite(L);
    for (std::size_t i = 0; finite && i < n; ++i) finite = grads[i].allFinite();
    if (!finite) {
      trace.diverged = true;
      trace.diverged_at = s;
      break;
    }
    trace.losses.push_back(L);
    const double factor = sched.peak_lr > 0.0 ? wsd_lr(sched, s, stable) / sched.peak_lr : 0.0;
    pow1 *= a.beta1;
    pow2 *= a.beta2;
    const double bc1 = 1.0 - pow1;
    const double bc2 = 1.0 - pow2;
    for (std::size_t i = 0; i < n; ++i) {
      const GroupHParams& hp = net.config().hparams.at(net.info(i).group);
      const double lr = hp.lr * factor;
      m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * grads[i];
      v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * grads[i].cwiseAbs2();
      const Matrix dir =
          ((m[i].array() / bc1) / ((v[i].array() / bc2).sqrt() + hp.eps)).matrix();
      last_ss[i] = dir.squaredNorm();
      last_rms[i] = std::sqrt(last_ss[i] / static_cast<double>(dir.size()));
      Matrix& w = net.param(i);
      w = w * (1.0 - lr * hp.wd) - lr * dir;
    }
    if (checkpoints.count(s)) record(s);
  }
  return trace;
}

GradCheckResult grad_check_function(const std::function<double(std::span<const double>)>& f,
                                    std::span<const double> point,
                                    std::span<const double> analytic, double epsilon) {
  if (point.size() != analytic.size()) {
    fail(ErrorCode::ShapeMismatch, "grad_check: point and gradient sizes differ");
  }
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "grad_check: epsilon must be > 0");
  GradCheckResult res;
  std::vector<double> x(point.begin(), point.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + epsilon;
    const double fp = f(x);
    x[i] = orig - epsilon;
    const double fm = f(x);
    x[i] = orig;
    const double cd = (fp - fm) / (2.0 * epsilon);
    const double abs_err = std::abs(analytic[i] - cd);
    const double rel = abs_err / (std::abs(analytic[i]) + std::abs(cd) + 1e-8);
    res.max_abs_error = std::max(res.max_abs_error, abs_err);
    res.max_rel_error = std::max(res.max_rel_error, rel);
  }
  return res;
}

GradCheckResult grad_check(const Net& net, const Batch& batch, double epsilon,
                           int coords_per_tensor) {
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "grad_check: epsilon must be > 0");
  if (coords_per_tensor < 1) fail(ErrorCode::InvalidArgument, "grad_check: need >= 1 coordinate");
  std::vector<Matrix> grads;
  loss_and_grad(net, batch, grads);
  Net work = net;
  GradCheckResult res;
  for (std::size_t t = 0; t < work.num_tensors(); ++t) {
    Matrix& p = work.param(t);
    const auto size = static_cast<std::uint64_t>(p.size());
    std::mt19937_64 rng(splitmix64(net.config().seed + 1000 * (t + 1)));
    std::vector<Eigen::Index> coords;
    if (size <= static_cast<std::uint64_t>(coords_per_tensor)) {
      for (std::uint64_t k = 0; k < size; ++k) coords.push_back(static_cast<Eigen::Index>(k));
    } else {
      for (int k = 0; k < coords_per_tensor; ++k) {
        coords.push_back(static_cast<Eigen::Index>(rng() % size));
      }
    }
    double worst = 0.0;
    for (Eigen::Index k : coords) {
      const double orig = p.data()[k];
      p.data()[k] = orig + epsilon;
      const double fp = loss(work, batch);
      p.data()[k] = orig - epsilon;
      const double fm = loss(work, batch);
      p.data()[k] = orig;
      const double cd = (fp - fm) / (2.0 * epsilon);
      const double an = grads[t].data()[k];
      const double abs_err = std::abs(an - cd);
      const double rel = abs_err / (std::abs(an) + std::abs(cd) + 1e-8);
      res.max_abs_error = std::max(res.max_abs_error, abs_err);
      worst = std::max(worst, rel);
    }
    res.per_tensor[work.info(t).name] = worst;
    res.max_rel_error = std::max(res.max_rel_error, worst);
  }
  return res;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::ShapeMismatch, "spearman: sizes differ");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

NetConfig sweep_net_config(const SweepConfig& sweep, int width) {
  if (sweep.widths.empty()) fail(ErrorCode::InvalidArgument, "sweep: widths must be nonempty");
  NetConfig c;
  if (sweep.parametrization == Parametrization::SP) {
    c.width = width;
    c.depth = sweep.depth;
    for (TransferGroup g : kAllTransferGroups) {
      c.hparams[g] = GroupHParams{sweep.base.sigma_b, sweep.base.eta_b, sweep.base.eps_b,
                                  sweep.base.lambda_b, true};
    }
  } else {
    const int base_width = *std::min_element(sweep.widths.begin(), sweep.widths.end());
    c = mup_config(width, sweep.depth, base_width, sweep.depth, sweep.base);
  }
  c.heads = sweep.heads;
  c.vocab = sweep.task.vocab;
  c.moe_experts = sweep.moe_experts;
  c.qk_norm = sweep.qk_norm;
  c.seed = sweep.seed;
  c.validate();
  return c;
}

WidthSeries step_stability_probe(const SweepConfig& sweep, int width) {
  Net net(sweep_net_config(sweep, width));
  const MarkovTask task(sweep.task);
  TrainOptions opt;
  opt.schedule = WSDSchedule{sweep.warmup_steps, 1.0, 0.1, 0};
  opt.steps = sweep.steps;
  opt.checkpoints = sweep.checkpoints;
  opt.probe = task.probe_batch(sweep.probe_sequences);
  opt.ablate_qk_norm = sweep.ablate_qk_norm;
  const TrainTrace trace = train(net, task, opt);
  WidthSeries series;
  series.width = width;
  series.diverged = trace.diverged;
  for (const auto& cp : trace.checkpoints) series.stats.push_back(*cp.coords);
  return series;
}

CoordCheckReport coord_check_sweep(const SweepConfig& sweep) {
  if (sweep.widths.empty()) fail(ErrorCode::InvalidArgument, "sweep: widths must be nonempty");
  for (int w : sweep.widths) sweep_net_config(sweep, w);
  CoordCheckReport report;
  report.config = sweep;
  report.widths.resize(sweep.widths.size());
  parallel_for(sweep.widths.size(), [&](std::size_t i) {
    report.widths[i] = step_stability_probe(sweep, sweep.widths[i]);
  });
  std::set<int> steps(sweep.checkpoints.begin(), sweep.checkpoints.end());
  for (int step : steps) {
    std::vector<double> w, se, sa, sl;
    for (const auto& series : report.widths) {
      for (const auto& s : series.stats) {
        if (s.step != step) continue;
        w.push_back(series.width);
        se.push_back(s.std_embed);
        sa.push_back(s.std_attn_logits);
        sl.push_back(s.std_logits);
      }
    }
    if (w.empty()) continue;
    auto ratio = [](const std::vector<double>& v) {
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      if (*hi == 0.0) return 1.0;
      return *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
    };
    TrendSummary t;
    t.step = step;
    t.rho_embed = spearman(w, se);
    t.rho_attn_logits = spearman(w, sa);
    t.rho_logits = spearman(w, sl);
    t.ratio_embed = ratio(se);
    t.ratio_attn_logits = ratio(sa);
    t.ratio_logits = ratio(sl);
    report.trends.push_back(t);
  }
  for (const auto& series : report.widths) report.partial = report.partial || series.diverged;
  return report;
}

CoordCheckReport coord_check_with_steps(const SweepConfig& sweep) {
  CoordCheckReport report = coord_check_sweep(sweep);
  const auto smallest = std::min_element(
      report.widths.begin(), report.widths.end(),
      [](const WidthSeries& a, const WidthSeries& b) { return a.width < b.width; });
  const auto largest = std::max_element(
      report.widths.begin(), report.widths.end(),
      [](const WidthSeries& a, const WidthSeries& b) { return a.width < b.width; });
  report.step_series = *smallest;
  const auto& stats = smallest->stats;
  if (stats.empty() || largest->stats.empty()) return report;
  const CoordStats& last = stats.back();
  // Checkpoint closest to a tenth of the final step, excluding step 0.
  const CoordStats* early = nullptr;
  for (const auto& s : stats) {
    if (s.step == 0 || s.step > last.step) continue;
    if (!early || std::abs(std::log(10.0 * s.step / last.step)) <
                      std::abs(std::log(10.0 * early->step / last.step))) {
      early = &s;
    }
  }
  const CoordStats* wide = nullptr;
  for (const auto& s : largest->stats) {
    if (s.step == last.step) wide = &s;
  }
  if (!early || !wide || early == &last) return report;
  auto growth = [](double num, double den) {
    return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
  };
  auto site = [&](const char* name, double CoordStats::*field) {
    const double by_steps = growth(last.*field, early->*field);
    const double by_width = growth(wide->*field, last.*field);
    report.step_vs_width_growth[name] = by_steps / by_width;
  };
  site("embed", &CoordStats::std_embed);
  site("attn_logits", &CoordStats::std_attn_logits);
  site("logits", &CoordStats::std_logits);
  return report;
}

nlohmann::json to_json(const TrainTrace& trace) {
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& cp : trace.checkpoints) {
    nlohmann::json c = {{"step", cp.step},
                        {"update_rms", cp.update_rms},
                        {"update_rms_by_layer", cp.update_rms_by_layer}};
    c["coords"] = cp.coords ? stats_json(*cp.coords) : nlohmann::json(nullptr);
    if (cp.snapshot) {
      std::string bytes;
      for (const auto& m : *cp.snapshot) {
        bytes.append(reinterpret_cast<const char*>(m.data()),
                     static_cast<std::size_t>(m.size()) * sizeof(double));
      }
      c["snapshot_digest"] = digest_hex(bytes);
    }
    cps.push_back(std::move(c));
  }
  nlohmann::json losses = nlohmann::json::array();
  for (double l : trace.losses) losses.push_back(finite_or_null(l));
  return {{"kind", "train_trace"},
          {"tensor_names", trace.tensor_names},
          {"hidden_tensor", trace.hidden_tensor},
          {"losses", losses},
          {"checkpoints", cps},
          {"diverged", trace.diverged},
          {"diverged_at", trace.diverged_at}};
}

nlohmann::json to_json(const CoordCheckReport& report) {
  nlohmann::json widths = nlohmann::json::array();
  for (const auto& w : report.widths) widths.push_back(series_json(w));
  nlohmann::json trends = nlohmann::json::array();
  for (const auto& t : report.trends) {
    trends.push_back({{"step", t.step},
                      {"rho_embed", optional_number(t.rho_embed)},
                      {"rho_attn_logits", optional_number(t.rho_attn_logits)},
                      {"rho_logits", optional_number(t.rho_logits)},
                      {"ratio_embed", finite_or_null(t.ratio_embed)},
                      {"ratio_attn_logits", finite_or_null(t.ratio_attn_logits)},
                      {"ratio_logits", finite_or_null(t.ratio_logits)}});
  }
  nlohmann::json growth = nlohmann::json::object();
  for (const auto& [k, v] : report.step_vs_width_growth) growth[k] = finite_or_null(v);
  return {{"kind", "coord_check"},
          {"config", to_json(report.config)},
          {"widths", widths},
          {"trends", trends},
          {"partial", report.partial},
          {"step_series",
           report.step_series ? series_json(*report.step_series) : nlohmann::json(nullptr)},
          {"step_vs_width_growth", growth}};
}

nlohmann::json to_json(const NetConfig& c) {
  return {{"kind", "net_config"},
          {"width", c.width},
          {"depth", c.depth},
          {"heads", c.heads},
          {"vocab", c.vocab},
          {"mlp_ratio", c.mlp_ratio},
          {"moe_experts", c.moe_experts},
          {"qk_norm", c.qk_norm},
          {"parametrization", std::string(to_string(c.parametrization))},
          {"residual_mult", c.residual_mult},
          {"hparams", to_json(c.hparams)},
          {"seed", c.seed}};
}

NetConfig net_config_from_json(const nlohmann::json& j) {
  try {
    NetConfig c;
    c.width = j.value("width", c.width);
    c.depth = j.value("depth", c.depth);
    c.heads = j.value("heads", c.heads);
    c.vocab = j.value("vocab", c.vocab);
    c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
    c.moe_experts = j.value("moe_experts", c.moe_experts);
    c.qk_norm = j.value("qk_norm", c.qk_norm);
    c.parametrization = parametrization_from_string(j.value("parametrization", "sp"));
    c.residual_mult = j.value("residual_mult", c.residual_mult);
    c.seed = j.value("seed", c.seed);
    for (const auto& [name, h] : j.at("hparams").items()) {
      c.hparams[transfer_group_from_string(name)] =
          GroupHParams{h.at("init_std").get<double>(), h.at("lr").get<double>(),
                       h.at("eps").get<double>(), h.at("wd").get<double>(),
                       h.value("applicable", true)};
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("net config: ") + e.what());
  }
}

nlohmann::json to_json(const SweepConfig& s) {
  return {{"kind", "sweep_config"},
          {"widths", s.widths},
          {"depth", s.depth},
          {"heads", s.heads},
          {"moe_experts", s.moe_experts},
          {"qk_norm", s.qk_norm},
          {"ablate_qk_norm", s.ablate_qk_norm},
          {"parametrization", std::string(to_string(s.parametrization))},
          {"base",
           {{"eta_b", s.base.eta_b},
            {"sigma_b", s.base.sigma_b},
            {"eps_b", s.base.eps_b},
            {"lambda_b", s.base.lambda_b}}},
          {"task",
           {{"vocab", s.task.vocab},
            {"seq_len", s.task.seq_len},
            {"batch", s.task.batch},
            {"branching", s.task.branching},
            {"seed", s.task.seed}}},
          {"probe_sequences", s.probe_sequences},
          {"steps", s.steps},
          {"warmup_steps", s.warmup_steps},
          {"checkpoints", s.checkpoints},
          {"seed", s.seed}};
}

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  try {
    SweepConfig s;
    s.widths = j.value("widths", s.widths);
    s.depth = j.value("depth", s.depth);
    s.heads = j.value("heads", s.heads);
    s.moe_experts = j.value("moe_experts", s.moe_experts);
    s.qk_norm = j.value("qk_norm", s.qk_norm);
    s.ablate_qk_norm = j.value("ablate_qk_norm", s.ablate_qk_norm);
    s.parametrization = parametrization_from_string(j.value("parametrization", "sp"));
    if (j.contains("base")) {
      const auto& b = j["base"];
      s.base.eta_b = b.value("eta_b", s.base.eta_b);
      s.base.sigma_b = b.value("sigma_b", s.base.sigma_b);
      s.base.eps_b = b.value("eps_b", s.base.eps_b);
      s.base.lambda_b = b.value("lambda_b", s.base.lambda_b);
    }
    if (j.contains("task")) {
      const auto& t = j["task"];
      s.task.vocab = t.value("vocab", s.task.vocab);
      s.task.seq_len = t.value("seq_len", s.task.seq_len);
      s.task.batch = t.value("batch", s.task.batch);
      s.task.branching = t.value("branching", s.task.branching);
      s.task.seed = t.value("seed", s.task.seed);
    }
    s.probe_sequences = j.value("probe_sequences", s.probe_sequences);
    s.steps = j.value("steps", s.steps);
    s.warmup_steps = j.value("warmup_steps", s.warmup_steps);
    s.checkpoints = j.value("checkpoints", s.checkpoints);
    s.seed = j.value("seed", s.seed);
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("sweep config: ") + e.what());
  }
}

}  // namespace lrscale::micro
