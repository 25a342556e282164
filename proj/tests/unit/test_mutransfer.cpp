// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "helpers.hpp"
#include "lrscale/mutransfer.hpp"
#include "lrscale/oracle.hpp"

using namespace lrscale;
using namespace lrscale::testing;

namespace {

using TG = TransferGroup;

ModelShape dims(std::string name, int hidden, int layers) {
  ModelShape s = small_shape(std::move(name));
  s.hidden_size = hidden;
  s.num_layers = layers;
  s.attn_heads = 1;
  s.kv_heads = 1;
  return s;
}

struct Expected {
  double init_var, lr, eps, wd;
};

// Transfer rules written out group by group, evaluated directly in doubles.
Expected rule(TG g, double mN, double mL, double mD, double a, bool cp) {
  const double sD = std::sqrt(mD), iD = 1.0 / std::sqrt(mD);
  const double lr_depth = cp ? std::pow(mL, a - 1.0) : 1.0;
  const double eps_depth = cp ? std::pow(mL, -a) : 1.0;
  switch (g) {
    case TG::InputEmb: return {1.0, iD, sD / mN, iD};
    case TG::HiddenWeights: return {1.0 / mN, lr_depth * iD / mN, eps_depth * sD / mN, mN * iD};
    case TG::HiddenBiasesNorms: return {1.0, lr_depth * iD, eps_depth * sD / mN, iD};
    case TG::UnembLN: return {1.0, iD, sD, iD};
    case TG::UnembWeights: return {1.0 / (mN * mN), iD / mN, sD, mN * iD};
    case TG::QKNorms: return {1.0, lr_depth * iD, eps_depth * sD, iD};
  }
  return {};
}

void check_against_rules(const TransferPlan& p, double tol) {
  const double mN = p.ratios.m_N.value(), mL = p.ratios.m_L.value(), mD = p.ratios.m_D.value();
  const bool cp = p.variant == TransferVariant::CompleteP;
  for (TG g : kAllTransferGroups) {
    const Expected e = rule(g, mN, mL, mD, p.alpha_depth, cp);
    const auto& m = p.at(g);
    INFO(to_string(g));
    CHECK(rel_err(m.init_var.value, e.init_var) < tol);
    CHECK(rel_err(m.lr.value, e.lr) < tol);
    CHECK(rel_err(m.eps.value, e.eps) < tol);
    CHECK(rel_err(m.wd.value, e.wd) < tol);
  }
  CHECK(rel_err(p.residual_mult(), cp ? std::pow(mL, -p.alpha_depth) : 1.0) < tol);
}

ShapeRatios random_ratios(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> w(1, 64), d(1, 40), t(1, 500);
  return {Ratio(w(rng) * 64, w(rng) * 64), Ratio(d(rng), d(rng)),
          Ratio(t(rng) * 1'000'000'000LL, t(rng) * 1'000'000'000LL)};
}

}  // namespace

TEST_SUITE("mutransfer") {

TEST_CASE("Ratio is reduced and exact") {
  const Ratio r(30, 18);
  CHECK(r.num() == 5);
  CHECK(r.den() == 3);
  CHECK(Ratio(2, 3) * Ratio(3, 2) == Ratio(1, 1));
  CHECK(Ratio(500'000'000'000LL, 200'000'000'000LL) == Ratio(5, 2));
  CHECK_ERROR_CODE(Ratio(0, 1), ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(Ratio(1, -2), ErrorCode::InvalidArgument);
}

TEST_CASE("shape ratios") {
  const auto proxy = *oracle::builtin_shape("2b-proxy");
  const auto target = *oracle::builtin_shape("12b");
  const ShapeRatios r = shape_ratios(proxy, target, 200'000'000'000ULL, 500'000'000'000ULL);
  CHECK(r.m_N == Ratio(2, 1));
  CHECK(r.m_L == Ratio(5, 3));
  CHECK(r.m_D == Ratio(5, 2));
  const ShapeRatios id = shape_ratios(proxy, proxy, 7, 7);
  CHECK(id.m_N == Ratio(1, 1));
  CHECK(id.m_L == Ratio(1, 1));
  CHECK(id.m_D == Ratio(1, 1));
  CHECK_ERROR_CODE(shape_ratios(proxy, target, 0, 1), ErrorCode::InvalidArgument);
}

TEST_CASE("residual multiplier") {
  CHECK(residual_multiplier(5.0 / 3.0, 1.0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(residual_multiplier(7.3, 0.0) == 1.0);
  CHECK(residual_multiplier(1.0, 1.0) == 1.0);
  CHECK_ERROR_CODE(residual_multiplier(0.0, 1.0), ErrorCode::InvalidArgument);
}

TEST_CASE("identity plan has unit multipliers") {
  const auto s = *oracle::builtin_shape("4b");
  for (auto v : {TransferVariant::MuP, TransferVariant::CompleteP}) {
    const TransferPlan p = make_transfer_plan(s, s, 100, 100, 1.0, v);
    for (TG g : kAllTransferGroups) {
      const auto& m = p.at(g);
      CHECK(m.init_var.value == 1.0);
      CHECK(m.lr.value == 1.0);
      CHECK(m.eps.value == 1.0);
      CHECK(m.wd.value == 1.0);
    }
    CHECK(p.residual_mult() == 1.0);
  }
}

TEST_CASE("hand-derived 2B proxy to 12B example") {
  const TransferPlan p =
      make_transfer_plan(*oracle::builtin_shape("2b-proxy"), *oracle::builtin_shape("12b"),
                         200'000'000'000ULL, 500'000'000'000ULL, 1.0, TransferVariant::CompleteP);
  const auto& h = p.at(TG::HiddenWeights);
  CHECK(h.lr.value == doctest::Approx(0.316227766).epsilon(1e-8));
  CHECK(h.init_var.value == 0.5);
  CHECK(p.at(TG::UnembWeights).init_var.value == 0.25);
  CHECK(p.residual_mult() == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(h.eps.value == doctest::Approx(0.474341649).epsilon(1e-8));
  CHECK(h.wd.value == doctest::Approx(1.264911064).epsilon(1e-8));
  CHECK(h.lr.exp_N == -1.0);
  CHECK(h.lr.exp_L == 0.0);
  CHECK(h.lr.exp_D == -0.5);
  check_against_rules(p, 1e-14);

  const AppliedHParams a = apply_plan(p, {5e-4, 0.02, 1e-8, 0.1, 200e9});
  CHECK(a.at(TG::HiddenWeights).init_std == doctest::Approx(0.0141421356).epsilon(1e-8));
  CHECK(a.at(TG::HiddenWeights).lr == doctest::Approx(1.5811e-4).epsilon(1e-4));
}

TEST_CASE("random plans follow the group rules") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> alpha(-1.0, 2.0);
  for (int t = 0; t < 300; ++t) {
    const auto v = t % 2 ? TransferVariant::MuP : TransferVariant::CompleteP;
    check_against_rules(make_transfer_plan(random_ratios(rng), alpha(rng), v), 1e-12);
  }
}

TEST_CASE("qk norms are not applicable under muP") {
  const auto r = ShapeRatios{Ratio(2, 1), Ratio(3, 1), Ratio(1, 1)};
  CHECK_FALSE(make_transfer_plan(r, 1.0, TransferVariant::MuP).at(TG::QKNorms).applicable);
  CHECK(make_transfer_plan(r, 1.0, TransferVariant::CompleteP).at(TG::QKNorms).applicable);
  const AppliedHParams a =
      apply_plan(make_transfer_plan(r, 1.0, TransferVariant::MuP), BaseHParams{});
  CHECK_FALSE(a.at(TG::QKNorms).applicable);
}

TEST_CASE("muP and Complete-P agree on width-only transfer") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    ShapeRatios r = random_ratios(rng);
    r.m_L = Ratio(1, 1);
    const auto a = make_transfer_plan(r, 1.0, TransferVariant::MuP);
    const auto b = make_transfer_plan(r, 1.0, TransferVariant::CompleteP);
    for (TG g : kAllTransferGroups) {
      if (g == TG::QKNorms) continue;
      CHECK(a.at(g).lr.value == b.at(g).lr.value);
      CHECK(a.at(g).eps.value == b.at(g).eps.value);
      CHECK(a.at(g).wd.value == b.at(g).wd.value);
      CHECK(a.at(g).init_var.value == b.at(g).init_var.value);
    }
    CHECK(a.residual_mult() == b.residual_mult());
  }
}

TEST_CASE("hidden wd and lr co-scale") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    const ShapeRatios r = random_ratios(rng);
    const double a = 0.25 * (t % 9);
    const auto p = make_transfer_plan(r, a, TransferVariant::CompleteP);
    const auto& h = p.at(TG::HiddenWeights);
    CHECK(rel_err(h.wd.value * h.lr.value,
                  std::pow(r.m_L.value(), a - 1.0) / r.m_D.value()) < 1e-12);
  }
}

TEST_CASE("log multipliers are linear in the log ratios") {
  const ShapeRatios r{Ratio(3, 1), Ratio(7, 2), Ratio(5, 4)};
  const auto p = make_transfer_plan(r, 1.0, TransferVariant::CompleteP);
  // central differences of ln(multiplier) in ln(m_X) recover the exponents
  auto at = [&](double n, double l, double d) {
    return make_transfer_plan(ShapeRatios{Ratio(std::llround(n * 1e6), 1'000'000),
                                          Ratio(std::llround(l * 1e6), 1'000'000),
                                          Ratio(std::llround(d * 1e6), 1'000'000)},
                              1.0, TransferVariant::CompleteP);
  };
  const double h = 0.01;
  const auto up = at(3 * std::exp(h), 3.5, 1.25), dn = at(3 * std::exp(-h), 3.5, 1.25);
  for (TG g : kAllTransferGroups) {
    const double slope = (std::log(up.at(g).lr.value) - std::log(dn.at(g).lr.value)) / (2 * h);
    CHECK(slope == doctest::Approx(p.at(g).lr.exp_N).epsilon(1e-4));
    const auto& m = p.at(g).eps;
    CHECK(rel_err(m.value, std::pow(3.0, m.exp_N) * std::pow(3.5, m.exp_L) *
                               std::pow(1.25, m.exp_D)) < 1e-13);
  }
}

TEST_CASE("composition equals the direct plan") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> w(1, 40), d(1, 48), tok(1, 1000);
  for (int t = 0; t < 1000; ++t) {
    const ModelShape A = dims("A", 64 * w(rng), d(rng));
    const ModelShape B = dims("B", 64 * w(rng), d(rng));
    const ModelShape C = dims("C", 64 * w(rng), d(rng));
    const std::uint64_t ta = tok(rng) * 1'000'000'000ULL, tb = tok(rng) * 1'000'000'000ULL,
                        tc = tok(rng) * 1'000'000'000ULL;
    const auto v = t % 2 ? TransferVariant::MuP : TransferVariant::CompleteP;
    const auto p1 = make_transfer_plan(A, B, ta, tb, 1.0, v);
    const auto p2 = make_transfer_plan(B, C, tb, tc, 1.0, v);
    const auto composed = compose_plans(p1, p2);
    const auto direct = make_transfer_plan(A, C, ta, tc, 1.0, v);
    CHECK(composed.ratios.m_N == direct.ratios.m_N);
    CHECK(composed.ratios.m_L == direct.ratios.m_L);
    CHECK(composed.ratios.m_D == direct.ratios.m_D);
    CHECK(composed.groups == direct.groups);
    CHECK(composed.residual == direct.residual);
    for (TG g : kAllTransferGroups) {
      CHECK(rel_err(composed.at(g).lr.value, p1.at(g).lr.value * p2.at(g).lr.value) < 1e-12);
      CHECK(rel_err(composed.at(g).init_var.value,
                    p1.at(g).init_var.value * p2.at(g).init_var.value) < 1e-12);
    }
    // identity on either side
    CHECK(compose_plans(p1, make_transfer_plan(B, B, tb, tb, 1.0, v)).groups == p1.groups);
    CHECK(compose_plans(make_transfer_plan(A, A, ta, ta, 1.0, v), p1).groups == p1.groups);
  }
}

TEST_CASE("two width doublings") {
  const auto p = make_transfer_plan(ShapeRatios{Ratio(2, 1), Ratio(1, 1), Ratio(1, 1)}, 1.0,
                                    TransferVariant::CompleteP);
  CHECK(compose_plans(p, p).at(TG::HiddenWeights).init_var.value == 0.25);
}

TEST_CASE("composition errors") {
  const ModelShape A = dims("A", 256, 4), B = dims("B", 512, 8), C = dims("C", 1024, 8);
  const auto p1 = make_transfer_plan(A, B, 10, 20, 1.0, TransferVariant::CompleteP);
  CHECK_ERROR_CODE(compose_plans(p1, make_transfer_plan(C, A, 20, 30, 1.0, TransferVariant::CompleteP)),
                   ErrorCode::ShapeMismatch);
  CHECK_ERROR_CODE(compose_plans(p1, make_transfer_plan(B, C, 25, 30, 1.0, TransferVariant::CompleteP)),
                   ErrorCode::ShapeMismatch);
  CHECK_ERROR_CODE(compose_plans(p1, make_transfer_plan(B, C, 20, 30, 0.5, TransferVariant::CompleteP)),
                   ErrorCode::InvalidArgument);
  CHECK_ERROR_CODE(compose_plans(p1, make_transfer_plan(B, C, 20, 30, 1.0, TransferVariant::MuP)),
                   ErrorCode::InvalidArgument);
}

TEST_CASE("apply_plan echoes base under identity and validates") {
  const auto s = dims("s", 512, 8);
  const BaseHParams base{3e-4, 0.02, 1e-8, 0.1, 1e9};
  const AppliedHParams a =
      apply_plan(make_transfer_plan(s, s, 5, 5, 1.0, TransferVariant::CompleteP), base);
  for (TG g : kAllTransferGroups) {
    CHECK(a.at(g).lr == base.eta_b);
    CHECK(a.at(g).init_std == base.sigma_b);
    CHECK(a.at(g).eps == base.eps_b);
    CHECK(a.at(g).wd == base.lambda_b);
  }
  BaseHParams bad = base;
  bad.eta_b = 0.0;
  CHECK_ERROR_CODE(apply_plan(make_transfer_plan(s, s, 5, 5, 1.0, TransferVariant::MuP), bad),
                   ErrorCode::InvalidArgument);
}

TEST_CASE("plan JSON round trip and table") {
  const TransferPlan p =
      make_transfer_plan(*oracle::builtin_shape("2b-proxy"), *oracle::builtin_shape("12b"),
                         200'000'000'000ULL, 500'000'000'000ULL, 1.0, TransferVariant::MuP);
  const auto j = to_json(p);
  CHECK(j.at("kind") == "transfer_plan");
  const TransferPlan back = transfer_plan_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.groups == p.groups);
  CHECK(back.ratios.m_L == p.ratios.m_L);
  CHECK(back.variant == p.variant);
  CHECK(back.tokens_target == p.tokens_target);
  const std::string table = render_table(p);
  CHECK(table.find("NA") != std::string::npos);
  CHECK_ERROR_CODE(transfer_plan_from_json(nlohmann::json{{"kind", "search_plan"}}),
                   ErrorCode::InvalidArgument);
}

}  // TEST_SUITE
