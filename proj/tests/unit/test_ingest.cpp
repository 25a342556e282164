// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "lrscale/fitcore.hpp"
#include "lrscale/ingest.hpp"

using namespace lrscale;
using namespace lrscale::testing;
using nlohmann::json;

namespace {

json record_json(const std::string& id) {
  return json::parse(R"({"run_id":")" + id + R"(",
    "model":{"name":"m","total_params":1.2e9,"active_params":3e8,"hidden_size":1024,
             "num_layers":12,"attn_heads":16,"kv_heads":4,"intermediate_size":2816,"moe":true},
    "lr_global":0.001,"schedule":{"warmup_steps":1000,"peak_lr":0.001,"decay_fraction":0.1,
    "decay_steps":0},"batch_tokens":4194304,
    "samples":[[10000000000,3.1],[20000000000,3.0],[30000000000,2.95]]})");
}

std::string lines(std::initializer_list<json> records) {
  std::string out;
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("lrscale-test-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("empty stream gives no runs") {
  const ParseResult r = parse_runs(std::string());
  CHECK(r.ok());
  CHECK(r.runs.empty());
  CHECK(parse_runs(std::string("\n  \n")).runs.empty());
}

TEST_CASE("one record with three samples") {
  const ParseResult r = parse_runs(lines({record_json("a")}));
  REQUIRE(r.ok());
  REQUIRE(r.runs.size() == 1);
  const RunRecord& run = r.runs[0];
  CHECK(run.run_id == "a");
  CHECK(run.shape.hidden_size == 1024);
  CHECK(run.shape.moe);
  REQUIRE(run.samples.size() == 3);
  CHECK(run.samples[0].tokens == 10'000'000'000ULL);
  CHECK(run.samples[1].tokens < run.samples[2].tokens);
  CHECK(run.samples[2].loss == 2.95);
}

TEST_CASE("negative loss is rejected naming the loss field") {
  json bad = record_json("b");
  bad["samples"][1][1] = -1.0;
  const ParseResult r = parse_runs(lines({record_json("a"), bad, record_json("c")}));
  REQUIRE(r.rejected.size() == 1);
  CHECK(r.rejected[0].line == 2);
  CHECK(r.rejected[0].field == "loss");
  // the valid neighbours survive, order preserved
  REQUIRE(r.runs.size() == 2);
  CHECK(r.runs[0].run_id == "a");
  CHECK(r.runs[1].run_id == "c");
}

TEST_CASE("each listed invariant is enforced") {
  struct Case {
    const char* name;
    std::function<void(json&)> mutate;
    std::string field;
  };
  const std::vector<Case> cases = {
      {"unordered tokens", [](json& j) { j["samples"][2][0] = 5; }, "tokens"},
      {"repeated tokens", [](json& j) { j["samples"][1][0] = j["samples"][0][0]; }, "tokens"},
      {"zero loss", [](json& j) { j["samples"][0][1] = 0.0; }, "loss"},
      {"negative tokens", [](json& j) { j["samples"][0][0] = -10; }, "tokens"},
      {"lr_global <= 0", [](json& j) { j["lr_global"] = 0.0; }, "lr_global"},
      {"module lr <= 0", [](json& j) { j["module_lrs"] = {{"hidden", -1e-3}}; }, "module_lrs.hidden"},
      {"unknown module group", [](json& j) { j["module_lrs"] = {{"attn", 1e-3}}; }, "module_lrs.attn"},
      {"active > total", [](json& j) { j["model"]["active_params"] = 2e9; }, "model.active_params"},
      {"heads % kv", [](json& j) { j["model"]["kv_heads"] = 5; }, "model.kv_heads"},
      {"zero layers", [](json& j) { j["model"]["num_layers"] = 0; }, "model.num_layers"},
      {"missing model", [](json& j) { j.erase("model"); }, "model"},
      {"bad decay fraction", [](json& j) { j["schedule"]["decay_fraction"] = 1.5; },
       "schedule.decay_fraction"},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    json j = record_json("x");
    c.mutate(j);
    const ParseResult r = parse_runs(lines({j}));
    REQUIRE(r.rejected.size() == 1);
    CHECK(r.rejected[0].field == c.field);
    CHECK(r.runs.empty());
  }
}

TEST_CASE("valid variations are accepted") {
  json j = record_json("ok");
  j["module_lrs"] = {{"embedding", 1e-3}, {"hidden", 5e-4}, {"router", 5e-4}, {"lm_head", 3e-4}};
  j["schedule"]["decay_fraction"] = 1.0;
  j["samples"] = json::array();  // allowed in the store, unusable for fitting
  const ParseResult r = parse_runs(lines({j}));
  CHECK(r.ok());
}

TEST_CASE("malformed JSON and duplicate ids carry line numbers") {
  const std::string text = lines({record_json("a")}) + "{not json\n" + lines({record_json("a")});
  const ParseResult r = parse_runs(text);
  REQUIRE(r.runs.size() == 1);
  REQUIRE(r.rejected.size() == 2);
  CHECK(r.rejected[0].line == 2);
  CHECK(r.rejected[0].field.empty());
  CHECK(r.rejected[1].line == 3);
  CHECK(r.rejected[1].field == "run_id");
}

TEST_CASE("serialize/parse round trip is lossless, unknown fields included") {
  json j = record_json("rt");
  j["module_lrs"] = {{"hidden", 3.0000000000000004e-4}};
  j["seed"] = 17;
  j["notes"] = {{"optimizer", "adamw"}, {"betas", {0.9, 0.95}}};
  RunRecord a = parse_runs(lines({j})).runs.at(0);
  RunRecord b = make_run("b", {{1, 1.0 / 3.0}, {2, 2.0 / 7.0}, {18446744073709551000ULL, 1e-300}});
  b.shape.name = "weird \"name\"\n";
  const std::vector<RunRecord> runs = {a, b};
  const std::string text = serialize_runs(runs);
  const ParseResult back = parse_runs(text);
  REQUIRE(back.ok());
  REQUIRE(back.runs.size() == 2);
  CHECK(back.runs[0] == a);
  CHECK(back.runs[1] == b);
  CHECK(back.runs[0].other_hparams.at("notes").at("optimizer") == "adamw");
  CHECK(serialize_runs(back.runs) == text);
}

TEST_CASE("run store is append-only and atomic") {
  TempDir dir;
  const auto path = dir.path / "runs.jsonl";
  {
    RunStore store(path);
    CHECK(store.size() == 0);
    store.append({make_run("a", {{1, 2.0}}), make_run("b", {{1, 2.0}})});
    CHECK(store.size() == 2);
    // one duplicate in the batch: nothing is appended
    CHECK_ERROR_CODE(store.append({make_run("c", {{1, 2.0}}), make_run("a", {{1, 3.0}})}),
                     ErrorCode::Duplicate);
    CHECK(store.size() == 2);
    CHECK(store.find("c") == nullptr);
    CHECK_ERROR_CODE(store.append({make_run("d", {{1, 2.0}}), make_run("d", {{2, 2.0}})}),
                     ErrorCode::Duplicate);
    CHECK(store.size() == 2);
  }
  RunStore reopened(path);
  REQUIRE(reopened.size() == 2);
  REQUIRE(reopened.find("b") != nullptr);
  CHECK(*reopened.find("b") == make_run("b", {{1, 2.0}}));
  reopened.append({make_run("c", {{1, 2.0}})});
  CHECK(RunStore(path).size() == 3);
}

TEST_CASE("in-memory store") {
  RunStore store{std::filesystem::path()};
  store.append({make_run("a", {{1, 2.0}})});
  CHECK(store.size() == 1);
  CHECK_ERROR_CODE(store.append({make_run("a", {{1, 2.0}})}), ErrorCode::Duplicate);
}

TEST_CASE("resample_curve") {
  PowerLawFit fit;
  fit.L0 = 2.0;
  fit.A = 5.0;
  fit.gamma = 0.5;
  fit.fit_range = {80e9, 220e9};

  SUBCASE("interval equal to the range gives the two endpoints") {
    const auto s = resample_curve(fit, 140e9, 80e9, 220e9);
    REQUIRE(s.size() == 2);
    CHECK(s[0].tokens == 80'000'000'000ULL);
    CHECK(s[1].tokens == 220'000'000'000ULL);
  }
  SUBCASE("hand evaluation at 1e9") {
    const auto s = resample_curve(fit, 1e9, 1e9, 2e9);
    CHECK(s[0].loss == doctest::Approx(2.000158113883).epsilon(1e-12));
  }
  SUBCASE("10e9 steps over [80e9, 220e9] give 15 samples") {
    const auto s = resample_curve(fit, 10e9, 80e9, 220e9);
    REQUIRE(s.size() == 15);
    for (std::size_t i = 1; i < s.size(); ++i) {
      CHECK(s[i].tokens == s[i - 1].tokens + 10'000'000'000ULL);
      CHECK(s[i].loss < s[i - 1].loss);
    }
  }
  SUBCASE("strict mode rejects ranges outside the trust region") {
    CHECK_NOTHROW(resample_curve(fit, 10e9, 80e9, 880e9, true));
    CHECK_ERROR_CODE(resample_curve(fit, 10e9, 80e9, 900e9, true), ErrorCode::OutOfTrustRegion);
    CHECK_ERROR_CODE(resample_curve(fit, 10e9, 10e9, 200e9, true), ErrorCode::OutOfTrustRegion);
    CHECK_NOTHROW(resample_curve(fit, 10e9, 10e9, 900e9, false));
  }
  SUBCASE("bad arguments") {
    CHECK_ERROR_CODE(resample_curve(fit, 0.0, 80e9, 220e9), ErrorCode::InvalidArgument);
    CHECK_ERROR_CODE(resample_curve(fit, 10e9, 220e9, 80e9), ErrorCode::InvalidArgument);
  }
}

}  // TEST_SUITE
