// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "lrscale/ingest.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "lrscale/error.hpp"

namespace lrscale {
namespace {

using nlohmann::json;

const std::set<std::string> kRecordFields = {
    "run_id", "model", "lr_global", "module_lrs", "schedule", "batch_tokens", "samples"};

// Errors raised while reading a record carry the offending field.
struct FieldError {
  std::string field;
  std::string message;
};

[[noreturn]] void field_error(const std::string& field, const std::string& message) {
  throw FieldError{field, message};
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) field_error(path + key, "missing");
  return *it;
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) field_error(path + key, "expected a number");
  return v.get<double>();
}

std::int64_t integer(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.2e18) {
      return static_cast<std::int64_t>(d);
    }
  }
  field_error(path + key, "expected an integer");
}

std::string string(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) field_error(path + key, "expected a string");
  return v.get<std::string>();
}

bool boolean(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_boolean()) field_error(path + key, "expected a boolean");
  return v.get<bool>();
}

ModelShape read_shape(const json& m) {
  if (!m.is_object()) field_error("model", "expected an object");
  ModelShape s;
  s.name = string(m, "name", "model.");
  s.total_params = number(m, "total_params", "model.");
  s.active_params = number(m, "active_params", "model.");
  s.hidden_size = integer(m, "hidden_size", "model.");
  s.num_layers = integer(m, "num_layers", "model.");
  s.attn_heads = integer(m, "attn_heads", "model.");
  s.kv_heads = integer(m, "kv_heads", "model.");
  s.intermediate_size = integer(m, "intermediate_size", "model.");
  s.moe = boolean(m, "moe", "model.");
  return s;
}

RunRecord read_record(const json& j) {
  if (!j.is_object()) field_error("", "record must be a JSON object");
  RunRecord run;
  run.run_id = string(j, "run_id", "");
  run.shape = read_shape(require(j, "model", ""));
  run.lr_global = number(j, "lr_global", "");
  if (auto it = j.find("module_lrs"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) field_error("module_lrs", "expected an object");
    ModuleLRs lrs;
    for (const auto& [key, value] : it->items()) {
      ModuleGroup g;
      try {
        g = module_group_from_string(key);
      } catch (const Error&) {
        field_error("module_lrs." + key, "unknown module group");
      }
      if (!value.is_number()) field_error("module_lrs." + key, "expected a number");
      lrs[g] = value.get<double>();
    }
    run.module_lrs = std::move(lrs);
  }
  const json& sched = require(j, "schedule", "");
  if (!sched.is_object()) field_error("schedule", "expected an object");
  run.schedule.warmup_steps = integer(sched, "warmup_steps", "schedule.");
  run.schedule.peak_lr = number(sched, "peak_lr", "schedule.");
  run.schedule.decay_fraction = number(sched, "decay_fraction", "schedule.");
  run.schedule.decay_steps = integer(sched, "decay_steps", "schedule.");
  run.batch_tokens = integer(j, "batch_tokens", "");
  const json& samples = require(j, "samples", "");
  if (!samples.is_array()) field_error("samples", "expected an array of [tokens, loss]");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const json& pair = samples[i];
    const std::string where = "samples[" + std::to_string(i) + "]";
    if (!pair.is_array() || pair.size() != 2) field_error(where, "expected [tokens, loss]");
    const json& t = pair[0];
    const json& l = pair[1];
    LossSample s;
    if (t.is_number_unsigned() || (t.is_number_integer() && t.get<std::int64_t>() >= 0)) {
      s.tokens = t.get<std::uint64_t>();
    } else if (t.is_number_float() && t.get<double>() >= 0.0 &&
               t.get<double>() == std::floor(t.get<double>()) && t.get<double>() < 1.8e19) {
      s.tokens = static_cast<std::uint64_t>(t.get<double>());
    } else {
      field_error("tokens", where + ": expected a nonnegative integer");
    }
    if (!l.is_number()) field_error("loss", where + ": expected a number");
    s.loss = l.get<double>();
    run.samples.push_back(s);
  }
  for (const auto& [key, value] : j.items()) {
    if (!kRecordFields.count(key)) run.other_hparams[key] = value;
  }
  try {
    run.validate();
  } catch (const Error& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(": ");
    std::string field = colon == std::string::npos ? "" : msg.substr(0, colon);
    // "model.kv_heads", "loss", "tokens", ...
    field_error(field, colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  return run;
}

}  // namespace

RunRecord run_from_json(const json& record) {
  try {
    return read_record(record);
  } catch (const FieldError& e) {
    fail(ErrorCode::Parse, (e.field.empty() ? "" : e.field + ": ") + e.message);
  }
}

ParseResult parse_runs(std::istream& in) {
  ParseResult result;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      result.rejected.push_back({line_no, "", std::string("malformed JSON: ") + e.what()});
      continue;
    }
    try {
      RunRecord run = read_record(j);
      if (!seen.insert(run.run_id).second) {
        result.rejected.push_back({line_no, "run_id", "duplicate run_id '" + run.run_id + "'"});
        continue;
      }
      result.runs.push_back(std::move(run));
    } catch (const FieldError& e) {
      result.rejected.push_back({line_no, e.field, e.message});
    }
  }
  return result;
}

ParseResult parse_runs(const std::string& text) {
  std::istringstream in(text);
  return parse_runs(in);
}

json to_json(const ModelShape& s) {
  return {{"name", s.name},
          {"total_params", s.total_params},
          {"active_params", s.active_params},
          {"hidden_size", s.hidden_size},
          {"num_layers", s.num_layers},
          {"attn_heads", s.attn_heads},
          {"kv_heads", s.kv_heads},
          {"intermediate_size", s.intermediate_size},
          {"moe", s.moe}};
}

ModelShape shape_from_json(const json& j) {
  try {
    ModelShape s = read_shape(j);
    s.validate();
    return s;
  } catch (const FieldError& e) {
    fail(ErrorCode::Parse, e.field + ": " + e.message);
  }
}

json to_json(const RunRecord& run) {
  json j = run.other_hparams.is_object() ? run.other_hparams : json::object();
  j["run_id"] = run.run_id;
  j["model"] = to_json(run.shape);
  j["lr_global"] = run.lr_global;
  if (run.module_lrs) {
    json lrs = json::object();
    for (const auto& [g, lr] : *run.module_lrs) lrs[std::string(to_string(g))] = lr;
    j["module_lrs"] = lrs;
  }
  j["schedule"] = {{"warmup_steps", run.schedule.warmup_steps},
                   {"peak_lr", run.schedule.peak_lr},
                   {"decay_fraction", run.schedule.decay_fraction},
                   {"decay_steps", run.schedule.decay_steps}};
  j["batch_tokens"] = run.batch_tokens;
  json samples = json::array();
  for (const auto& s : run.samples) samples.push_back({s.tokens, s.loss});
  j["samples"] = samples;
  return j;
}

std::string serialize_runs(const std::vector<RunRecord>& runs) {
  std::string out;
  for (const auto& r : runs) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

RunStore::RunStore(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  if (!in) fail(ErrorCode::Io, "cannot read run store " + path_.string());
  ParseResult parsed = parse_runs(in);
  if (!parsed.ok()) {
    const Diagnostic& d = parsed.rejected.front();
    fail(ErrorCode::Parse, path_.string() + ":" + std::to_string(d.line) + ": " +
                               (d.field.empty() ? "" : d.field + ": ") + d.message);
  }
  runs_ = std::move(parsed.runs);
  for (const auto& r : runs_) ids_.insert(r.run_id);
}

void RunStore::append(const std::vector<RunRecord>& runs) {
  std::set<std::string> batch;
  for (const auto& r : runs) {
    r.validate();
    if (ids_.count(r.run_id) || !batch.insert(r.run_id).second) {
      fail(ErrorCode::Duplicate, "run_id '" + r.run_id + "' already stored");
    }
  }
  if (!path_.empty()) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write run store " + path_.string());
    out << serialize_runs(runs);
    out.flush();
    if (!out) fail(ErrorCode::Io, "write failed for run store " + path_.string());
  }
  for (const auto& r : runs) {
    ids_.insert(r.run_id);
    runs_.push_back(r);
  }
}

const RunRecord* RunStore::find(const std::string& run_id) const {
  for (const auto& r : runs_) {
    if (r.run_id == run_id) return &r;
  }
  return nullptr;
}

}  // namespace lrscale
