// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small C++ conveniences over the C interface. The CLI deliberately talks to
// the library only through lrscale.h.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "lrscale/lrscale.h"

namespace lrscale_cli {

using nlohmann::json;

class CliError : public std::runtime_error {
 public:
  CliError(lrs_status status, const std::string& message, json detail = nullptr)
      : std::runtime_error(message), status_(status), detail_(std::move(detail)) {}
  lrs_status status() const noexcept { return status_; }
  const json& detail() const noexcept { return detail_; }

 private:
  lrs_status status_;
  json detail_;
};

[[noreturn]] inline void usage_error(const std::string& message) {
  throw CliError(LRS_INVALID_ARGUMENT, message);
}

inline void check(lrs_status s) {
  if (s != LRS_OK) throw CliError(s, lrs_last_error());
}

// Takes ownership of a library string.
inline std::string take(char* s) {
  std::string out = s ? s : "";
  lrs_string_free(s);
  return out;
}

inline json take_json(char* s) { return json::parse(take(s)); }

inline double quantity(const std::string& text) {
  double v = 0.0;
  check(lrs_parse_quantity(text.c_str(), &v));
  return v;
}

inline std::string digest(const std::string& bytes) {
  char* hex = nullptr;
  check(lrs_digest(bytes.data(), bytes.size(), &hex));
  return take(hex);
}

// RAII holder for the opaque handles.
template <class T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  explicit Handle(T* p) : p_(p) {}
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p_); }
  T* get() const { return p_; }
  T** out() { return &p_; }

 private:
  T* p_ = nullptr;
};

using RunStore = Handle<lrs_run_store, lrs_run_store_close>;
using Law = Handle<lrs_law, lrs_law_free>;
using SearchPlan = Handle<lrs_search_plan, lrs_search_plan_free>;
using TransferPlan = Handle<lrs_transfer_plan, lrs_transfer_plan_free>;

}  // namespace lrscale_cli
