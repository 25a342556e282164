// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "lrscale/error.hpp"
#include "lrscale/types.hpp"

namespace lrscale::testing {

inline ModelShape small_shape(std::string name = "tiny") {
  return {std::move(name), 1.2e9, 3e8, 1024, 12, 16, 4, 2816, true};
}

inline RunRecord make_run(std::string id, std::vector<LossSample> samples, double lr = 1e-3) {
  RunRecord r;
  r.run_id = std::move(id);
  r.shape = small_shape();
  r.lr_global = lr;
  r.schedule = {1000, lr, 0.1, 0};
  r.batch_tokens = 4 * 1024 * 1024;
  r.samples = std::move(samples);
  return r;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

// Independent reference for the loss-vs-data family.
inline double power_law(double L0, double A, double gamma, double D) {
  return L0 + A * std::pow(D, -gamma);
}

// Checks that `body` throws lrscale::Error with `code`.
#define CHECK_ERROR_CODE(expr, ecode)                                  \
  do {                                                                 \
    bool threw_ = false;                                               \
    try {                                                              \
      (void)(expr);                                                    \
    } catch (const ::lrscale::Error& e_) {                             \
      threw_ = true;                                                   \
      CHECK_MESSAGE(e_.code() == (ecode), e_.what());                  \
    }                                                                  \
    CHECK_MESSAGE(threw_, "expected an lrscale::Error from " #expr);   \
  } while (0)

}  // namespace lrscale::testing
