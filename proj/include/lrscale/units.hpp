// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

namespace lrscale {

/// Parses a count literal such as "12e9", "500e9", "12B", "550M", "1.5T" or
/// "200k" into a raw value. Suffixes are case-insensitive: k=1e3, M=1e6,
/// B/G=1e9, T=1e12.
double parse_quantity(std::string_view text);

}  // namespace lrscale
