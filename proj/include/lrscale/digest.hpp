// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lrscale {

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// 16 lowercase hex digits of fnv1a64(bytes).
std::string digest_hex(std::string_view bytes);

}  // namespace lrscale
