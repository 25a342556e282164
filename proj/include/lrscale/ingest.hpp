// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run-store records: parsing, validation, serialization and the append-only
// on-disk store.

#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lrscale/types.hpp"

namespace lrscale {

struct Diagnostic {
  std::size_t line = 0;  // 1-based
  std::string field;     // offending field, empty for syntax errors
  std::string message;
};

struct ParseResult {
  std::vector<RunRecord> runs;
  std::vector<Diagnostic> rejected;

  bool ok() const noexcept { return rejected.empty(); }
};

/// Parses one record per non-blank line. Records that fail validation are
/// reported with their line number and skipped; order is preserved. A run_id
/// seen twice in the stream rejects the later record.
ParseResult parse_runs(std::istream& in);
ParseResult parse_runs(const std::string& text);

RunRecord run_from_json(const nlohmann::json& record);
nlohmann::json to_json(const RunRecord& run);
nlohmann::json to_json(const ModelShape& shape);
ModelShape shape_from_json(const nlohmann::json& j);

/// One compact JSON record per run, newline-terminated.
std::string serialize_runs(const std::vector<RunRecord>& runs);

/// Append-only run store backed by a JSON-lines file. An empty path keeps
/// the store in memory.
class RunStore {
 public:
  RunStore() = default;
  explicit RunStore(std::filesystem::path path);

  /// Adds `runs` atomically: either every run is appended or none is.
  /// Throws Duplicate when a run_id is already stored.
  void append(const std::vector<RunRecord>& runs);

  const std::vector<RunRecord>& runs() const noexcept { return runs_; }
  std::size_t size() const noexcept { return runs_.size(); }
  const RunRecord* find(const std::string& run_id) const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<RunRecord> runs_;
  std::set<std::string> ids_;
};

}  // namespace lrscale
