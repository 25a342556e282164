// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "api.hpp"

namespace lrscale_cli {

struct ArtifactRef {
  std::filesystem::path path;
  std::string digest;
  bool cached = false;  // an identical artifact already existed
};

// Layout under the root:
//   runs.jsonl             append-only run store
//   artifacts/<kind>-<digest>.json
//   reports/<kind>-<digest>.<csv|svg>
//   config.json            optional defaults
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path runs_path() const { return root_ / "runs.jsonl"; }
  std::filesystem::path artifacts_dir() const { return root_ / "artifacts"; }
  std::filesystem::path reports_dir() const { return root_ / "reports"; }

  // Contents of config.json, or an empty object.
  const json& config() const { return config_; }

  // Creates the directories; only writing commands call this.
  void ensure() const;

  // Writes `artifact` (which must carry "kind") unless a byte-identical copy
  // is already present.
  ArtifactRef write_artifact(const json& artifact) const;
  std::optional<std::filesystem::path> find_artifact(const std::string& kind,
                                                     const std::string& digest) const;
  // Writes reports/<stem>.<ext>; identical content is left untouched.
  std::filesystem::path write_report(const std::string& stem, const std::string& ext,
                                     const std::string& text) const;

 private:
  std::filesystem::path root_;
  json config_ = json::object();
};

std::filesystem::path workspace_root(const std::string& flag);

std::string read_file(const std::filesystem::path& path);
std::string read_input(const std::string& path_or_dash);
// Loads a JSON artifact and checks its kind.
json load_artifact(const std::string& path, const std::string& kind);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace lrscale_cli
