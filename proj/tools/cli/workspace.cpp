// Copyright 2026 The lrscale Authors
// SPDX-License-Identifier: Apache-2.0

#include "workspace.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <unistd.h>

namespace fs = std::filesystem;

namespace lrscale_cli {

Workspace::Workspace(fs::path root) : root_(std::move(root)) {
  const fs::path cfg = root_ / "config.json";
  if (fs::exists(cfg)) {
    try {
      config_ = json::parse(read_file(cfg));
    } catch (const json::exception& e) {
      throw CliError(LRS_PARSE, cfg.string() + ": " + e.what());
    }
    if (!config_.is_object()) throw CliError(LRS_PARSE, cfg.string() + ": expected an object");
  }
}

void Workspace::ensure() const {
  std::error_code ec;
  fs::create_directories(artifacts_dir(), ec);
  if (!ec) fs::create_directories(reports_dir(), ec);
  if (ec) throw CliError(LRS_IO, "cannot create workspace at " + root_.string() + ": " + ec.message());
}

ArtifactRef Workspace::write_artifact(const json& artifact) const {
  const std::string kind = artifact.at("kind").get<std::string>();
  const std::string text = artifact.dump(2) + "\n";
  ArtifactRef ref;
  ref.digest = digest(text);
  ref.path = artifacts_dir() / (kind + "-" + ref.digest + ".json");
  ensure();
  if (fs::exists(ref.path) && read_file(ref.path) == text) {
    ref.cached = true;
    return ref;
  }
  write_file_atomic(ref.path, text);
  return ref;
}

std::optional<fs::path> Workspace::find_artifact(const std::string& kind,
                                                 const std::string& dig) const {
  const fs::path p = artifacts_dir() / (kind + "-" + dig + ".json");
  if (fs::exists(p)) return p;
  return std::nullopt;
}

fs::path Workspace::write_report(const std::string& stem, const std::string& ext,
                                 const std::string& text) const {
  ensure();
  const fs::path p = reports_dir() / (stem + "." + ext);
  if (!fs::exists(p) || read_file(p) != text) write_file_atomic(p, text);
  return p;
}

fs::path workspace_root(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("LRSCALE_WORKSPACE"); env && *env) return env;
  return ".lrscale";
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(LRS_IO, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_input(const std::string& path_or_dash) {
  if (path_or_dash.empty() || path_or_dash == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return read_file(path_or_dash);
}

json load_artifact(const std::string& path, const std::string& kind) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw CliError(LRS_PARSE, path + ": " + e.what());
  }
  const std::string got = j.is_object() ? j.value("kind", "") : "";
  if (got != kind) {
    throw CliError(LRS_INVALID_ARGUMENT, "artifact kind mismatch: " + path + " is '" + got +
                                             "', expected '" + kind + "'");
  }
  return j;
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out.flush()) throw CliError(LRS_IO, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw CliError(LRS_IO, "cannot write " + path.string());
  }
}

}  // namespace lrscale_cli
