// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace actvae::cli {

/// SHA-1 over "blob <size>\0" + content, as git computes object ids.
std::string git_blob_sha1(const std::string& content);
std::string git_blob_sha1_file(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::ordered_json config;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  double wall_seconds = 0.0;
  bool complete = true;
  std::string error;

  /// Hashes every existing input and output file at call time.
  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& path) const;
};

/// `<artifact>.manifest.json`, or `<dir>/manifest.json` for directories.
std::filesystem::path manifest_path_for(const std::filesystem::path& artifact);

}  // namespace actvae::cli
