#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace mfrbp::eval {

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Run description written next to the results. No timestamps or host
/// details, so identical inputs give an identical file.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_sha256;
  std::string checkpoint_sha256;
  std::string data_sha256;
  /// Extra string fields, e.g. experiment id or pass count.
  std::map<std::string, std::string> fields;
  /// Output file name -> SHA-256 of its contents.
  std::map<std::string, std::string> outputs;
};

std::string manifest_json(const RunManifest& manifest);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Hash over every regular file in `dir` (sorted relative paths and
/// contents); used to fingerprint a dataset directory.
std::string sha256_directory(const std::filesystem::path& dir);

}  // namespace mfrbp::eval
