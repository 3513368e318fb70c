#pragma once

// Run directories and their manifests: every CLI command writes its outputs
// into runs/<timestamp>-<command>/ next to a manifest.json that lists each
// file with its SHA-256 digest.

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace rattleback {

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> parameters;
  std::string timestamp;  // ISO-8601, UTC, millisecond precision
  std::string tool_version;
  std::vector<std::string> output_files;  // relative to the run directory
  std::vector<std::string> checksums;     // lowercase hex SHA-256, same order
};

std::string tool_version();

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& file);

std::string sha256_bytes(const std::string& bytes);

/// 2026-10-16T17:00:55.123Z
std::string iso_timestamp(std::chrono::system_clock::time_point t);

/// $RATTLEBACK_RUNS_DIR if set and nonempty, else "runs".
std::filesystem::path runs_root();

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

/// A freshly created run directory. Files are written through it so the
/// manifest knows about them; finish() hashes them and writes manifest.json.
class RunDirectory {
 public:
  /// Creates <root>/<compact timestamp>-<command>, adding -2, -3, ... when
  /// two runs land on the same millisecond.
  RunDirectory(const std::string& command, std::map<std::string, std::string> parameters,
               const std::filesystem::path& root = runs_root());

  const std::filesystem::path& path() const { return dir_; }

  void write(const std::string& name, const std::string& content);

  /// Writes manifest.json and returns the manifest.
  RunManifest finish();

 private:
  RunManifest manifest_;
  std::filesystem::path dir_;
};

struct FileCheck {
  std::string file;
  std::string expected;
  std::string actual;  // empty when the file is missing
  bool ok() const { return !actual.empty() && actual == expected; }
};

/// Re-hashes every file listed in <run_dir>/manifest.json.
std::vector<FileCheck> verify_run(const std::filesystem::path& run_dir);

}  // namespace rattleback
