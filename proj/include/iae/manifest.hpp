#pragma once

// Run manifest, `manifest.json` in every run directory:
//
//   {
//     "format": "iae-manifest", "version": 1,
//     "command": "train",
//     "config": "<resolved key-value config text>",
//     "inputs":    { "<path as given>": "<sha256>" },
//     "artifacts": { "<path relative to the run dir>": "<sha256>" }
//   }

#include <filesystem>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"

namespace iae {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct Manifest {
  std::string command;
  std::string config;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> artifacts;

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& run_dir) const;
  static Manifest load(const std::filesystem::path& path);
};

// Hashes each file (paths relative to `run_dir`) into manifest.artifacts.
void record_artifacts(Manifest& manifest, const std::filesystem::path& run_dir,
                      std::initializer_list<std::filesystem::path> files);
void record_input(Manifest& manifest, const std::filesystem::path& path);

}  // namespace iae
