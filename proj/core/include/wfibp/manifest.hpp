#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace wfibp::io {

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a over the file bytes, hex-encoded.
std::string content_hash(const std::string& path);

struct RunManifest {
  std::string config_json;  // resolved configuration
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;
  std::string version = kVersion;
  double wall_clock_seconds = 0.0;
  std::string timestamp;

  void write(const std::string& path) const;
  static RunManifest read(const std::string& path);
};

}  // namespace wfibp::io
