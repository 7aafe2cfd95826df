#include "wfibp/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace wfibp::io {

using nlohmann::json;

std::string content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("content_hash: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void RunManifest::write(const std::string& path) const {
  json j;
  j["config"] = json::parse(config_json);
  j["seed"] = seed;
  j["input_hashes"] = input_hashes;
  j["version"] = version;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["timestamp"] = timestamp;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  out << j.dump(2) << '\n';
}

RunManifest RunManifest::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open " + path);
  json j = json::parse(in);
  RunManifest m;
  m.config_json = j.at("config").dump(2);
  m.seed = j.at("seed").get<std::uint64_t>();
  m.input_hashes =
      j.at("input_hashes").get<std::map<std::string, std::string>>();
  m.version = j.at("version").get<std::string>();
  m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  m.timestamp = j.at("timestamp").get<std::string>();
  return m;
}

}  // namespace wfibp::io
