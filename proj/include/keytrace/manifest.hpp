#pragma once

// Run manifests: enough to rerun a command and to check its inputs.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "keylog.hpp"
#include "rng.hpp"

#ifndef KEYTRACE_VERSION
#define KEYTRACE_VERSION "0.0.0"
#endif

namespace keytrace {

inline constexpr std::string_view kManifestFile = "manifest.json";

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, std::string_view content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed for " + p.string());
}

inline std::string content_hash(std::string_view bytes) { return "fnv1a64:" + hex64(fnv1a(bytes)); }

inline std::string file_hash(const std::filesystem::path& p) { return content_hash(read_file(p)); }

struct Manifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
  std::map<std::string, std::string> inputs;  // path -> hash
  std::string version = KEYTRACE_VERSION;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json in = nlohmann::ordered_json::object();
    for (const auto& [path, hash] : inputs) in[path] = hash;
    return {{"command", command}, {"config", config}, {"seeds", seeds},
            {"inputs", in},       {"version", version}};
  }

  static Manifest from_json(const nlohmann::ordered_json& j) {
    Manifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.value("config", nlohmann::ordered_json::object());
    m.seeds = j.value("seeds", nlohmann::ordered_json::object());
    const auto inputs = j.value("inputs", nlohmann::ordered_json::object());
    for (const auto& [path, hash] : inputs.items()) m.inputs[path] = hash.get<std::string>();
    m.version = j.value("version", std::string());
    return m;
  }

  std::string dump() const { return to_json().dump(2) + "\n"; }

  /// Hash of the manifest text; identifies a run in reports.
  std::string hash() const { return content_hash(dump()); }

  void write(const std::filesystem::path& dir) const { write_file(dir / kManifestFile, dump()); }

  static Manifest read(const std::filesystem::path& file) {
    try {
      return from_json(nlohmann::ordered_json::parse(read_file(file)));
    } catch (const nlohmann::json::exception& e) {
      throw Error("bad manifest " + file.string() + ": " + e.what());
    }
  }
};

}  // namespace keytrace
