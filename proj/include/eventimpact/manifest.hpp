#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "eventimpact/errors.hpp"
#include "eventimpact/hash.hpp"
#include "eventimpact/version.hpp"

namespace eventimpact {

inline std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string() + " for hashing");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return hash_hex(fnv1a64(buf.str()));
}

struct ManifestEntry {
  std::string path;  // outputs: relative to the run directory
  std::string hash;  // fnv1a64 of file contents, hex
};

/// Machine-readable record of one pipeline stage: what went in, what came
/// out, and under which config/seed/software. Downstream stages verify
/// their inputs against the upstream manifest before running.
struct RunManifest {
  std::string stage;
  std::string version = kVersion;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<ManifestEntry> inputs;
  std::vector<ManifestEntry> outputs;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["stage"] = stage;
    j["version"] = version;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    auto entries = [](const std::vector<ManifestEntry>& v) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& e : v) {
        arr.push_back({{"path", e.path}, {"hash", e.hash}});
      }
      return arr;
    };
    j["inputs"] = entries(inputs);
    j["outputs"] = entries(outputs);
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_hash = j.at("config_hash").get<std::string>();
    auto entries = [](const nlohmann::json& arr) {
      std::vector<ManifestEntry> v;
      for (const auto& e : arr) {
        v.push_back({e.at("path").get<std::string>(),
                     e.at("hash").get<std::string>()});
      }
      return v;
    };
    m.inputs = entries(j.at("inputs"));
    m.outputs = entries(j.at("outputs"));
    return m;
  }
};

inline std::filesystem::path manifest_path(
    const std::filesystem::path& out_dir, const std::string& stage) {
  return out_dir / (stage + "_manifest.json");
}

inline void write_manifest(const RunManifest& m,
                           const std::filesystem::path& out_dir) {
  std::ofstream out(manifest_path(out_dir, m.stage), std::ios::binary);
  if (!out) {
    throw DataError("cannot write manifest for stage " + m.stage);
  }
  out << m.to_json().dump(2) << "\n";
}

/// Loads the named stage's manifest and re-hashes every recorded output.
/// Absence or any hash mismatch means the upstream stage has not run (or
/// ran against different inputs) and the caller must not proceed.
inline RunManifest require_stage(const std::filesystem::path& out_dir,
                                 const std::string& stage) {
  std::filesystem::path mp = manifest_path(out_dir, stage);
  std::ifstream in(mp, std::ios::binary);
  if (!in) {
    throw MissingStageError("stage '" + stage +
                            "' has not produced a manifest at " + mp.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw MissingStageError("manifest for stage '" + stage +
                            "' is unreadable: " + e.what());
  }
  RunManifest m = RunManifest::from_json(j);
  for (const auto& e : m.outputs) {
    std::filesystem::path p = out_dir / e.path;
    if (!std::filesystem::exists(p)) {
      throw MissingStageError("stage '" + stage + "' output missing: " +
                              e.path);
    }
    if (hash_file(p) != e.hash) {
      throw MissingStageError("stage '" + stage + "' output changed since "
                              "its manifest was written: " + e.path);
    }
  }
  return m;
}

}  // namespace eventimpact
