#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sqzsim {

inline constexpr char kToolVersion[] = "0.1.0";

// FNV-1a over the raw bytes. Used for the config hash in run manifests:
// stable for identical config bytes, cheap, and easy to reimplement when
// checking artifacts from outside.
std::uint64_t fnv1a64(const std::string& bytes);

// Hex form, 16 lowercase digits.
std::string fnv1a64_hex(const std::string& bytes);

// Writes to a temp file in the same directory, then renames over the
// target, so readers never observe a partial artifact.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Provenance record emitted next to every output artifact. Timestamps live
// only here; the artifacts themselves stay byte-reproducible.
struct RunManifest {
    std::string command_line;
    std::string config_hash; // fnv1a64_hex of the config bytes, empty if no config
    std::vector<std::uint64_t> seeds;
    std::string version = kToolVersion;
    std::string timestamp; // ISO 8601 UTC

    std::string to_json() const;
};

// Fills version and the current timestamp.
RunManifest make_manifest(const std::string& command_line, const std::string& config_bytes,
                          std::vector<std::uint64_t> seeds = {});

// Writes `m` to `artifact_path + ".manifest.json"`.
void write_manifest(const RunManifest& m, const std::string& artifact_path);

} // namespace sqzsim
