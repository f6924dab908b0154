#include "sqzsim/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "json.hpp"

namespace sqzsim {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
    const fs::path tmp = dir / (target.filename().string() + ".tmp." +
                                std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    // invalid_argument so a missing input file maps to the input-error exit
    // code, not a generic failure.
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["command_line"] = command_line;
    j["config_hash_fnv1a64"] = config_hash;
    j["seeds"] = seeds;
    j["version"] = version;
    j["timestamp_utc"] = timestamp;
    return j.dump(2) + "\n";
}

RunManifest make_manifest(const std::string& command_line, const std::string& config_bytes,
                          std::vector<std::uint64_t> seeds) {
    RunManifest m;
    m.command_line = command_line;
    m.config_hash = config_bytes.empty() ? "" : fnv1a64_hex(config_bytes);
    m.seeds = std::move(seeds);
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    m.timestamp = buf;
    return m;
}

void write_manifest(const RunManifest& m, const std::string& artifact_path) {
    write_file_atomic(artifact_path + ".manifest.json", m.to_json());
}

} // namespace sqzsim
