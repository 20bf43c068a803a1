#pragma once

// Run provenance: every command writes a manifest naming the command, the
// hash of its effective configuration, the seed, the library version and a
// digest of each input file. Outputs are pure functions of (inputs, seed);
// the manifest's timestamp records when, not what.

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "jointcal/version.hpp"

namespace jointcal::cli {

inline std::uint64_t fnv1a_update(std::uint64_t hash, const char* data,
                                  std::size_t size) {
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= static_cast<unsigned char>(data[i]);
        hash *= 1099511628211ULL;
    }
    return hash;
}

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;

inline std::string hex64(std::uint64_t value) {
    char buffer[20];
    std::snprintf(buffer, sizeof(buffer), "%016llx",
                  static_cast<unsigned long long>(value));
    return buffer;
}

inline std::string digest_bytes(const std::string& bytes) {
    return hex64(fnv1a_update(kFnvOffset, bytes.data(), bytes.size()));
}

inline std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read input file: " + path);
    std::uint64_t hash = kFnvOffset;
    char chunk[65536];
    while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0)
        hash = fnv1a_update(hash, chunk, static_cast<std::size_t>(in.gcount()));
    return hex64(hash);
}

struct RunManifest {
    std::string command;
    std::string config_hash;  // digest of the effective configuration JSON
    std::uint64_t seed = 0;
    std::string library_version = jointcal::version();
    std::map<std::string, std::string> input_digests;  // path -> digest
    std::string timestamp;  // ISO-8601 UTC, set at write time
};

inline std::string utc_now_iso8601() {
    std::time_t now = std::time(nullptr);
    std::tm split{};
    gmtime_r(&now, &split);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &split);
    return buffer;
}

inline void write_manifest(RunManifest manifest, const std::string& path) {
    manifest.timestamp = utc_now_iso8601();
    nlohmann::json j{{"command", manifest.command},
                     {"config_hash", manifest.config_hash},
                     {"seed", manifest.seed},
                     {"library_version", manifest.library_version},
                     {"input_digests", manifest.input_digests},
                     {"timestamp", manifest.timestamp}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open manifest file: " + path);
    out << j.dump(2) << '\n';
}

}  // namespace jointcal::cli
