#pragma once

// Run manifests: every CLI run records its command, full parameter set,
// input checksums, tool version, timestamp, and output paths. Re-running
// with the same parameters reproduces all outputs bit-for-bit; the timestamp
// is the only field allowed to differ.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "softshadow/serialize.hpp"

namespace softshadow {

constexpr const char* kToolVersion = "0.1.0";

/// FNV-1a 64-bit over the file bytes, reported as fixed-width hex.
inline std::string fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open for checksum: " + path.string());
    uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize k = 0; k < in.gcount(); ++k) {
            h ^= static_cast<uint8_t>(buf[k]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

struct RunManifest {
    std::string command;
    json parameters = json::object();
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::vector<SkipRecord> skipped;

    json to_json() const {
        json j;
        j["schema_version"] = kSchemaVersion;
        j["tool"] = "softshadow";
        j["tool_version"] = kToolVersion;
        j["command"] = command;
        j["parameters"] = parameters;
        json ins = json::array();
        for (const auto& p : inputs)
            ins.push_back({{"path", p.string()}, {"fnv1a64", fnv1a64_file(p)}});
        j["inputs"] = ins;
        json outs = json::array();
        for (const auto& p : outputs) outs.push_back(p.string());
        j["outputs"] = outs;
        json skips = json::array();
        for (const auto& s : skipped)
            skips.push_back({{"stem", s.stem}, {"reason", s.reason}});
        j["skipped"] = skips;
        j["skip_count"] = skipped.size();
        {
            const auto now = std::chrono::system_clock::now();
            const std::time_t t = std::chrono::system_clock::to_time_t(now);
            char buf[32];
            std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
            j["timestamp"] = buf;
        }
        return j;
    }

    void write(const std::filesystem::path& path) const { write_json(path, to_json()); }
};

#include "softshadow/dataset.hpp"

}  // namespace softshadow
