#pragma once

// Run manifests: every CLI command writes <out>.manifest.json recording the
// command, resolved parameters, input-file hashes, and seed -- enough to
// reproduce the run byte-identically. Deliberately no timestamps; manifests
// must themselves be byte-stable across reruns.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace notesampler {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a-64 over the file's bytes, rendered as 16 hex digits.
std::string file_hash_hex(const std::string& path);

struct RunManifest {
    std::string command;
    // Resolved parameters in insertion order (flag -> value as text).
    std::vector<std::pair<std::string, std::string>> parameters;
    // Input path -> content hash.
    std::vector<std::pair<std::string, std::string>> input_hashes;
    uint64_t master_seed = 0;

    void add_param(const std::string& key, const std::string& value);
    void add_input(const std::string& path);  // hashes the file now
    void write(const std::string& out_path) const;
};

}  // namespace notesampler
