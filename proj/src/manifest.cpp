#include "notesampler/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "notesampler/common.hpp"

namespace notesampler {

std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for hashing: " + path);
    Fnv1a64 hash;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        hash.update(std::string_view(buf, static_cast<size_t>(in.gcount())));
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(hash.digest()));
    return hex;
}

void RunManifest::add_param(const std::string& key, const std::string& value) {
    parameters.emplace_back(key, value);
}

void RunManifest::add_input(const std::string& path) {
    input_hashes.emplace_back(path, file_hash_hex(path));
}

void RunManifest::write(const std::string& out_path) const {
    nlohmann::ordered_json obj;
    obj["tool_version"] = kToolVersion;
    obj["command"] = command;
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : parameters) params[k] = v;
    obj["parameters"] = std::move(params);
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    for (const auto& [path, hash] : input_hashes) inputs[path] = hash;
    obj["input_hashes"] = std::move(inputs);
    obj["master_seed"] = master_seed;

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest: " + out_path);
    out << obj.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + out_path);
}

}  // namespace notesampler
