#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "stopout/csv.hpp"

namespace stopout {

constexpr const char* tool_version = "0.1.0";

// FNV-1a over the file bytes; digests change iff any input byte changes.
inline std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot digest " + path.string());
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
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
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, std::string> input_digests;
    std::map<std::string, double> stage_seconds;
    std::vector<std::string> warnings;
    bool failed = false;
    std::string failure;

    void add_input(const std::filesystem::path& path) {
        if (std::filesystem::is_regular_file(path)) {
            input_digests[path.string()] = file_digest(path);
        } else if (std::filesystem::is_directory(path)) {
            std::vector<std::filesystem::path> files;
            for (const auto& e : std::filesystem::recursive_directory_iterator(path))
                if (e.is_regular_file()) files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) input_digests[f.string()] = file_digest(f);
        }
    }

    void write(const std::filesystem::path& path) const {
        nlohmann::json j;
        j["tool_version"] = tool_version;
        j["command"] = command;
        j["config"] = config;
        j["input_digests"] = input_digests;
        j["stage_seconds"] = stage_seconds;
        j["warnings"] = warnings;
        if (failed) j["failure"] = failure;
        write_file_atomic(path, j.dump(2) + "\n");
    }
};

}  // namespace stopout
