#pragma once

// Output directory bookkeeping. Every file a command writes is recorded and
// listed, with its FNV-1a 64 digest, in <out>/manifest.json next to the
// resolved config snapshot <out>/config.json. No timestamps: re-running a
// command reproduces the manifest byte-for-byte.

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "navtl/core/error.hpp"
#include "navtl/core/hash.hpp"
#include "navtl/env/raycast.hpp"
#include "navtl/eval/msf.hpp"
#include "navtl/nn/checkpoint.hpp"

namespace navtl::app {

inline std::string file_digest(const std::string& path) {
    const auto bytes = nn::read_file_bytes(path);
    Fnv1a64 h;
    h.update(bytes.data(), bytes.size());
    return eval::hex_digest(h.digest());
}

class OutputDir {
public:
    explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
        std::error_code ec;
        std::filesystem::create_directories(root_, ec);
        if (ec) throw ConfigError("cannot create output directory " + root_.string() + ": " + ec.message());
    }

    const std::filesystem::path& root() const { return root_; }

    /// Absolute path for `rel`, creating parent directories.
    std::string path(const std::string& rel) const {
        const auto p = root_ / rel;
        std::filesystem::create_directories(p.parent_path());
        return p.string();
    }

    std::string write(const std::string& rel, const std::string& content) {
        const auto p = path(rel);
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + p + " for writing");
        f << content;
        f.close();
        files_.insert(rel);
        return p;
    }

    /// Marks a file written by someone else (e.g. a checkpoint) for the manifest.
    std::string record(const std::string& rel) {
        files_.insert(rel);
        return path(rel);
    }

    const std::set<std::string>& files() const { return files_; }

    void write_manifest(const std::string& command, const nlohmann::json& config) {
        write("config.json", config.dump(2) + "\n");
        nlohmann::json list = nlohmann::json::array();
        for (const auto& rel : files_) {
            if (rel == "manifest.json") continue;
            const auto p = (root_ / rel).string();
            list.push_back({{"path", rel},
                            {"bytes", std::filesystem::file_size(p)},
                            {"fnv1a64", file_digest(p)}});
        }
        nlohmann::json m{{"command", command}, {"files", list}};
        write("manifest.json", m.dump(2) + "\n");
    }

private:
    std::filesystem::path root_;
    std::set<std::string> files_;
};

/// One observation channel as a plain (P2) graymap.
inline std::string to_pgm(const env::Observation& obs, std::size_t channel) {
    std::string out = "P2\n" + std::to_string(obs.width) + " " + std::to_string(obs.height) + "\n255\n";
    for (std::size_t y = 0; y < obs.height; ++y) {
        for (std::size_t x = 0; x < obs.width; ++x) {
            if (x) out += ' ';
            out += std::to_string(obs.level(y, x, channel));
        }
        out += '\n';
    }
    return out;
}

}  // namespace navtl::app
