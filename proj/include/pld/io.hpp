#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace pld {

inline void ensure_dir(const std::filesystem::path& dir) {
    if (!dir.empty()) {
        std::filesystem::create_directories(dir);
    }
}

// Write via a sibling temp file and rename, so readers never observe a
// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    ensure_dir(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open for writing: " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open: " + path.string());
    }
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

} // namespace pld
