#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "otgdl/common.hpp"

namespace otgdl {

// write-then-rename so readers never observe partial files
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        require(f.good(), "IoError", "cannot open " + tmp + " for writing");
        f << content;
        require(f.good(), "IoError", "short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "IoError", "cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(f), {});
}

inline std::uint64_t hash_file(const std::filesystem::path& path) {
    return fnv1a(read_text(path));
}

} // namespace otgdl
