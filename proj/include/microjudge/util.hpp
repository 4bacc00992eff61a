#pragma once
// small shared helpers: error taxonomy, hashing, file io, float formatting

#include <stdexcept>
#include <string>
#include <vector>

namespace mj {

// error classes map 1:1 onto process exit codes (see tools/microjudge.cpp):
//   usage_error -> 2, numeric_error -> 3, check_error (and anything else) -> 1
struct usage_error : std::runtime_error {
    explicit usage_error(const std::string& m) : std::runtime_error(m) {}
};
struct check_error : std::runtime_error {
    explicit check_error(const std::string& m) : std::runtime_error(m) {}
};
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& m) : std::runtime_error(m) {}
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw check_error(msg);
}

std::string sha256_hex(const std::string& data);

// %.17g round-trips any finite double exactly through text
std::string fmt17(double v);
double parse17(const std::string& s);

std::string read_file(const std::string& path);
bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);
// write to a sibling temp file then rename, so readers never see partial content
void atomic_write_file(const std::string& path, const std::string& content);
std::vector<std::string> read_lines(const std::string& path);

} // namespace mj
