#include "microjudge/util.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

namespace fs = std::filesystem;

namespace mj {

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &md_len, EVP_sha256(), nullptr))
        throw check_error("sha256 digest failed");
    static const char* hexd = "0123456789abcdef";
    std::string out;
    out.reserve(md_len * 2);
    for (unsigned int i = 0; i < md_len; i++) {
        out.push_back(hexd[md[i] >> 4]);
        out.push_back(hexd[md[i] & 0xf]);
    }
    return out;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse17(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw check_error("not a number: " + s);
    return v;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw check_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool file_exists(const std::string& path) { return fs::exists(path); }

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw check_error("cannot create directory " + path + ": " + ec.message());
}

void atomic_write_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) ensure_dir(p.parent_path().string());
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw check_error("cannot write " + tmp);
        out.write(content.data(), (std::streamsize)content.size());
        if (!out) throw check_error("short write to " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw check_error("cannot rename " + tmp + " -> " + path + ": " + ec.message());
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw check_error("cannot read " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

} // namespace mj
