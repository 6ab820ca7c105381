#include "coldqs/canonical.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include "coldqs/errors.hpp"

namespace coldqs {

namespace {

std::array<unsigned char, 32> sha256_raw(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                &EVP_MD_CTX_free);
    std::array<unsigned char, 32> out{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    return out;
}

}  // namespace

std::string canonical_dump(const json& j) {
    return j.dump(-1, ' ', false, json::error_handler_t::strict);
}

std::string sha256_hex(std::string_view bytes) {
    static constexpr char kHex[] = "0123456789abcdef";
    auto raw = sha256_raw(bytes);
    std::string out;
    out.reserve(64);
    for (unsigned char b : raw) {
        out.push_back(kHex[b >> 4]);
        out.push_back(kHex[b & 0xF]);
    }
    return out;
}

std::string digest_lines(std::span<const std::string> lines) {
    std::string joined;
    for (const auto& l : lines) {
        joined += l;
        joined.push_back('\n');
    }
    return sha256_hex(joined);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
    std::string material = std::to_string(parent);
    material.push_back(':');
    material.append(label);
    auto raw = sha256_raw(material);
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | raw[static_cast<std::size_t>(i)];
    return seed;
}

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

bool is_schema_header(const json& row) {
    return row.is_object() && row.size() == 1 && row.contains("schema_version");
}

std::vector<json> parse_jsonl(std::string_view text) {
    std::vector<json> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (rows.empty() && is_schema_header(row)) continue;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    try {
        return parse_jsonl(read_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_jsonl(const std::filesystem::path& path, std::span<const json> rows) {
    std::string out;
    for (const auto& r : rows) {
        out += canonical_dump(r);
        out.push_back('\n');
    }
    write_file_atomic(path, out);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace coldqs
