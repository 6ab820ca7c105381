#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coldqs/types.hpp"

namespace coldqs {

// Compact JSON with sorted keys and shortest round-trip doubles. Byte-stable.
std::string canonical_dump(const json& j);

std::string sha256_hex(std::string_view bytes);

// Digest of a sequence of canonical lines joined by '\n'.
std::string digest_lines(std::span<const std::string> lines);

// Derives a child seed from a parent seed and a label. Used to fan out the
// single top-level seed to stages, rounds, records and rollouts.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label);

// Uniform integer in [0, bound) from a 64-bit engine, rejection sampled so the
// result is identical across standard library implementations.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(bounded_draw(rng, i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

// Line-delimited JSON. A leading {"schema_version": ...} line is skipped.
std::vector<json> read_jsonl(const std::filesystem::path& path);
std::vector<json> parse_jsonl(std::string_view text);
void write_jsonl(const std::filesystem::path& path, std::span<const json> rows);

// Writes through a temporary file and rename so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

bool is_schema_header(const json& row);

}  // namespace coldqs
