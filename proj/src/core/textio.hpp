#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mxai {

std::vector<std::string> split_csv_line(std::string_view line);
std::vector<std::string> split_whitespace(std::string_view line);
std::string trim(std::string_view s);

// Strict numeric parsing; returns nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::optional<int64_t> parse_int(std::string_view s);

// Shortest round-trip representation (std::to_chars), so written files
// re-parse to bit-identical values.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// FNV-1a over file bytes, as a cheap content digest for run manifests.
std::string fnv1a_hex_digest(const std::string& path);
std::string fnv1a_hex_digest_of(std::string_view data);

}  // namespace mxai
