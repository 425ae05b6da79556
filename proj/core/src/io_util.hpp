#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace intentbench::detail {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
void append_double(std::string& out, double v);

/// Strict full-field parse; returns false on any trailing garbage.
bool parse_double(std::string_view s, double& out);
bool parse_int64(std::string_view s, std::int64_t& out);

std::string read_text_file(const std::filesystem::path& path);
std::vector<char> read_binary_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so a
/// crashed stage never leaves a truncated output behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Splits on a single delimiter without allocating the pieces.
std::vector<std::string_view> split(std::string_view line, char delim);

void append_f32le(std::string& out, std::span<const float> values);
std::vector<float> decode_f32le(std::span<const char> bytes);

}  // namespace intentbench::detail
