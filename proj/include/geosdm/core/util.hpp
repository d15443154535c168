// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <spdlog/logger.h>

namespace geosdm {

/// Logger writing to stderr; artifacts and paths go to stdout elsewhere.
spdlog::logger& log();

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

/// Hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

std::vector<std::string> split_fields(std::string_view line, char sep);
std::string_view trim(std::string_view s);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

std::vector<float> read_f32_le(const std::filesystem::path& path);
std::uintmax_t file_size_of(const std::filesystem::path& path);
void write_f32_le(const std::filesystem::path& path, std::span<const float> values);
void append_f32_le(std::string& buffer, std::span<const float> values);
void decode_f32_le(std::string_view bytes, std::span<float> out);

}  // namespace geosdm
