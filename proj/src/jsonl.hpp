#pragma once

// Internal helpers for line-delimited JSON records.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace suggestkit::detail {

// Calls fn(record, line_number) for every non-blank line. Parse failures throw
// Error{Malformed} naming `source` and the 1-based line number.
void for_each_record(std::string_view text, std::string_view source,
                     const std::function<void(const nlohmann::json&, std::size_t)>& fn);

std::string read_file(const std::filesystem::path& path);
// Atomic replace via a sibling temp file.
void write_file(const std::filesystem::path& path, std::string_view contents);

// Required non-empty string field; throws Error{InvalidInput} otherwise.
std::string required_string(const nlohmann::json& j, const char* field, std::string_view where);
std::string optional_string(const nlohmann::json& j, const char* field, std::string def = {});

std::string trim(std::string_view s);
std::string lower_ascii(std::string_view s);

std::string dump_line(const nlohmann::json& j);

}  // namespace suggestkit::detail
