#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sumfact {

// Insertion-ordered objects so every writer controls its key order.
using Json = nlohmann::ordered_json;

std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Parses one object per non-blank line. Throws SchemaMismatch with the line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Compact, UTF-8, no trailing whitespace.
std::string dump_compact(const Json& j);

// Typed field access with SchemaMismatch on absence or wrong type.
const Json& require(const Json& obj, std::string_view key);
std::string require_string(const Json& obj, std::string_view key);

}  // namespace sumfact
