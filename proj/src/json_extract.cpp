#include <optional>
#include <string>
#include <string_view>

#include "sumfact/feedback.hpp"

namespace sumfact {

namespace {

constexpr std::size_t kMaxCandidates = 64;

std::string_view fenced_body(std::string_view raw) {
  const auto open = raw.find("```");
  if (open == std::string_view::npos) return {};
  auto body_start = raw.find('\n', open + 3);
  if (body_start == std::string_view::npos) return {};
  ++body_start;
  const auto close = raw.find("```", body_start);
  return raw.substr(body_start, close == std::string_view::npos ? std::string_view::npos : close - body_start);
}

// End (exclusive) of the balanced bracket block opening at `open`, or nullopt.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[') ++depth;
    else if (c == ']' && --depth == 0) return i + 1;
  }
  return std::nullopt;
}

std::string drop_trailing_commas(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      out += c;
      if (c == '\\' && i + 1 < text.size()) out += text[++i];
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\n' || text[j] == '\r' || text[j] == '\t')) ++j;
      if (j < text.size() && (text[j] == ']' || text[j] == '}')) continue;
    }
    out += c;
  }
  return out;
}

std::string straighten_double_quotes(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    // U+201C / U+201D
    if (text.compare(i, 3, "\xE2\x80\x9C") == 0 || text.compare(i, 3, "\xE2\x80\x9D") == 0) {
      out += '"';
      i += 2;
    } else {
      out += text[i];
    }
  }
  return out;
}

enum class Shape { Invalid, Array, ObjectArray };

Shape shape_of(const std::string& text) {
  const Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array()) return Shape::Invalid;
  if (j.empty()) return Shape::Array;
  for (const auto& item : j)
    if (!item.is_object()) return Shape::Array;
  return Shape::ObjectArray;
}

struct Scan {
  std::optional<std::string> block;
  bool saw_open = false;
  bool saw_unbalanced_first = false;
};

Scan scan(std::string_view text) {
  Scan result;
  std::size_t tried = 0;
  for (auto open = text.find('['); open != std::string_view::npos && tried < kMaxCandidates;
       open = text.find('[', open + 1), ++tried) {
    const auto end = balanced_end(text, open);
    if (!result.saw_open && !end) result.saw_unbalanced_first = true;
    result.saw_open = true;
    if (!end) continue;
    std::string candidate = drop_trailing_commas(text.substr(open, *end - open));
    switch (shape_of(candidate)) {
      case Shape::ObjectArray:
        result.block = std::move(candidate);
        return result;
      case Shape::Array:
        // Prose such as "see [1]" parses too; keep looking for an array of objects.
        if (!result.block) result.block = std::move(candidate);
        break;
      case Shape::Invalid:
        break;
    }
  }
  return result;
}

}  // namespace

std::string extract_json_block(std::string_view raw) {
  std::string_view body = fenced_body(raw);
  if (body.find('[') == std::string_view::npos) body = raw;

  Scan first = scan(body);
  if (first.block) return *first.block;

  const std::string straight = straighten_double_quotes(body);
  if (straight != body) {
    Scan second = scan(straight);
    if (second.block) return *second.block;
  }
  if (first.saw_unbalanced_first) throw Error(ErrorKind::UnbalancedBrackets, "the first '[' is never closed");
  if (first.saw_open) throw Error(ErrorKind::NoJsonFound, "no bracketed block parses as a JSON array");
  throw Error(ErrorKind::NoJsonFound, "response contains no JSON array");
}

}  // namespace sumfact
