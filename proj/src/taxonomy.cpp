#include "sumfact/taxonomy.hpp"

#include <string>
#include <utility>

#include "sumfact/error.hpp"

namespace sumfact {

namespace {

struct Entry {
  ErrorCategory category;
  std::string_view canonical;
  std::string_view id;
};

constexpr std::array<Entry, 9> kEntries{{
    {ErrorCategory::NoError, "no error", "no_error"},
    {ErrorCategory::OutOfContext, "out-of-context error", "out_of_context"},
    {ErrorCategory::Entity, "entity error", "entity"},
    {ErrorCategory::Predicate, "predicate error", "predicate"},
    {ErrorCategory::Circumstantial, "circumstantial error", "circumstantial"},
    {ErrorCategory::Grammatical, "grammatical error", "grammatical"},
    {ErrorCategory::Coreference, "coreference error", "coreference"},
    {ErrorCategory::Linking, "linking error", "linking"},
    {ErrorCategory::Other, "other error", "other"},
}};

// Keys are already folded (see fold()).
constexpr std::array<std::pair<std::string_view, ErrorCategory>, 18> kAliases{{
    {"noe", ErrorCategory::NoError},
    {"none", ErrorCategory::NoError},
    {"oute", ErrorCategory::OutOfContext},
    {"outofcontext", ErrorCategory::OutOfContext},
    {"ente", ErrorCategory::Entity},
    {"prede", ErrorCategory::Predicate},
    {"cire", ErrorCategory::Circumstantial},
    {"circe", ErrorCategory::Circumstantial},
    {"circumstanceerror", ErrorCategory::Circumstantial},
    {"grame", ErrorCategory::Grammatical},
    {"corefe", ErrorCategory::Coreference},
    {"linke", ErrorCategory::Linking},
    {"discourselinkerror", ErrorCategory::Linking},
    {"othere", ErrorCategory::Other},
    {"others", ErrorCategory::Other},
    {"othererrors", ErrorCategory::Other},
    {"other", ErrorCategory::Other},
    {"noerrors", ErrorCategory::NoError},
}};

// Lowercase ASCII and drop separators so "Out of Context Error",
// "out-of-context error" and "out_of_context_error" compare equal.
std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == ' ' || c == '-' || c == '_' || c == '\t' || c == '\n' || c == '\r') continue;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

}  // namespace

std::string_view canonical_name(ErrorCategory c) {
  for (const auto& e : kEntries)
    if (e.category == c) return e.canonical;
  return "?";
}

std::string_view id_of(ErrorCategory c) {
  for (const auto& e : kEntries)
    if (e.category == c) return e.id;
  return "?";
}

std::optional<ErrorCategory> try_normalize_category(std::string_view s) {
  const std::string key = fold(s);
  if (key.empty()) return std::nullopt;
  for (const auto& e : kEntries) {
    if (fold(e.canonical) == key || fold(e.id) == key) return e.category;
  }
  for (const auto& [alias, category] : kAliases)
    if (alias == key) return category;
  return std::nullopt;
}

ErrorCategory normalize_category(std::string_view s) {
  if (auto c = try_normalize_category(s)) return *c;
  throw Error(ErrorKind::UnknownCategory, "'" + std::string(s) + "' is not in the error taxonomy");
}

}  // namespace sumfact
