#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace sumfact {

/// Sentence-level factual error taxonomy (FRANK-derived, nine labels).
enum class ErrorCategory {
  NoError,
  OutOfContext,
  Entity,
  Predicate,
  Circumstantial,
  Grammatical,
  Coreference,
  Linking,
  Other,
};

inline constexpr std::array<ErrorCategory, 9> kAllCategories{
    ErrorCategory::NoError,        ErrorCategory::OutOfContext, ErrorCategory::Entity,
    ErrorCategory::Predicate,      ErrorCategory::Circumstantial, ErrorCategory::Grammatical,
    ErrorCategory::Coreference,    ErrorCategory::Linking,      ErrorCategory::Other,
};

/// The seven categories scored by error localization (no error / other excluded).
inline constexpr std::array<ErrorCategory, 7> kLocalizableCategories{
    ErrorCategory::OutOfContext, ErrorCategory::Entity,      ErrorCategory::Predicate,
    ErrorCategory::Circumstantial, ErrorCategory::Grammatical, ErrorCategory::Linking,
    ErrorCategory::Coreference,
};

/// Canonical prompt-facing name, e.g. "out-of-context error".
std::string_view canonical_name(ErrorCategory c);

/// Short identifier used in reports and JSON keys, e.g. "out_of_context".
std::string_view id_of(ErrorCategory c);

/// Case-insensitive, hyphen/space/underscore-insensitive match against canonical
/// names, ids and the FRANK abbreviations. Throws UnknownCategory otherwise.
ErrorCategory normalize_category(std::string_view s);
std::optional<ErrorCategory> try_normalize_category(std::string_view s);

constexpr int to_binary(ErrorCategory c) { return c == ErrorCategory::NoError ? 0 : 1; }

constexpr bool is_localizable(ErrorCategory c) {
  return c != ErrorCategory::NoError && c != ErrorCategory::Other;
}

}  // namespace sumfact
