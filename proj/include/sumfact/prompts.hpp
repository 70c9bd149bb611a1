#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumfact/corpus.hpp"

namespace sumfact {

/// Feedback granularity, ordered by how much the verifier is asked to produce.
enum class Granularity { Binary, BinaryReasoning, FullLocalization };

inline constexpr std::array<Granularity, 3> kAllGranularities{
    Granularity::Binary, Granularity::BinaryReasoning, Granularity::FullLocalization};

std::string_view to_string(Granularity g);
/// Accepts the record names ("binary_reasoning") and the CLI names ("reasoning", "localization").
Granularity parse_granularity(std::string_view s);

constexpr bool has_reasoning(Granularity g) { return g != Granularity::Binary; }
constexpr bool has_category(Granularity g) { return g == Granularity::FullLocalization; }

/// A text asset: a small key/value header, a "---" line, then the body with
/// {document}, {sentence_count} and {numbered_sentences} slots.
struct PromptTemplate {
  std::string name;
  std::string version;
  bool reconstructed = false;
  std::vector<std::string> steps;
  std::string body;

  /// "<name>@<version>", recorded on every downstream record.
  std::string version_tag() const { return name + "@" + version; }
};

PromptTemplate parse_template_asset(std::string_view asset);

const PromptTemplate& template_for(Granularity g);
const PromptTemplate& summary_template();

/// Single-pass slot substitution; slot-like text inside substituted values is
/// never expanded. Unknown `{...}` sequences are copied through.
std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string, std::less<>>& slots);

struct PromptText {
  std::string body;
  Granularity granularity = Granularity::FullLocalization;
  std::size_t sentence_count = 0;
  std::string template_version;

  bool operator==(const PromptText&) const = default;
};

/// "[1] first\n[2] second" — one line per sentence.
std::string number_sentences(std::span<const std::string> sentences);

PromptText build_prompt(Granularity g, const Document& document, std::span<const std::string> sentences);

/// The summary-generation request body (no numbered sentences).
std::string build_summary_prompt(const Document& document);

struct PromptParts {
  std::string document;
  std::vector<std::string> sentences;
};

/// Recovers the document and numbered sentences from a rendered verification prompt.
/// Throws SchemaMismatch when the body does not have the template's shape.
PromptParts parse_prompt(std::string_view body);

}  // namespace sumfact
