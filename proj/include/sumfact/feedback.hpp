#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumfact/corpus.hpp"
#include "sumfact/error.hpp"
#include "sumfact/jsonl.hpp"
#include "sumfact/prompts.hpp"
#include "sumfact/taxonomy.hpp"

namespace sumfact {

struct SentenceFeedback {
  std::size_t sentence_index = 0;  // 1-based
  std::string sentence_text;
  std::optional<std::string> reasoning;
  std::optional<ErrorCategory> category;
  int binary_label = 0;

  bool operator==(const SentenceFeedback&) const = default;
};

enum class FeedbackSource { Llm, Human };

std::string_view to_string(FeedbackSource s);
FeedbackSource parse_feedback_source(std::string_view s);

struct FeedbackRecord {
  std::string doc_id;
  std::string summarizer_id;
  Granularity granularity = Granularity::FullLocalization;
  std::vector<SentenceFeedback> feedback;
  FeedbackSource source = FeedbackSource::Llm;
  std::string template_version;
  // Evaluation-time fallback: the prediction could not be parsed and every
  // sentence was set to label 0.
  bool defaulted = false;

  /// Fraction of sentences labelled 0.
  double faithfulness() const;

  bool operator==(const FeedbackRecord&) const = default;
};

/// Throws InvalidRecord when the record breaks a structural invariant
/// (index order, label/category coherence, reasoning/category presence).
void validate(const FeedbackRecord& record);

Json to_json(const FeedbackRecord& r);
FeedbackRecord feedback_record_from_json(const Json& j);

/// Strips code fences and returns the first balanced `[ ... ]` block that parses,
/// preferring an array of objects over other arrays,
/// after dropping trailing commas and, when needed, straightening curly double quotes.
/// Throws NoJsonFound or UnbalancedBrackets.
std::string extract_json_block(std::string_view raw);

/// Parses an assistant response into one SentenceFeedback per expected sentence.
/// Items are aligned by normalized sentence text, or positionally when counts match.
std::vector<SentenceFeedback> parse_feedback(std::string_view raw, std::span<const std::string> expected_sentences,
                                             Granularity granularity);

/// The assistant-message JSON: [{"sentence", "reason", "category"}] for full
/// localization; "reason" and "label" for the binary variants.
std::string serialize_feedback(std::span<const SentenceFeedback> feedback, Granularity granularity);

/// Two-annotator rule: agreement keeps the label, disagreement yields nothing.
constexpr std::optional<int> consolidate(int label_a, int label_b) {
  if (label_a == label_b) return label_a;
  return std::nullopt;
}

bool is_parse_error(ErrorKind kind);

/// Raised once every regeneration failed to parse.
class ExhaustedError : public Error {
 public:
  ExhaustedError(std::size_t attempts, ErrorKind last_kind, const std::string& last_message)
      : Error(ErrorKind::Exhausted,
              std::to_string(attempts) + " attempt(s), last: " + last_message),
        attempts_(attempts), last_kind_(last_kind) {}

  std::size_t attempts() const noexcept { return attempts_; }
  ErrorKind last_kind() const noexcept { return last_kind_; }

 private:
  std::size_t attempts_;
  ErrorKind last_kind_;
};

struct ParsedFeedback {
  std::vector<SentenceFeedback> feedback;
  std::size_t attempts = 0;
};

/// Calls `generate` until its output parses, at most `max_attempts` times.
/// Non-parse errors from `generate` propagate immediately.
ParsedFeedback feedback_with_retry(const std::function<std::string()>& generate,
                                   std::span<const std::string> expected_sentences, Granularity granularity,
                                   std::size_t max_attempts);

/// Evaluation fallback: every sentence labelled 0 (no error), flagged defaulted.
FeedbackRecord default_prediction(std::string doc_id, std::string summarizer_id,
                                  std::span<const std::string> sentences, Granularity granularity,
                                  std::string template_version);

// ---- human labels ----------------------------------------------------------

struct ConsolidationCounts {
  std::size_t records_in = 0;
  std::size_t records_kept = 0;
  std::size_t records_dropped = 0;
  std::size_t sentences_agreed_no_error = 0;
  std::size_t sentences_agreed_error = 0;
  std::size_t sentences_disagreed = 0;
  std::size_t sentences_passed_through = 0;

  bool operator==(const ConsolidationCounts&) const = default;
};

Json to_json(const ConsolidationCounts& c);

/// Sentences with exactly two annotator labels are consolidated; a record with
/// any disagreement is dropped whole. Single-annotator (majority-agreed) and
/// three-annotator sentences pass through unchanged.
std::optional<HumanAnnotation> consolidate_annotation(const HumanAnnotation& annotation, ConsolidationCounts& counts);

/// Gold binary label of one annotated sentence: the single label, the agreed
/// pair, or the majority of three. Empty when two annotators disagree.
std::optional<int> gold_label(const AnnotatedSentence& sentence);

/// Union of all annotators' normalized categories. Unknown names throw UnknownCategory.
std::vector<ErrorCategory> gold_categories(const AnnotatedSentence& sentence);

}  // namespace sumfact
