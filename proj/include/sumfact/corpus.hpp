#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumfact/jsonl.hpp"

namespace sumfact {

enum class SourceDataset {
  CnnDm,
  MediaSum,
  DialogSum,
  MeetingBank,
  WikiHow,
  GovReport,
  PubMed,
  AggreFact,
  DiaSumFact,
  TofuEval,
  Ramprasad24,
  Custom,
};

enum class Domain { News, Interview, Daily, Meeting, Knowledge, Report, Medicine, Legal, Other };

enum class DocType { Dialogue, NonDialogue };

enum class OriginalSplit { Train, Test, Unassigned };

std::string_view to_string(SourceDataset v);
std::string_view to_string(Domain v);
std::string_view to_string(DocType v);
std::string_view to_string(OriginalSplit v);
SourceDataset parse_source_dataset(std::string_view s);
Domain parse_domain(std::string_view s);
DocType parse_doc_type(std::string_view s);
OriginalSplit parse_original_split(std::string_view s);

struct Document {
  std::string doc_id;
  SourceDataset source_dataset = SourceDataset::Custom;
  Domain domain = Domain::Other;
  DocType doc_type = DocType::NonDialogue;
  std::string text;
  std::size_t word_count = 0;

  bool operator==(const Document&) const = default;
};

/// Builds a document, computing `word_count`. Throws EmptyInput for blank text.
Document make_document(std::string doc_id, SourceDataset source, Domain domain, DocType doc_type,
                       std::string text);

struct SummaryRecord {
  std::string doc_id;
  std::string summarizer_id;
  std::vector<std::string> sentences;
  std::string raw_text;

  bool operator==(const SummaryRecord&) const = default;
};

/// From pre-segmented sentences; raw_text is their space join.
SummaryRecord make_summary(std::string doc_id, std::string summarizer_id,
                           std::vector<std::string> sentences);

/// From raw text, segmented with segment_sentences().
SummaryRecord make_summary_from_text(std::string doc_id, std::string summarizer_id,
                                     std::string_view raw_text);

struct AnnotatedSentence {
  std::vector<int> labels;
  // One category set per annotator, FRANK-style. Empty when the source is binary only.
  std::vector<std::vector<std::string>> categories;

  bool operator==(const AnnotatedSentence&) const = default;
};

struct HumanAnnotation {
  std::string doc_id;
  std::string summarizer_id;
  std::vector<AnnotatedSentence> per_sentence;
  OriginalSplit original_split = OriginalSplit::Unassigned;

  bool operator==(const HumanAnnotation&) const = default;
};

struct AnnotatedRecord {
  Document document;
  SummaryRecord summary;
  HumanAnnotation annotation;
  // Source fields the adapter does not map, kept verbatim.
  Json metadata = Json::object();

  bool operator==(const AnnotatedRecord&) const = default;
};

std::size_t count_words(std::string_view text);
std::string normalize_whitespace(std::string_view text);

/// Rule-based splitter: terminal . ! ? (plus closing quotes/brackets) followed by
/// whitespace and an uppercase or opening character ends a sentence, unless the
/// token is a known abbreviation or a single-letter initial.
std::vector<std::string> segment_sentences(std::string_view text);

enum class IngestSchema { Generic, AggreFact, DiaSumFact, TofuEval, Ramprasad24 };

std::string_view to_string(IngestSchema v);
IngestSchema parse_ingest_schema(std::string_view s);

std::vector<AnnotatedRecord> ingest_human_dataset(const std::filesystem::path& path,
                                                  IngestSchema schema);

/// Same as ingest_human_dataset but over in-memory JSONL lines.
std::vector<AnnotatedRecord> ingest_human_lines(std::span<const std::string> lines,
                                                IngestSchema schema);

struct SplitPlan {
  std::vector<std::size_t> train;  // ascending input indices
  std::vector<std::size_t> test;
};

/// Original-test records always go to test. The remaining records are shuffled
/// with `seed` and moved to test until round(test_fraction * n) is reached; if the
/// flagged records already meet that target, test holds exactly the flagged ones.
SplitPlan split_train_test(std::span<const OriginalSplit> flags, double test_fraction,
                           std::uint64_t seed);

template <typename Record, typename FlagOf>
std::pair<std::vector<Record>, std::vector<Record>> split_records(std::span<const Record> records,
                                                                  double test_fraction,
                                                                  std::uint64_t seed,
                                                                  FlagOf flag_of) {
  std::vector<OriginalSplit> flags;
  flags.reserve(records.size());
  for (const auto& r : records) flags.push_back(flag_of(r));
  const SplitPlan plan = split_train_test(flags, test_fraction, seed);
  std::pair<std::vector<Record>, std::vector<Record>> out;
  for (auto i : plan.train) out.first.push_back(records[i]);
  for (auto i : plan.test) out.second.push_back(records[i]);
  return out;
}

// JSONL line codecs for the corpus, summaries and annotation files.
Json to_json(const Document& d);
Json to_json(const SummaryRecord& s);
Json to_json(const HumanAnnotation& a);
Document document_from_json(const Json& j);
SummaryRecord summary_from_json(const Json& j);
HumanAnnotation annotation_from_json(const Json& j);

/// One line of the generic ingestion layout: document fields, summarizer_id,
/// sentences, per_sentence and original_split, then metadata.
Json to_json(const AnnotatedRecord& r);

}  // namespace sumfact
