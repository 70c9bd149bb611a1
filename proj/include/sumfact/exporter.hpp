#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sumfact/corpus.hpp"
#include "sumfact/feedback.hpp"
#include "sumfact/jsonl.hpp"
#include "sumfact/prompts.hpp"

namespace sumfact {

struct SftMeta {
  std::string doc_id;
  std::string summarizer_id;
  Granularity granularity = Granularity::FullLocalization;
  std::string template_version;

  bool operator==(const SftMeta&) const = default;
};

/// One user/assistant fine-tuning pair.
struct SftExample {
  std::string user;
  std::string assistant;
  SftMeta meta;

  bool operator==(const SftExample&) const = default;
};

using DocumentIndex = std::map<std::string, Document, std::less<>>;

DocumentIndex index_documents(std::span<const Document> documents);

/// One example per record, ordered by (doc_id, summarizer_id). Every record must be
/// LLM feedback at `granularity`, rendered with the current template, and its
/// document must be in `documents`; otherwise InvalidRecord.
std::vector<SftExample> export_sft(std::span<const FeedbackRecord> records, const DocumentIndex& documents,
                                   Granularity granularity);

/// {"messages":[user, assistant], "meta":{...}}
Json to_json(const SftExample& e);

/// Strict reader for one SFT line; this is the schema the trainer validates against.
/// Throws SchemaMismatch.
SftExample sft_example_from_json(const Json& j);

/// Re-parses the assistant against the sentences embedded in the user prompt.
std::vector<SentenceFeedback> parse_sft_assistant(const SftExample& e);

/// Seeded sample of round(fraction * n) examples, kept in input order. The same
/// seed yields nested samples across fractions. Throws InvalidConfig unless
/// 0 < fraction <= 1.
std::vector<SftExample> subsample(std::span<const SftExample> examples, double fraction, std::uint64_t seed);

struct SourceStats {
  std::size_t documents = 0;
  std::size_t summaries = 0;
  std::size_t label0_sentences = 0;
  std::size_t label1_sentences = 0;
  std::size_t min_words = 0;
  std::size_t max_words = 0;
  double mean_words = 0.0;

  bool operator==(const SourceStats&) const = default;
};

struct DatasetStats {
  std::map<std::string, SourceStats> per_source;  // keyed by source dataset name
  SourceStats total;
  std::size_t excluded_records = 0;  // feedback that never parsed
};

/// Records whose document is absent are counted under "unknown".
DatasetStats dataset_stats(std::span<const Document> documents, std::span<const FeedbackRecord> records,
                           std::size_t excluded_records = 0);

Json to_json(const SourceStats& s);
Json to_json(const DatasetStats& s);

}  // namespace sumfact
