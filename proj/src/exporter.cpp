#include "sumfact/exporter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "sumfact/random.hpp"

namespace sumfact {

namespace {

[[noreturn]] void invalid(const FeedbackRecord& r, const std::string& what) {
  throw Error(ErrorKind::InvalidRecord, "(" + r.doc_id + ", " + r.summarizer_id + "): " + what);
}

const Json& require_object(const Json& obj, std::string_view key) {
  const Json& v = require(obj, key);
  if (!v.is_object()) throw Error(ErrorKind::SchemaMismatch, "'" + std::string(key) + "' must be an object");
  return v;
}

}  // namespace

DocumentIndex index_documents(std::span<const Document> documents) {
  DocumentIndex index;
  for (const auto& d : documents) {
    auto [it, inserted] = index.emplace(d.doc_id, d);
    if (!inserted && it->second.text != d.text)
      throw Error(ErrorKind::DuplicateId, "doc_id '" + d.doc_id + "' appears with different text");
  }
  return index;
}

std::vector<SftExample> export_sft(std::span<const FeedbackRecord> records, const DocumentIndex& documents,
                                   Granularity granularity) {
  const std::string expected_version = template_for(granularity).version_tag();
  std::vector<const FeedbackRecord*> order;
  order.reserve(records.size());
  for (const auto& r : records) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const FeedbackRecord* a, const FeedbackRecord* b) {
    return std::tie(a->doc_id, a->summarizer_id) < std::tie(b->doc_id, b->summarizer_id);
  });

  std::vector<SftExample> out;
  out.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const FeedbackRecord& r = *order[i];
    if (i > 0 && order[i - 1]->doc_id == r.doc_id && order[i - 1]->summarizer_id == r.summarizer_id)
      invalid(r, "pair exported twice");
    if (r.source != FeedbackSource::Llm) invalid(r, "only LLM feedback is exported for training");
    if (r.defaulted) invalid(r, "defaulted predictions are not training targets");
    if (r.granularity != granularity)
      invalid(r, "granularity " + std::string(to_string(r.granularity)) + ", export asked for " +
                     std::string(to_string(granularity)));
    if (r.template_version != expected_version)
      invalid(r, "template " + r.template_version + " differs from current " + expected_version);
    validate(r);
    auto doc = documents.find(r.doc_id);
    if (doc == documents.end()) invalid(r, "document not in corpus");

    std::vector<std::string> sentences;
    sentences.reserve(r.feedback.size());
    for (const auto& f : r.feedback) sentences.push_back(f.sentence_text);

    SftExample e;
    e.user = build_prompt(granularity, doc->second, sentences).body;
    e.assistant = serialize_feedback(r.feedback, granularity);
    e.meta = {r.doc_id, r.summarizer_id, granularity, r.template_version};
    out.push_back(std::move(e));
  }
  return out;
}

Json to_json(const SftExample& e) {
  Json j;
  j["messages"] = Json::array({Json{{"role", "user"}, {"content", e.user}},
                               Json{{"role", "assistant"}, {"content", e.assistant}}});
  j["meta"] = {{"doc_id", e.meta.doc_id},
               {"summarizer_id", e.meta.summarizer_id},
               {"granularity", std::string(to_string(e.meta.granularity))},
               {"template_version", e.meta.template_version}};
  return j;
}

SftExample sft_example_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::SchemaMismatch, "SFT line must be an object");
  const Json& messages = require(j, "messages");
  if (!messages.is_array() || messages.size() != 2)
    throw Error(ErrorKind::SchemaMismatch, "'messages' must hold exactly [user, assistant]");
  static constexpr std::string_view kRoles[] = {"user", "assistant"};
  std::string contents[2];
  for (std::size_t i = 0; i < 2; ++i) {
    const Json& m = messages[i];
    if (!m.is_object()) throw Error(ErrorKind::SchemaMismatch, "message must be an object");
    if (require_string(m, "role") != kRoles[i])
      throw Error(ErrorKind::SchemaMismatch, "message " + std::to_string(i) + " must have role '" +
                                                 std::string(kRoles[i]) + "'");
    contents[i] = require_string(m, "content");
  }
  const Json& meta = require_object(j, "meta");
  SftExample e;
  e.user = std::move(contents[0]);
  e.assistant = std::move(contents[1]);
  e.meta.doc_id = require_string(meta, "doc_id");
  e.meta.summarizer_id = require_string(meta, "summarizer_id");
  try {
    e.meta.granularity = parse_granularity(require_string(meta, "granularity"));
  } catch (const Error& err) {
    throw Error(ErrorKind::SchemaMismatch, err.what());
  }
  e.meta.template_version = require_string(meta, "template_version");
  return e;
}

std::vector<SentenceFeedback> parse_sft_assistant(const SftExample& e) {
  const PromptParts parts = parse_prompt(e.user);
  return parse_feedback(e.assistant, parts.sentences, e.meta.granularity);
}

std::vector<SftExample> subsample(std::span<const SftExample> examples, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw Error(ErrorKind::InvalidConfig, "subsample fraction must lie in (0, 1], got " + std::to_string(fraction));
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(examples.size())));

  // One permutation per seed; every fraction takes a prefix of it.
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  seeded_shuffle(std::span<std::size_t>(order), rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());

  std::vector<SftExample> out;
  out.reserve(keep);
  for (auto i : order) out.push_back(examples[i]);
  return out;
}

DatasetStats dataset_stats(std::span<const Document> documents, std::span<const FeedbackRecord> records,
                           std::size_t excluded_records) {
  DatasetStats stats;
  stats.excluded_records = excluded_records;

  struct Words {
    std::size_t min = std::numeric_limits<std::size_t>::max();
    std::size_t max = 0;
    std::size_t sum = 0;
  };
  std::map<std::string, Words> words;
  Words all;
  auto add_words = [](Words& w, std::size_t n) {
    w.min = std::min(w.min, n);
    w.max = std::max(w.max, n);
    w.sum += n;
  };

  std::map<std::string, std::string, std::less<>> source_of;
  for (const auto& d : documents) {
    if (!source_of.emplace(d.doc_id, std::string(to_string(d.source_dataset))).second) continue;
    const std::string source(to_string(d.source_dataset));
    ++stats.per_source[source].documents;
    ++stats.total.documents;
    add_words(words[source], d.word_count);
    add_words(all, d.word_count);
  }

  for (const auto& r : records) {
    auto it = source_of.find(r.doc_id);
    SourceStats& s = stats.per_source[it == source_of.end() ? std::string("unknown") : it->second];
    ++s.summaries;
    ++stats.total.summaries;
    for (const auto& f : r.feedback) {
      auto& bucket = f.binary_label == 0 ? s.label0_sentences : s.label1_sentences;
      auto& total_bucket = f.binary_label == 0 ? stats.total.label0_sentences : stats.total.label1_sentences;
      ++bucket;
      ++total_bucket;
    }
  }

  auto finish = [](SourceStats& s, const Words& w) {
    if (s.documents == 0) return;
    s.min_words = w.min;
    s.max_words = w.max;
    s.mean_words = static_cast<double>(w.sum) / static_cast<double>(s.documents);
  };
  for (auto& [source, s] : stats.per_source) finish(s, words[source]);
  finish(stats.total, all);
  return stats;
}

Json to_json(const SourceStats& s) {
  return {{"documents", s.documents},       {"summaries", s.summaries},
          {"label0_sentences", s.label0_sentences}, {"label1_sentences", s.label1_sentences},
          {"min_words", s.min_words},       {"max_words", s.max_words},
          {"mean_words", s.mean_words}};
}

Json to_json(const DatasetStats& s) {
  Json per_source = Json::object();
  for (const auto& [name, src] : s.per_source) per_source[name] = to_json(src);
  return {{"per_source", std::move(per_source)}, {"total", to_json(s.total)}, {"excluded_records", s.excluded_records}};
}

}  // namespace sumfact
