#include <map>
#include <set>
#include <string>
#include <utility>

#include "sumfact/corpus.hpp"
#include "sumfact/error.hpp"

namespace sumfact {

namespace {

// Field names of one source layout. Empty name = not present in that layout.
struct Layout {
  SourceDataset source;
  std::string_view id;
  std::string_view text;
  std::string_view summarizer;
  std::string_view split;
  std::string_view labels;      // one label per sentence (majority-agreed sources)
  std::string_view pair_labels; // [a, b] per sentence (two-annotator sources)
  std::string_view pair_types;  // optional [[cats_a], [cats_b]] per sentence
  DocType doc_type;
  std::map<std::string_view, Domain> origins;
};

const Layout& layout_for(IngestSchema schema) {
  static const Layout aggrefact{SourceDataset::AggreFact, "id", "doc", "model_name", "cut", "sentence_labels",
                                "", "", DocType::NonDialogue,
                                {{"cnndm", Domain::News}, {"xsum", Domain::News}}};
  static const Layout diasumfact{SourceDataset::DiaSumFact, "id", "dialogue", "model", "split", "",
                                 "annotator_labels", "annotator_types", DocType::Dialogue,
                                 {{"samsum", Domain::Daily}, {"qmsum", Domain::Meeting}}};
  static const Layout tofueval{SourceDataset::TofuEval, "doc_id", "source_doc", "model_name", "split",
                               "sentence_labels", "", "", DocType::Dialogue,
                               {{"mediasum", Domain::Interview}, {"meetingbank", Domain::Meeting}}};
  static const Layout ramprasad{SourceDataset::Ramprasad24, "id", "article", "model", "split", "",
                                "annotator_labels", "", DocType::NonDialogue,
                                {{"pubmed", Domain::Medicine}, {"billsum", Domain::Legal}, {"news", Domain::News}}};
  switch (schema) {
    case IngestSchema::AggreFact: return aggrefact;
    case IngestSchema::DiaSumFact: return diasumfact;
    case IngestSchema::TofuEval: return tofueval;
    case IngestSchema::Ramprasad24: return ramprasad;
    case IngestSchema::Generic: break;
  }
  throw Error(ErrorKind::InvalidConfig, "generic schema has no fixed layout");
}

OriginalSplit map_split(const Json& row, std::string_view key) {
  auto it = row.find(std::string(key));
  if (it == row.end() || !it->is_string()) return OriginalSplit::Unassigned;
  const auto v = it->get<std::string>();
  if (v == "test") return OriginalSplit::Test;
  if (v == "train") return OriginalSplit::Train;
  return OriginalSplit::Unassigned;  // val / dev are free for reassignment
}

std::vector<std::string> summary_sentences(const Json& row) {
  if (auto it = row.find("summary_sentences"); it != row.end()) {
    if (!it->is_array() || it->empty())
      throw Error(ErrorKind::SchemaMismatch, "'summary_sentences' must be a non-empty array");
    std::vector<std::string> out;
    for (const auto& s : *it) {
      if (!s.is_string()) throw Error(ErrorKind::SchemaMismatch, "summary sentence must be a string");
      out.push_back(s.get<std::string>());
    }
    return out;
  }
  return segment_sentences(require_string(row, "summary"));
}

int label_value(const Json& v) {
  if (v.is_number_integer() && (v.get<long long>() == 0 || v.get<long long>() == 1))
    return static_cast<int>(v.get<long long>());
  throw Error(ErrorKind::SchemaMismatch, "label must be 0 or 1, got " + v.dump());
}

Json leftover_fields(const Json& row, const std::set<std::string>& consumed) {
  Json meta = Json::object();
  for (auto it = row.begin(); it != row.end(); ++it)
    if (!consumed.contains(it.key())) meta[it.key()] = it.value();
  return meta;
}

AnnotatedRecord from_layout(const Json& row, const Layout& layout) {
  std::set<std::string> consumed{std::string(layout.id), std::string(layout.text),
                                 std::string(layout.summarizer), std::string(layout.split), "origin",
                                 "summary_sentences", "summary"};

  const auto origin_name = require_string(row, "origin");
  auto origin = layout.origins.find(origin_name);
  if (origin == layout.origins.end())
    throw Error(ErrorKind::SchemaMismatch, "unknown origin '" + origin_name + "'");

  AnnotatedRecord rec;
  rec.document = make_document(require_string(row, layout.id), layout.source, origin->second, layout.doc_type,
                               require_string(row, layout.text));
  rec.summary = make_summary(rec.document.doc_id, require_string(row, layout.summarizer), summary_sentences(row));

  auto& ann = rec.annotation;
  ann.doc_id = rec.document.doc_id;
  ann.summarizer_id = rec.summary.summarizer_id;
  ann.original_split = map_split(row, layout.split);

  const std::size_t n = rec.summary.sentences.size();
  if (!layout.labels.empty()) {
    consumed.insert(std::string(layout.labels));
    const Json& labels = require(row, layout.labels);
    if (!labels.is_array() || labels.size() != n)
      throw Error(ErrorKind::SchemaMismatch, "expected " + std::to_string(n) + " sentence labels for '" +
                                                 ann.doc_id + "'");
    for (const auto& l : labels) ann.per_sentence.push_back({{label_value(l)}, {}});
  } else {
    consumed.insert(std::string(layout.pair_labels));
    const Json& pairs = require(row, layout.pair_labels);
    if (!pairs.is_array() || pairs.size() != n)
      throw Error(ErrorKind::SchemaMismatch, "expected " + std::to_string(n) + " annotator label pairs for '" +
                                                 ann.doc_id + "'");
    const Json* types = nullptr;
    if (!layout.pair_types.empty()) {
      consumed.insert(std::string(layout.pair_types));
      if (auto it = row.find(std::string(layout.pair_types)); it != row.end()) {
        if (!it->is_array() || it->size() != n)
          throw Error(ErrorKind::SchemaMismatch, "annotator types do not match the sentence count");
        types = &*it;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Json& pair = pairs[i];
      if (!pair.is_array() || pair.size() != 2)
        throw Error(ErrorKind::SchemaMismatch, "annotator labels must come in pairs");
      AnnotatedSentence s{{label_value(pair[0]), label_value(pair[1])}, {}};
      if (types != nullptr) {
        const Json& t = (*types)[i];
        if (!t.is_array() || t.size() != 2)
          throw Error(ErrorKind::SchemaMismatch, "annotator types must come in pairs");
        for (const auto& set : t) s.categories.push_back(set.get<std::vector<std::string>>());
      }
      ann.per_sentence.push_back(std::move(s));
    }
  }
  rec.metadata = leftover_fields(row, consumed);
  return rec;
}

AnnotatedRecord from_generic(const Json& row) {
  AnnotatedRecord rec;
  rec.document = document_from_json(row);
  rec.summary = summary_from_json(row);
  Json ann = row;
  if (!ann.contains("original_split")) ann["original_split"] = "unassigned";
  rec.annotation = annotation_from_json(ann);
  if (rec.annotation.per_sentence.size() != rec.summary.sentences.size())
    throw Error(ErrorKind::SchemaMismatch, "per_sentence has " + std::to_string(rec.annotation.per_sentence.size()) +
                                               " entries for " + std::to_string(rec.summary.sentences.size()) +
                                               " sentences in '" + rec.document.doc_id + "'");
  rec.metadata = leftover_fields(row, {"doc_id", "source_dataset", "domain", "doc_type", "text", "summarizer_id",
                                       "sentences", "per_sentence", "original_split"});
  return rec;
}

}  // namespace

std::string_view to_string(IngestSchema v) {
  switch (v) {
    case IngestSchema::Generic: return "generic";
    case IngestSchema::AggreFact: return "aggrefact";
    case IngestSchema::DiaSumFact: return "diasumfact";
    case IngestSchema::TofuEval: return "tofueval";
    case IngestSchema::Ramprasad24: return "ramprasad24";
  }
  return "?";
}

IngestSchema parse_ingest_schema(std::string_view s) {
  for (auto v : {IngestSchema::Generic, IngestSchema::AggreFact, IngestSchema::DiaSumFact, IngestSchema::TofuEval,
                 IngestSchema::Ramprasad24})
    if (to_string(v) == s) return v;
  throw Error(ErrorKind::InvalidConfig, "unknown ingest schema '" + std::string(s) + "'");
}

std::vector<AnnotatedRecord> ingest_human_lines(std::span<const std::string> lines, IngestSchema schema) {
  std::vector<AnnotatedRecord> out;
  std::set<std::pair<std::string, std::string>> seen_pairs;
  std::map<std::string, std::string> doc_text;
  std::size_t lineno = 0;
  for (const auto& line : lines) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    AnnotatedRecord rec;
    try {
      const Json row = Json::parse(line);
      rec = schema == IngestSchema::Generic ? from_generic(row) : from_layout(row, layout_for(schema));
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::SchemaMismatch, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SchemaMismatch && e.kind() != ErrorKind::EmptyInput &&
          e.kind() != ErrorKind::EmptySentences)
        throw;
      throw Error(ErrorKind::SchemaMismatch, "line " + std::to_string(lineno) + ": " + e.what());
    }
    const auto& id = rec.document.doc_id;
    if (!seen_pairs.emplace(id, rec.summary.summarizer_id).second)
      throw Error(ErrorKind::DuplicateId, "line " + std::to_string(lineno) + ": duplicate pair (" + id + ", " +
                                              rec.summary.summarizer_id + ")");
    if (auto [it, fresh] = doc_text.emplace(id, rec.document.text); !fresh && it->second != rec.document.text)
      throw Error(ErrorKind::DuplicateId,
                  "line " + std::to_string(lineno) + ": doc_id '" + id + "' reused with different text");
    out.push_back(std::move(rec));
  }
  return out;
}

Json to_json(const AnnotatedRecord& r) {
  Json j = to_json(r.document);
  j["summarizer_id"] = r.summary.summarizer_id;
  j["sentences"] = r.summary.sentences;
  const Json ann = to_json(r.annotation);
  j["per_sentence"] = ann["per_sentence"];
  j["original_split"] = ann["original_split"];
  for (const auto& [k, v] : r.metadata.items())
    if (!j.contains(k)) j[k] = v;
  return j;
}

std::vector<AnnotatedRecord> ingest_human_dataset(const std::filesystem::path& path, IngestSchema schema) {
  const auto lines = read_lines(path);
  return ingest_human_lines(lines, schema);
}

}  // namespace sumfact
