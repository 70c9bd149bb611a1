#include "sumfact/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_set>

#include "sumfact/error.hpp"
#include "sumfact/random.hpp"

namespace sumfact {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<Enum, std::string_view>, N>& table,
                std::string_view what) {
  for (const auto& [value, name] : table)
    if (name == s) return value;
  throw Error(ErrorKind::SchemaMismatch, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

template <typename Enum, std::size_t N>
std::string_view name_of(Enum v, const std::array<std::pair<Enum, std::string_view>, N>& table) {
  for (const auto& [value, name] : table)
    if (value == v) return name;
  return "?";
}

constexpr std::array<std::pair<SourceDataset, std::string_view>, 12> kSources{{
    {SourceDataset::CnnDm, "cnn_dm"},
    {SourceDataset::MediaSum, "mediasum"},
    {SourceDataset::DialogSum, "dialogsum"},
    {SourceDataset::MeetingBank, "meetingbank"},
    {SourceDataset::WikiHow, "wikihow"},
    {SourceDataset::GovReport, "govreport"},
    {SourceDataset::PubMed, "pubmed"},
    {SourceDataset::AggreFact, "aggrefact"},
    {SourceDataset::DiaSumFact, "diasumfact"},
    {SourceDataset::TofuEval, "tofueval"},
    {SourceDataset::Ramprasad24, "ramprasad24"},
    {SourceDataset::Custom, "custom"},
}};

constexpr std::array<std::pair<Domain, std::string_view>, 9> kDomains{{
    {Domain::News, "news"},
    {Domain::Interview, "interview"},
    {Domain::Daily, "daily"},
    {Domain::Meeting, "meeting"},
    {Domain::Knowledge, "knowledge"},
    {Domain::Report, "report"},
    {Domain::Medicine, "medicine"},
    {Domain::Legal, "legal"},
    {Domain::Other, "other"},
}};

constexpr std::array<std::pair<DocType, std::string_view>, 2> kDocTypes{{
    {DocType::Dialogue, "dialogue"},
    {DocType::NonDialogue, "non_dialogue"},
}};

constexpr std::array<std::pair<OriginalSplit, std::string_view>, 3> kSplits{{
    {OriginalSplit::Train, "train"},
    {OriginalSplit::Test, "test"},
    {OriginalSplit::Unassigned, "unassigned"},
}};

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Length of a closing quote/bracket at `pos`, 0 if none.
std::size_t closing_len(std::string_view t, std::size_t pos) {
  const char c = t[pos];
  if (c == '"' || c == '\'' || c == ')' || c == ']' || c == '}') return 1;
  // U+201D and U+2019
  if (t.substr(pos, 3) == "\xE2\x80\x9D" || t.substr(pos, 3) == "\xE2\x80\x99") return 3;
  return 0;
}

bool opens_sentence(std::string_view t, std::size_t pos) {
  const auto c = static_cast<unsigned char>(t[pos]);
  if (c >= 'A' && c <= 'Z') return true;
  if (c == '"' || c == '\'' || c == '(' || c == '[') return true;
  // Non-ASCII lead bytes: accented capitals, curly opening quotes and the like.
  return c >= 0x80;
}

const std::unordered_set<std::string_view>& abbreviations() {
  static const std::unordered_set<std::string_view> set{
      "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "Sr.", "Jr.", "St.", "Mt.", "Gen.", "Gov.", "Sen.",
      "Rep.", "Lt.", "Col.", "Capt.", "Sgt.", "Rev.", "Hon.", "U.S.", "U.K.", "U.N.", "E.U.",
      "e.g.", "i.e.", "vs.", "etc.", "Inc.", "Ltd.", "Co.", "Corp.", "No.", "Fig.", "Vol.",
      "Jan.", "Feb.", "Mar.", "Apr.", "Aug.", "Sep.", "Sept.", "Oct.", "Nov.", "Dec.", "a.m.",
      "p.m.", "approx.", "Ph.D.", "D.C."};
  return set;
}

bool is_abbreviation(std::string_view text, std::size_t period_pos) {
  std::size_t begin = period_pos;
  while (begin > 0 && !is_space(static_cast<unsigned char>(text[begin - 1]))) --begin;
  std::string_view token = text.substr(begin, period_pos - begin + 1);
  while (!token.empty() && (token.front() == '(' || token.front() == '"' || token.front() == '\''))
    token.remove_prefix(1);
  if (abbreviations().contains(token)) return true;
  // Single-letter initial: "J."
  return token.size() == 2 && token[0] >= 'A' && token[0] <= 'Z';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

}  // namespace

std::string_view to_string(SourceDataset v) { return name_of(v, kSources); }
std::string_view to_string(Domain v) { return name_of(v, kDomains); }
std::string_view to_string(DocType v) { return name_of(v, kDocTypes); }
std::string_view to_string(OriginalSplit v) { return name_of(v, kSplits); }
SourceDataset parse_source_dataset(std::string_view s) { return parse_enum(s, kSources, "source_dataset"); }
Domain parse_domain(std::string_view s) { return parse_enum(s, kDomains, "domain"); }
DocType parse_doc_type(std::string_view s) { return parse_enum(s, kDocTypes, "doc_type"); }
OriginalSplit parse_original_split(std::string_view s) { return parse_enum(s, kSplits, "original_split"); }

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = is_space(static_cast<unsigned char>(c));
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::vector<std::string> segment_sentences(std::string_view text) {
  if (trim(text).empty()) throw Error(ErrorKind::EmptyInput, "text is empty after trimming");

  std::vector<std::string> sentences;
  std::size_t start = 0;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_terminal(text[i])) continue;
    std::size_t end = i + 1;
    while (end < n && is_terminal(text[end])) ++end;
    while (end < n) {
      const std::size_t len = closing_len(text, end);
      if (len == 0) break;
      end += len;
    }
    if (end >= n || !is_space(static_cast<unsigned char>(text[end]))) continue;
    std::size_t next = end;
    while (next < n && is_space(static_cast<unsigned char>(text[next]))) ++next;
    if (next >= n || !opens_sentence(text, next)) continue;
    if (text[i] == '.' && end == i + 1 && is_abbreviation(text, i)) continue;

    const auto piece = trim(text.substr(start, end - start));
    if (!piece.empty()) sentences.push_back(normalize_whitespace(piece));
    start = next;
    i = next - 1;
  }
  const auto tail = trim(text.substr(start));
  if (!tail.empty()) sentences.push_back(normalize_whitespace(tail));
  return sentences;
}

Document make_document(std::string doc_id, SourceDataset source, Domain domain, DocType doc_type,
                       std::string text) {
  if (trim(text).empty()) throw Error(ErrorKind::EmptyInput, "document '" + doc_id + "' has empty text");
  Document d;
  d.word_count = count_words(text);
  d.doc_id = std::move(doc_id);
  d.source_dataset = source;
  d.domain = domain;
  d.doc_type = doc_type;
  d.text = std::move(text);
  return d;
}

SummaryRecord make_summary(std::string doc_id, std::string summarizer_id,
                           std::vector<std::string> sentences) {
  if (sentences.empty())
    throw Error(ErrorKind::EmptySentences, "summary for '" + doc_id + "' has no sentences");
  for (auto& s : sentences) {
    s = normalize_whitespace(s);
    if (s.empty()) throw Error(ErrorKind::EmptySentences, "summary for '" + doc_id + "' has a blank sentence");
  }
  SummaryRecord r;
  r.raw_text = join_sentences(sentences);
  r.doc_id = std::move(doc_id);
  r.summarizer_id = std::move(summarizer_id);
  r.sentences = std::move(sentences);
  return r;
}

SummaryRecord make_summary_from_text(std::string doc_id, std::string summarizer_id,
                                     std::string_view raw_text) {
  SummaryRecord r = make_summary(std::move(doc_id), std::move(summarizer_id), segment_sentences(raw_text));
  r.raw_text = std::string(raw_text);
  return r;
}

SplitPlan split_train_test(std::span<const OriginalSplit> flags, double test_fraction,
                           std::uint64_t seed) {
  test_fraction = std::clamp(test_fraction, 0.0, 1.0);
  const auto target = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(flags.size())));

  std::vector<char> in_test(flags.size(), 0);
  std::vector<std::size_t> candidates;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == OriginalSplit::Test) {
      in_test[i] = 1;
      ++flagged;
    } else {
      candidates.push_back(i);
    }
  }
  if (flagged < target) {
    Rng rng(seed);
    seeded_shuffle(std::span<std::size_t>(candidates), rng);
    for (std::size_t k = 0; k < target - flagged; ++k) in_test[candidates[k]] = 1;
  }

  SplitPlan plan;
  for (std::size_t i = 0; i < flags.size(); ++i) (in_test[i] ? plan.test : plan.train).push_back(i);
  return plan;
}

Json to_json(const Document& d) {
  Json j;
  j["doc_id"] = d.doc_id;
  j["source_dataset"] = to_string(d.source_dataset);
  j["domain"] = to_string(d.domain);
  j["doc_type"] = to_string(d.doc_type);
  j["text"] = d.text;
  return j;
}

Json to_json(const SummaryRecord& s) {
  Json j;
  j["doc_id"] = s.doc_id;
  j["summarizer_id"] = s.summarizer_id;
  j["sentences"] = s.sentences;
  return j;
}

Json to_json(const HumanAnnotation& a) {
  Json j;
  j["doc_id"] = a.doc_id;
  j["summarizer_id"] = a.summarizer_id;
  Json per = Json::array();
  for (const auto& s : a.per_sentence) {
    Json e;
    e["labels"] = s.labels;
    if (!s.categories.empty()) e["categories"] = s.categories;
    per.push_back(std::move(e));
  }
  j["per_sentence"] = std::move(per);
  j["original_split"] = to_string(a.original_split);
  return j;
}

Document document_from_json(const Json& j) {
  return make_document(require_string(j, "doc_id"), parse_source_dataset(require_string(j, "source_dataset")),
                       parse_domain(require_string(j, "domain")), parse_doc_type(require_string(j, "doc_type")),
                       require_string(j, "text"));
}

SummaryRecord summary_from_json(const Json& j) {
  const Json& sentences = require(j, "sentences");
  if (!sentences.is_array()) throw Error(ErrorKind::SchemaMismatch, "'sentences' must be an array");
  std::vector<std::string> list;
  for (const auto& s : sentences) {
    if (!s.is_string()) throw Error(ErrorKind::SchemaMismatch, "'sentences' must hold strings");
    list.push_back(s.get<std::string>());
  }
  return make_summary(require_string(j, "doc_id"), require_string(j, "summarizer_id"), std::move(list));
}

namespace {

int parse_label(const Json& v) {
  if (v.is_number_integer()) {
    const auto x = v.get<long long>();
    if (x == 0 || x == 1) return static_cast<int>(x);
  }
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  throw Error(ErrorKind::SchemaMismatch, "label must be 0 or 1, got " + v.dump());
}

std::vector<std::string> parse_category_set(const Json& v) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw Error(ErrorKind::SchemaMismatch, "category set must be an array of strings");
  std::vector<std::string> out;
  for (const auto& c : v) {
    if (!c.is_string()) throw Error(ErrorKind::SchemaMismatch, "category must be a string");
    out.push_back(c.get<std::string>());
  }
  return out;
}

}  // namespace

AnnotatedSentence annotated_sentence_from_json(const Json& e) {
  AnnotatedSentence s;
  const Json& labels = require(e, "labels");
  if (!labels.is_array() || labels.empty() || labels.size() > 3)
    throw Error(ErrorKind::SchemaMismatch, "'labels' must hold 1-3 annotator labels");
  for (const auto& l : labels) s.labels.push_back(parse_label(l));
  if (auto it = e.find("categories"); it != e.end() && !it->is_null()) {
    if (!it->is_array() || it->empty() || it->size() > 3)
      throw Error(ErrorKind::SchemaMismatch, "'categories' must hold 1-3 annotator category sets");
    for (const auto& set : *it) s.categories.push_back(parse_category_set(set));
  }
  return s;
}

HumanAnnotation annotation_from_json(const Json& j) {
  HumanAnnotation a;
  a.doc_id = require_string(j, "doc_id");
  a.summarizer_id = require_string(j, "summarizer_id");
  const Json& per = require(j, "per_sentence");
  if (!per.is_array() || per.empty())
    throw Error(ErrorKind::SchemaMismatch, "'per_sentence' must be a non-empty array");
  for (const auto& e : per) a.per_sentence.push_back(annotated_sentence_from_json(e));
  if (auto it = j.find("original_split"); it != j.end() && it->is_string())
    a.original_split = parse_original_split(it->get<std::string>());
  return a;
}

}  // namespace sumfact
