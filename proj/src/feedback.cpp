#include "sumfact/feedback.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace sumfact {

namespace {

const Json* find_any(const Json& obj, std::initializer_list<std::string_view> keys) {
  for (auto key : keys) {
    auto it = obj.find(std::string(key));
    if (it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

std::string text_of(const Json& v, std::string_view key) {
  if (v.is_string()) return v.get<std::string>();
  throw Error(ErrorKind::MissingKey, "'" + std::string(key) + "' must be a string");
}

int verdict_label(const Json& v) {
  if (v.is_number_integer()) {
    const auto x = v.get<long long>();
    if (x == 0 || x == 1) return static_cast<int>(x);
  }
  if (v.is_string()) {
    std::string s = normalize_whitespace(v.get<std::string>());
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "consistent" || s == "0" || s == "factually consistent") return 0;
    if (s == "inconsistent" || s == "1" || s == "factually inconsistent") return 1;
  }
  throw Error(ErrorKind::UnknownCategory, "unrecognized verdict " + v.dump());
}

struct Item {
  std::string sentence;
  std::optional<std::string> reason;
  std::optional<ErrorCategory> category;
  int label = 0;
};

Item read_item(const Json& obj, Granularity g) {
  if (!obj.is_object()) throw Error(ErrorKind::MissingKey, "feedback item is not an object");
  Item item;
  const Json* sentence = find_any(obj, {"sentence"});
  if (sentence == nullptr) throw Error(ErrorKind::MissingKey, "item has no \"sentence\"");
  item.sentence = text_of(*sentence, "sentence");

  if (has_reasoning(g)) {
    const Json* reason = find_any(obj, {"reason", "reasoning"});
    if (reason == nullptr) throw Error(ErrorKind::MissingKey, "item has no \"reason\"");
    item.reason = text_of(*reason, "reason");
  }
  if (has_category(g)) {
    const Json* category = find_any(obj, {"category"});
    if (category == nullptr) throw Error(ErrorKind::MissingKey, "item has no \"category\"");
    item.category = normalize_category(text_of(*category, "category"));
    item.label = to_binary(*item.category);
  } else {
    const Json* verdict = find_any(obj, {"label", "verdict"});
    if (verdict == nullptr) throw Error(ErrorKind::MissingKey, "item has no \"label\"");
    item.label = verdict_label(*verdict);
  }
  return item;
}

// Maps each expected sentence to an item index, or throws WrongArity.
std::vector<std::size_t> align(const std::vector<Item>& items, std::span<const std::string> expected) {
  std::vector<std::size_t> order(expected.size(), items.size());
  if (items.size() == expected.size()) {
    std::vector<std::string> wanted;
    for (const auto& e : expected) wanted.push_back(normalize_whitespace(e));
    std::vector<char> taken(expected.size(), 0);
    bool all_matched = true;
    for (std::size_t i = 0; i < items.size() && all_matched; ++i) {
      const auto got = normalize_whitespace(items[i].sentence);
      all_matched = false;
      for (std::size_t k = 0; k < wanted.size(); ++k) {
        if (!taken[k] && wanted[k] == got) {
          taken[k] = 1;
          order[k] = i;
          all_matched = true;
          break;
        }
      }
    }
    if (all_matched) return order;
    for (std::size_t k = 0; k < expected.size(); ++k) order[k] = k;
    return order;
  }
  throw Error(ErrorKind::WrongArity, "got " + std::to_string(items.size()) + " items for " +
                                         std::to_string(expected.size()) + " sentences");
}

void check(bool ok, const FeedbackRecord& r, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidRecord, "(" + r.doc_id + ", " + r.summarizer_id + "): " + what);
}

}  // namespace

std::string_view to_string(FeedbackSource s) { return s == FeedbackSource::Llm ? "llm" : "human"; }

FeedbackSource parse_feedback_source(std::string_view s) {
  if (s == "llm") return FeedbackSource::Llm;
  if (s == "human") return FeedbackSource::Human;
  throw Error(ErrorKind::SchemaMismatch, "unknown feedback source '" + std::string(s) + "'");
}

double FeedbackRecord::faithfulness() const {
  if (feedback.empty()) return 0.0;
  const auto fact = std::count_if(feedback.begin(), feedback.end(), [](const auto& f) { return f.binary_label == 0; });
  return static_cast<double>(fact) / static_cast<double>(feedback.size());
}

void validate(const FeedbackRecord& r) {
  check(!r.feedback.empty(), r, "no sentences");
  for (std::size_t k = 0; k < r.feedback.size(); ++k) {
    const auto& f = r.feedback[k];
    const std::string at = "sentence " + std::to_string(k + 1) + ": ";
    check(f.sentence_index == k + 1, r, at + "index out of order");
    check(f.binary_label == 0 || f.binary_label == 1, r, at + "label must be 0 or 1");
    check(f.reasoning.has_value() == has_reasoning(r.granularity), r, at + "reason presence does not match granularity");
    check(f.category.has_value() == has_category(r.granularity), r, at + "category presence does not match granularity");
    if (f.category) check(to_binary(*f.category) == f.binary_label, r, at + "label disagrees with category");
  }
}

Json to_json(const FeedbackRecord& r) {
  Json j;
  j["doc_id"] = r.doc_id;
  j["summarizer_id"] = r.summarizer_id;
  j["granularity"] = to_string(r.granularity);
  j["source"] = to_string(r.source);
  j["template_version"] = r.template_version;
  Json items = Json::array();
  for (const auto& f : r.feedback) {
    Json item;
    item["index"] = f.sentence_index;
    item["sentence"] = f.sentence_text;
    if (f.reasoning) item["reason"] = *f.reasoning;
    if (f.category) item["category"] = canonical_name(*f.category);
    item["label"] = f.binary_label;
    items.push_back(std::move(item));
  }
  j["feedback"] = std::move(items);
  j["defaulted"] = r.defaulted;
  return j;
}

FeedbackRecord feedback_record_from_json(const Json& j) {
  FeedbackRecord r;
  r.doc_id = require_string(j, "doc_id");
  r.summarizer_id = require_string(j, "summarizer_id");
  r.granularity = parse_granularity(require_string(j, "granularity"));
  r.source = parse_feedback_source(require_string(j, "source"));
  r.template_version = require_string(j, "template_version");
  if (auto it = j.find("defaulted"); it != j.end() && it->is_boolean()) r.defaulted = it->get<bool>();
  const Json& items = require(j, "feedback");
  if (!items.is_array()) throw Error(ErrorKind::SchemaMismatch, "'feedback' must be an array");
  for (const auto& item : items) {
    SentenceFeedback f;
    const Json& index = require(item, "index");
    if (!index.is_number_unsigned()) throw Error(ErrorKind::SchemaMismatch, "'index' must be a positive integer");
    f.sentence_index = index.get<std::size_t>();
    f.sentence_text = require_string(item, "sentence");
    if (auto it = item.find("reason"); it != item.end() && it->is_string()) f.reasoning = it->get<std::string>();
    if (auto it = item.find("category"); it != item.end() && it->is_string())
      f.category = normalize_category(it->get<std::string>());
    const Json& label = require(item, "label");
    if (!label.is_number_integer()) throw Error(ErrorKind::SchemaMismatch, "'label' must be 0 or 1");
    f.binary_label = label.get<int>();
    r.feedback.push_back(std::move(f));
  }
  try {
    validate(r);
  } catch (const Error& e) {
    throw Error(ErrorKind::SchemaMismatch, e.what());
  }
  return r;
}

std::vector<SentenceFeedback> parse_feedback(std::string_view raw, std::span<const std::string> expected_sentences,
                                             Granularity granularity) {
  if (expected_sentences.empty()) throw Error(ErrorKind::EmptySentences, "no expected sentences");
  const Json list = Json::parse(extract_json_block(raw));

  std::vector<Item> items;
  for (const auto& obj : list) items.push_back(read_item(obj, granularity));
  const auto order = align(items, expected_sentences);

  std::vector<SentenceFeedback> out;
  out.reserve(expected_sentences.size());
  for (std::size_t k = 0; k < expected_sentences.size(); ++k) {
    const Item& item = items[order[k]];
    out.push_back({k + 1, expected_sentences[k], item.reason, item.category, item.label});
  }
  return out;
}

std::string serialize_feedback(std::span<const SentenceFeedback> feedback, Granularity granularity) {
  Json list = Json::array();
  for (const auto& f : feedback) {
    Json item;
    item["sentence"] = f.sentence_text;
    if (has_reasoning(granularity)) item["reason"] = f.reasoning.value_or("");
    if (has_category(granularity)) {
      item["category"] = canonical_name(f.category.value_or(f.binary_label == 0 ? ErrorCategory::NoError
                                                                               : ErrorCategory::Other));
    } else {
      item["label"] = f.binary_label == 0 ? "consistent" : "inconsistent";
    }
    list.push_back(std::move(item));
  }
  return dump_compact(list);
}

bool is_parse_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NoJsonFound:
    case ErrorKind::UnbalancedBrackets:
    case ErrorKind::WrongArity:
    case ErrorKind::UnknownCategory:
    case ErrorKind::MissingKey:
      return true;
    default:
      return false;
  }
}

ParsedFeedback feedback_with_retry(const std::function<std::string()>& generate,
                                   std::span<const std::string> expected_sentences, Granularity granularity,
                                   std::size_t max_attempts) {
  if (max_attempts == 0) throw Error(ErrorKind::InvalidConfig, "max_attempts must be at least 1");
  ErrorKind last_kind = ErrorKind::NoJsonFound;
  std::string last_message;
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    const std::string raw = generate();
    try {
      return {parse_feedback(raw, expected_sentences, granularity), attempt};
    } catch (const Error& e) {
      if (!is_parse_error(e.kind())) throw;
      last_kind = e.kind();
      last_message = e.what();
    }
  }
  throw ExhaustedError(max_attempts, last_kind, last_message);
}

FeedbackRecord default_prediction(std::string doc_id, std::string summarizer_id,
                                  std::span<const std::string> sentences, Granularity granularity,
                                  std::string template_version) {
  FeedbackRecord r;
  r.doc_id = std::move(doc_id);
  r.summarizer_id = std::move(summarizer_id);
  r.granularity = granularity;
  r.source = FeedbackSource::Llm;
  r.template_version = std::move(template_version);
  r.defaulted = true;
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    SentenceFeedback f;
    f.sentence_index = k + 1;
    f.sentence_text = sentences[k];
    if (has_reasoning(granularity)) f.reasoning = std::string{};
    if (has_category(granularity)) f.category = ErrorCategory::NoError;
    f.binary_label = 0;
    r.feedback.push_back(std::move(f));
  }
  return r;
}

Json to_json(const ConsolidationCounts& c) {
  Json j;
  j["records_in"] = c.records_in;
  j["records_kept"] = c.records_kept;
  j["records_dropped"] = c.records_dropped;
  j["sentences_agreed_no_error"] = c.sentences_agreed_no_error;
  j["sentences_agreed_error"] = c.sentences_agreed_error;
  j["sentences_disagreed"] = c.sentences_disagreed;
  j["sentences_passed_through"] = c.sentences_passed_through;
  return j;
}

std::optional<HumanAnnotation> consolidate_annotation(const HumanAnnotation& annotation, ConsolidationCounts& counts) {
  ++counts.records_in;
  HumanAnnotation out = annotation;
  bool keep = true;
  for (auto& s : out.per_sentence) {
    if (s.labels.size() != 2) {
      ++counts.sentences_passed_through;
      continue;
    }
    const auto agreed = consolidate(s.labels[0], s.labels[1]);
    if (!agreed) {
      ++counts.sentences_disagreed;
      keep = false;
      continue;
    }
    ++(*agreed == 0 ? counts.sentences_agreed_no_error : counts.sentences_agreed_error);
    s.labels = {*agreed};
  }
  if (!keep) {
    ++counts.records_dropped;
    return std::nullopt;
  }
  ++counts.records_kept;
  return out;
}

std::optional<int> gold_label(const AnnotatedSentence& sentence) {
  const auto& l = sentence.labels;
  switch (l.size()) {
    case 1: return l[0];
    case 2: return consolidate(l[0], l[1]);
    case 3: return (l[0] + l[1] + l[2]) >= 2 ? 1 : 0;
    default: throw Error(ErrorKind::SchemaMismatch, "a sentence needs 1-3 annotator labels");
  }
}

std::vector<ErrorCategory> gold_categories(const AnnotatedSentence& sentence) {
  std::set<ErrorCategory> seen;
  for (const auto& set : sentence.categories)
    for (const auto& name : set) seen.insert(normalize_category(name));
  return {seen.begin(), seen.end()};
}

}  // namespace sumfact
