#include <set>

#include "helpers.hpp"
#include "mock_endpoint.hpp"
#include "sumfact/exporter.hpp"

using namespace sumfact;

namespace {

Document worked_example_document() {
  return make_document("t7", SourceDataset::Custom, Domain::Knowledge, DocType::NonDialogue,
                       testing::read_fixture("worked_example/document.txt"));
}

std::vector<std::string> worked_example_sentences() {
  return Json::parse(testing::read_fixture("worked_example/sentences.json")).get<std::vector<std::string>>();
}

FeedbackRecord worked_example_record() {
  FeedbackRecord r;
  r.doc_id = "t7";
  r.summarizer_id = "bart";
  r.granularity = Granularity::FullLocalization;
  r.template_version = template_for(r.granularity).version_tag();
  r.feedback = parse_feedback(testing::read_fixture("worked_example/output.txt"), worked_example_sentences(), r.granularity);
  return r;
}

FeedbackRecord synthetic(const std::string& doc, const std::string& sys, Granularity g, std::vector<int> labels) {
  FeedbackRecord r;
  r.doc_id = doc;
  r.summarizer_id = sys;
  r.granularity = g;
  r.template_version = template_for(g).version_tag();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    SentenceFeedback f{k + 1, "Sentence " + std::to_string(k + 1) + " of " + sys + ".", std::nullopt, std::nullopt,
                       labels[k]};
    if (has_reasoning(g)) f.reasoning = labels[k] ? "not supported" : "supported";
    if (has_category(g)) f.category = labels[k] ? ErrorCategory::Circumstantial : ErrorCategory::NoError;
    r.feedback.push_back(f);
  }
  return r;
}

std::vector<SftExample> numbered_examples(std::size_t n) {
  std::vector<SftExample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"u" + std::to_string(i), "a", {"d" + std::to_string(i), "m"}});
  return out;
}

}  // namespace

TEST_CASE("worked example exports to a prompt and a [0,0,1] assistant") {
  const Document doc = worked_example_document();
  const DocumentIndex index = index_documents(std::span<const Document>(&doc, 1));
  const FeedbackRecord rec = worked_example_record();
  const auto examples = export_sft(std::span<const FeedbackRecord>(&rec, 1), index, Granularity::FullLocalization);
  REQUIRE(examples.size() == 1);
  const auto& e = examples[0];
  CHECK(e.user == build_prompt(Granularity::FullLocalization, doc, worked_example_sentences()).body);
  CHECK(e.meta.template_version == "full_localization@1");
  const auto back = parse_sft_assistant(e);
  CHECK(back.size() == 3);
  CHECK(back[0].binary_label == 0);
  CHECK(back[1].binary_label == 0);
  CHECK(back[2].binary_label == 1);
  CHECK(back == rec.feedback);
  const Json item = Json::parse(e.assistant)[2];
  CHECK(item["category"] == "out-of-context error");
}

TEST_CASE("binary export carries neither reasons nor categories") {
  const Document doc = make_document("d1", SourceDataset::CnnDm, Domain::News, DocType::NonDialogue, "Body text.");
  const auto index = index_documents(std::span<const Document>(&doc, 1));
  const auto rec = synthetic("d1", "m", Granularity::Binary, {0, 1});
  const auto e = export_sft(std::span<const FeedbackRecord>(&rec, 1), index, Granularity::Binary)[0];
  for (const auto& item : Json::parse(e.assistant)) {
    CHECK_FALSE(item.contains("reason"));
    CHECK_FALSE(item.contains("category"));
    CHECK(item.contains("label"));
  }
}

TEST_CASE("SFT lines round-trip and are deterministic") {
  std::vector<Document> docs;
  std::vector<FeedbackRecord> recs;
  for (int d = 0; d < 4; ++d) {
    const std::string id = "doc" + std::to_string(d);
    docs.push_back(make_document(id, SourceDataset::MediaSum, Domain::Interview, DocType::Dialogue,
                                 "Speaker A: hello number " + std::to_string(d) + "."));
  }
  for (auto g : kAllGranularities) {
    recs.clear();
    for (int d = 3; d >= 0; --d)
      for (const char* sys : {"zeta", "alpha"})
        recs.push_back(synthetic("doc" + std::to_string(d), sys, g, {d % 2, 0, 1}));
    const auto index = index_documents(docs);
    const auto a = export_sft(recs, index, g);
    std::reverse(recs.begin(), recs.end());
    const auto b = export_sft(recs, index, g);
    CHECK(a == b);
    CHECK(a.front().meta.doc_id == "doc0");
    CHECK(a.front().meta.summarizer_id == "alpha");
    for (const auto& e : a) {
      const std::string line = dump_compact(to_json(e));
      CHECK(line.find('\n') == std::string::npos);
      const auto back = sft_example_from_json(Json::parse(line));
      CHECK(back == e);
      CHECK(dump_compact(to_json(back)) == line);
      std::vector<int> labels;
      for (const auto& f : parse_sft_assistant(back)) labels.push_back(f.binary_label);
      const auto& src = *std::find_if(recs.begin(), recs.end(), [&](const FeedbackRecord& r) {
        return r.doc_id == e.meta.doc_id && r.summarizer_id == e.meta.summarizer_id;
      });
      std::vector<int> expected;
      for (const auto& f : src.feedback) expected.push_back(f.binary_label);
      CHECK(labels == expected);
    }
  }
}

TEST_CASE("export rejects records that cannot be training targets") {
  const Document doc = make_document("d1", SourceDataset::CnnDm, Domain::News, DocType::NonDialogue, "Body text.");
  const auto index = index_documents(std::span<const Document>(&doc, 1));
  auto check_rejected = [&](FeedbackRecord r, Granularity g) {
    CHECK_ERROR_KIND(export_sft(std::span<const FeedbackRecord>(&r, 1), index, g), ErrorKind::InvalidRecord);
  };
  auto r = synthetic("d1", "m", Granularity::Binary, {0});
  r.source = FeedbackSource::Human;
  check_rejected(r, Granularity::Binary);
  r = synthetic("d1", "m", Granularity::Binary, {0});
  r.defaulted = true;
  check_rejected(r, Granularity::Binary);
  check_rejected(synthetic("d1", "m", Granularity::Binary, {0}), Granularity::FullLocalization);
  r = synthetic("d1", "m", Granularity::Binary, {0});
  r.template_version = "binary@0";
  check_rejected(r, Granularity::Binary);
  check_rejected(synthetic("missing", "m", Granularity::Binary, {0}), Granularity::Binary);
  const std::vector<FeedbackRecord> twice{synthetic("d1", "m", Granularity::Binary, {0}),
                                          synthetic("d1", "m", Granularity::Binary, {1})};
  CHECK_ERROR_KIND(export_sft(twice, index, Granularity::Binary), ErrorKind::InvalidRecord);
}

TEST_CASE("documents with a reused id must agree") {
  const std::vector<Document> docs{
      make_document("d", SourceDataset::CnnDm, Domain::News, DocType::NonDialogue, "One."),
      make_document("d", SourceDataset::CnnDm, Domain::News, DocType::NonDialogue, "One."),
  };
  CHECK(index_documents(docs).size() == 1);
  const std::vector<Document> clash{docs[0],
                                    make_document("d", SourceDataset::CnnDm, Domain::News, DocType::NonDialogue, "Two.")};
  CHECK_ERROR_KIND(index_documents(clash), ErrorKind::DuplicateId);
}

TEST_CASE("strict SFT schema") {
  const Json good = to_json(SftExample{"u", "a", {"d", "m", Granularity::Binary, "binary@1"}});
  CHECK_NOTHROW(sft_example_from_json(good));
  Json bad = good;
  bad["messages"][0]["role"] = "system";
  CHECK_ERROR_KIND(sft_example_from_json(bad), ErrorKind::SchemaMismatch);
  bad = good;
  bad["messages"].erase(1);
  CHECK_ERROR_KIND(sft_example_from_json(bad), ErrorKind::SchemaMismatch);
  bad = good;
  bad["meta"]["granularity"] = "sentence";
  CHECK_ERROR_KIND(sft_example_from_json(bad), ErrorKind::SchemaMismatch);
  bad = good;
  bad.erase("meta");
  CHECK_ERROR_KIND(sft_example_from_json(bad), ErrorKind::SchemaMismatch);
  bad = good;
  bad["messages"][1]["content"] = 3;
  CHECK_ERROR_KIND(sft_example_from_json(bad), ErrorKind::SchemaMismatch);
}

TEST_CASE("subsample cardinality, order and nesting") {
  const auto all = numbered_examples(1000);
  std::vector<std::set<std::string>> ids;
  for (double f : {1.0, 0.5, 0.25, 0.125}) {
    const auto s = subsample(all, f, 42);
    CHECK(s.size() == static_cast<std::size_t>(std::llround(f * 1000)));
    CHECK(std::is_sorted(s.begin(), s.end(), [](const SftExample& a, const SftExample& b) {
      return std::stoi(a.meta.doc_id.substr(1)) < std::stoi(b.meta.doc_id.substr(1));
    }));
    std::set<std::string> cur;
    for (const auto& e : s) cur.insert(e.meta.doc_id);
    if (!ids.empty()) CHECK(std::includes(ids.back().begin(), ids.back().end(), cur.begin(), cur.end()));
    ids.push_back(cur);
  }
  CHECK(subsample(all, 0.5, 42) == subsample(all, 0.5, 42));
  CHECK_FALSE(subsample(all, 0.5, 42) == subsample(all, 0.5, 43));
  CHECK(subsample(numbered_examples(3), 0.5, 1).size() == 2);
  CHECK_ERROR_KIND(subsample(all, 0.0, 1), ErrorKind::InvalidConfig);
  CHECK_ERROR_KIND(subsample(all, 1.5, 1), ErrorKind::InvalidConfig);
  CHECK_ERROR_KIND(subsample(all, -0.1, 1), ErrorKind::InvalidConfig);
}

TEST_CASE("dataset statistics") {
  const auto empty = dataset_stats({}, {});
  CHECK(empty.per_source.empty());
  CHECK(empty.total == SourceStats{});
  CHECK(to_json(empty)["total"]["documents"] == 0);

  std::string ten, twenty;
  for (int i = 0; i < 10; ++i) ten += "word ";
  twenty = ten + ten;
  const std::vector<Document> docs{
      make_document("a", SourceDataset::CnnDm, Domain::News, DocType::NonDialogue, ten),
      make_document("b", SourceDataset::CnnDm, Domain::News, DocType::NonDialogue, twenty),
      make_document("b", SourceDataset::CnnDm, Domain::News, DocType::NonDialogue, twenty),
  };
  const std::vector<FeedbackRecord> recs{synthetic("a", "m", Granularity::Binary, {0, 1}),
                                         synthetic("b", "m", Granularity::Binary, {0}),
                                         synthetic("zzz", "m", Granularity::Binary, {1})};
  const auto stats = dataset_stats(docs, recs, 4);
  const auto& cnn = stats.per_source.at("cnn_dm");
  CHECK(cnn.documents == 2);
  CHECK(cnn.summaries == 2);
  CHECK(cnn.min_words == 10);
  CHECK(cnn.max_words == 20);
  CHECK(cnn.mean_words == 15.0);
  CHECK(cnn.label0_sentences == 2);
  CHECK(cnn.label1_sentences == 1);
  CHECK(stats.per_source.at("unknown").summaries == 1);
  CHECK(stats.total.summaries == 3);
  CHECK(stats.total.label1_sentences == 2);
  CHECK(stats.excluded_records == 4);
}
