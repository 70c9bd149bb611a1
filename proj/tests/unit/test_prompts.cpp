#include <algorithm>
#include <fstream>

#include "helpers.hpp"
#include "mock_endpoint.hpp"
#include "sumfact/jsonl.hpp"
#include "sumfact/prompts.hpp"
#include "sumfact/random.hpp"
#include "sumfact/taxonomy.hpp"

using namespace sumfact;

namespace {

std::size_t occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

Document worked_example_document() {
  std::string text = testing::read_fixture("worked_example/document.txt");
  while (!text.empty() && text.back() == '\n') text.pop_back();
  return make_document("PubMed-28493", SourceDataset::PubMed, Domain::Medicine, DocType::NonDialogue, text);
}

std::vector<std::string> worked_example_sentences() {
  return Json::parse(testing::read_fixture("worked_example/sentences.json")).get<std::vector<std::string>>();
}

}  // namespace

TEST_CASE("full localization prompt on the worked example") {
  const auto doc = worked_example_document();
  const auto sentences = worked_example_sentences();
  const auto p = build_prompt(Granularity::FullLocalization, doc, sentences);
  CHECK(p.sentence_count == 3);
  CHECK(p.granularity == Granularity::FullLocalization);
  CHECK(p.template_version == "full_localization@1");
  CHECK(p.body.rfind("You will receive a document followed by a corresponding summary.\n", 0) == 0);
  CHECK(p.body.find("across nine categories:\n* no error: ") != std::string::npos);
  CHECK(p.body.find("\n\nDocument:\n" + doc.text + "\n\nSummary with 3 sentences:\n[1] " + sentences[0] + "\n[2] " +
                    sentences[1] + "\n[3] " + sentences[2] + "\n\nJSON Output:") != std::string::npos);
  CHECK(p.body.substr(p.body.size() - 12) == "JSON Output:");
  CHECK(p.body.find("keys are \"sentence\", \"reason\", and \"category\"") != std::string::npos);
}

TEST_CASE("category completeness: each of the nine names listed exactly once") {
  const auto p = build_prompt(Granularity::FullLocalization,
                              make_document("d", SourceDataset::Custom, Domain::Other, DocType::NonDialogue, "Text."),
                              std::vector<std::string>{"Text."});
  for (auto c : kAllCategories) CHECK(occurrences(p.body, "* " + std::string(canonical_name(c)) + ":") == 1);
}

TEST_CASE("binary prompt names no category and has one numbered line") {
  const auto doc = make_document("d", SourceDataset::Custom, Domain::Other, DocType::NonDialogue, "The sky is blue.");
  for (auto g : {Granularity::Binary, Granularity::BinaryReasoning}) {
    const auto p = build_prompt(g, doc, std::vector<std::string>{"The sky is green."});
    for (auto c : kAllCategories) CHECK(p.body.find(std::string(canonical_name(c))) == std::string::npos);
    CHECK(occurrences(p.body, "[1]") == 1);
    CHECK(occurrences(p.body, "[2]") == 0);
    CHECK(p.body.find("\"category\"") == std::string::npos);
  }
  const auto bin = build_prompt(Granularity::Binary, doc, std::vector<std::string>{"x."});
  CHECK(bin.body.find("\"reason\"") == std::string::npos);
  const auto rea = build_prompt(Granularity::BinaryReasoning, doc, std::vector<std::string>{"x."});
  CHECK(rea.body.find("\"reason\"") != std::string::npos);
}

TEST_CASE("prompts are deterministic") {
  const auto doc = worked_example_document();
  const auto s = worked_example_sentences();
  for (auto g : kAllGranularities) CHECK(build_prompt(g, doc, s) == build_prompt(g, doc, s));
}

TEST_CASE("instruction steps grow monotonically with granularity") {
  auto steps = [](Granularity g) {
    auto v = template_for(g).steps;
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto b = steps(Granularity::Binary);
  const auto r = steps(Granularity::BinaryReasoning);
  const auto f = steps(Granularity::FullLocalization);
  CHECK(std::includes(r.begin(), r.end(), b.begin(), b.end()));
  CHECK(std::includes(f.begin(), f.end(), r.begin(), r.end()));
  CHECK(b.size() < r.size());
  CHECK(r.size() < f.size());
}

TEST_CASE("template metadata") {
  CHECK_FALSE(template_for(Granularity::FullLocalization).reconstructed);
  CHECK(template_for(Granularity::Binary).reconstructed);
  CHECK(template_for(Granularity::BinaryReasoning).reconstructed);
  CHECK(template_for(Granularity::Binary).version_tag() == "binary@1");
  CHECK(summary_template().body.find("{document}") != std::string::npos);
}

TEST_CASE("index integrity over random summaries") {
  Rng rng(5);
  const auto doc = make_document("d", SourceDataset::Custom, Domain::Other, DocType::NonDialogue, "Doc text here.");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> sentences;
    const auto n = 1 + uniform_below(rng, 12);
    for (std::uint64_t k = 0; k < n; ++k) sentences.push_back("Sentence " + std::to_string(uniform_below(rng, 1000)) + ".");
    for (auto g : kAllGranularities) {
      const auto p = build_prompt(g, doc, sentences);
      for (std::size_t k = 0; k < n; ++k)
        CHECK(p.body.find("[" + std::to_string(k + 1) + "] " + sentences[k] + "\n") != std::string::npos);
      const auto parts = parse_prompt(p.body);
      CHECK(parts.sentences == sentences);
      CHECK(parts.document == doc.text);
    }
  }
}

TEST_CASE("slot-like text in values is never expanded") {
  const auto doc = make_document("d", SourceDataset::Custom, Domain::Other, DocType::NonDialogue,
                                 "Braces {numbered_sentences} and {sentence_count} stay.");
  const auto p = build_prompt(Granularity::Binary, doc, std::vector<std::string>{"A {document} sentence."});
  CHECK(p.body.find("Braces {numbered_sentences} and {sentence_count} stay.") != std::string::npos);
  CHECK(p.body.find("[1] A {document} sentence.") != std::string::npos);
  const auto parts = parse_prompt(p.body);
  CHECK(parts.document == doc.text);
  CHECK(parts.sentences == std::vector<std::string>{"A {document} sentence."});
}

TEST_CASE("empty sentence list is rejected") {
  const auto doc = make_document("d", SourceDataset::Custom, Domain::Other, DocType::NonDialogue, "Text.");
  CHECK_ERROR_KIND(build_prompt(Granularity::Binary, doc, std::vector<std::string>{}), ErrorKind::EmptySentences);
}

TEST_CASE("granularity names") {
  CHECK(parse_granularity("binary") == Granularity::Binary);
  CHECK(parse_granularity("reasoning") == Granularity::BinaryReasoning);
  CHECK(parse_granularity("localization") == Granularity::FullLocalization);
  CHECK(parse_granularity("full_localization") == Granularity::FullLocalization);
  CHECK(to_string(Granularity::BinaryReasoning) == "binary_reasoning");
  CHECK_ERROR_KIND(parse_granularity("coarse"), ErrorKind::InvalidConfig);
}

TEST_CASE("template asset parsing") {
  const auto t = parse_template_asset("name: x\nversion: 3\nreconstructed: true\nsteps: a, b\n---\nHello {document}\n");
  CHECK(t.version_tag() == "x@3");
  CHECK(t.steps == std::vector<std::string>{"a", "b"});
  CHECK(t.body == "Hello {document}");
  CHECK(render(t, {{"document", "world"}}) == "Hello world");
  CHECK_ERROR_KIND(parse_template_asset("no header"), ErrorKind::SchemaMismatch);
  CHECK_ERROR_KIND(parse_template_asset("steps: a\n---\nbody"), ErrorKind::SchemaMismatch);
}

TEST_CASE("summary prompt embeds the document") {
  const auto doc = make_document("d", SourceDataset::Custom, Domain::Other, DocType::NonDialogue, "Alpha. Beta.");
  const auto body = build_summary_prompt(doc);
  CHECK(body.find("Document:\nAlpha. Beta.\n") != std::string::npos);
  CHECK(body.find("{document}") == std::string::npos);
}
