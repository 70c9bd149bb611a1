#include <algorithm>

#include "helpers.hpp"
#include "mock_endpoint.hpp"
#include "sumfact/feedback.hpp"
#include "sumfact/random.hpp"

using namespace sumfact;

namespace {

std::vector<std::string> worked_example_sentences() {
  return Json::parse(testing::read_fixture("worked_example/sentences.json")).get<std::vector<std::string>>();
}

const std::vector<std::string> kThree{"Alpha is first.", "Beta is second.", "Gamma is third."};

FeedbackRecord sample_record(Granularity g) {
  FeedbackRecord r;
  r.doc_id = "d1";
  r.summarizer_id = "m1";
  r.granularity = g;
  r.template_version = template_for(g).version_tag();
  for (std::size_t k = 0; k < kThree.size(); ++k) {
    SentenceFeedback f;
    f.sentence_index = k + 1;
    f.sentence_text = kThree[k];
    f.binary_label = k == 2 ? 1 : 0;
    if (has_reasoning(g)) f.reasoning = "because " + std::to_string(k);
    if (has_category(g)) f.category = k == 2 ? ErrorCategory::Entity : ErrorCategory::NoError;
    r.feedback.push_back(f);
  }
  return r;
}

}  // namespace

TEST_CASE("worked example parses to [no_error, no_error, out_of_context]") {
  const auto fb = parse_feedback(testing::read_fixture("worked_example/output.txt"), worked_example_sentences(),
                                 Granularity::FullLocalization);
  REQUIRE(fb.size() == 3);
  CHECK(fb[0].category == ErrorCategory::NoError);
  CHECK(fb[1].category == ErrorCategory::NoError);
  CHECK(fb[2].category == ErrorCategory::OutOfContext);
  CHECK(fb[0].binary_label == 0);
  CHECK(fb[1].binary_label == 0);
  CHECK(fb[2].binary_label == 1);
  CHECK(fb[2].reasoning.value().find("criticism of existing models") != std::string::npos);
  for (std::size_t k = 0; k < 3; ++k) CHECK(fb[k].sentence_index == k + 1);
}

TEST_CASE("arity mismatch is WrongArity") {
  const std::string two = R"([{"sentence":"Alpha is first.","reason":"r","category":"no error"},
                              {"sentence":"Beta is second.","reason":"r","category":"no error"}])";
  CHECK_ERROR_KIND(parse_feedback(two, kThree, Granularity::FullLocalization), ErrorKind::WrongArity);
}

TEST_CASE("case variants of category names normalize") {
  const std::string one = R"([{"sentence":"Alpha is first.","reason":"r","category":"No Error"}])";
  const auto fb = parse_feedback(one, std::vector<std::string>{"Alpha is first."}, Granularity::FullLocalization);
  CHECK(fb[0].category == ErrorCategory::NoError);
}

TEST_CASE("unknown category and missing keys are parse errors") {
  const std::vector<std::string> one{"Alpha is first."};
  CHECK_ERROR_KIND(parse_feedback(R"([{"sentence":"Alpha is first.","reason":"r","category":"hallucination"}])", one,
                                  Granularity::FullLocalization),
                   ErrorKind::UnknownCategory);
  CHECK_ERROR_KIND(parse_feedback(R"([{"sentence":"Alpha is first.","category":"no error"}])", one,
                                  Granularity::FullLocalization),
                   ErrorKind::MissingKey);
  CHECK_ERROR_KIND(parse_feedback(R"([{"reason":"r","category":"no error"}])", one, Granularity::FullLocalization),
                   ErrorKind::MissingKey);
  CHECK_ERROR_KIND(parse_feedback(R"([{"sentence":"Alpha is first."}])", one, Granularity::Binary),
                   ErrorKind::MissingKey);
  CHECK_ERROR_KIND(parse_feedback("no json here", one, Granularity::Binary), ErrorKind::NoJsonFound);
}

TEST_CASE("alignment: text match reorders, paraphrase falls back to position") {
  const std::string shuffled = R"([{"sentence":"Gamma   is third.","label":"inconsistent"},
                                   {"sentence":"Alpha is first.","label":"consistent"},
                                   {"sentence":"Beta is second.","label":"consistent"}])";
  auto fb = parse_feedback(shuffled, kThree, Granularity::Binary);
  CHECK(fb[0].binary_label == 0);
  CHECK(fb[2].binary_label == 1);
  CHECK(fb[2].sentence_text == "Gamma is third.");

  const std::string paraphrased = R"([{"sentence":"A first.","label":1},{"sentence":"B second.","label":0},
                                      {"sentence":"C third.","label":0}])";
  fb = parse_feedback(paraphrased, kThree, Granularity::Binary);
  CHECK(fb[0].binary_label == 1);
  CHECK(fb[0].sentence_text == kThree[0]);
}

TEST_CASE("binary verdict vocabulary") {
  const std::vector<std::string> one{"Alpha is first."};
  auto label_of = [&](const std::string& v) {
    return parse_feedback(R"([{"sentence":"Alpha is first.","label":)" + v + "}]", one, Granularity::Binary)[0]
        .binary_label;
  };
  CHECK(label_of("\"consistent\"") == 0);
  CHECK(label_of("\"Inconsistent\"") == 1);
  CHECK(label_of("0") == 0);
  CHECK(label_of("1") == 1);
  CHECK(parse_feedback(R"([{"sentence":"Alpha is first.","verdict":"inconsistent"}])", one, Granularity::Binary)[0]
            .binary_label == 1);
  CHECK_ERROR_KIND(label_of("\"maybe\""), ErrorKind::UnknownCategory);
}

TEST_CASE("reasoning alias is accepted") {
  const auto fb = parse_feedback(R"([{"sentence":"Alpha is first.","reasoning":"why","category":"entity error"}])",
                                 std::vector<std::string>{"Alpha is first."}, Granularity::FullLocalization);
  CHECK(fb[0].reasoning == "why");
  CHECK(fb[0].binary_label == 1);
}

TEST_CASE("serialize then parse round-trips at every granularity") {
  for (auto g : kAllGranularities) {
    const auto r = sample_record(g);
    const std::string text = serialize_feedback(r.feedback, g);
    CHECK(parse_feedback(text, kThree, g) == r.feedback);
    const Json j = Json::parse(text);
    CHECK(j[0].contains("reason") == has_reasoning(g));
    CHECK(j[0].contains("category") == has_category(g));
    CHECK(j[0].contains("label") == !has_category(g));
    CHECK(j[0].begin().key() == "sentence");
  }
}

TEST_CASE("full localization serialization uses the worked example key order") {
  const auto text = serialize_feedback(sample_record(Granularity::FullLocalization).feedback, Granularity::FullLocalization);
  CHECK(text.rfind(R"([{"sentence":"Alpha is first.","reason":"because 0","category":"no error"})", 0) == 0);
}

TEST_CASE("faithfulness is the fraction of zero labels") {
  CHECK(sample_record(Granularity::Binary).faithfulness() == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    FeedbackRecord r;
    const auto n = 1 + uniform_below(rng, 15);
    std::size_t zeros = 0;
    for (std::uint64_t k = 0; k < n; ++k) {
      const int label = static_cast<int>(uniform_below(rng, 2));
      zeros += label == 0 ? 1 : 0;
      r.feedback.push_back({k + 1, "s", std::nullopt, std::nullopt, label});
    }
    CHECK(r.faithfulness() == static_cast<double>(zeros) / static_cast<double>(n));
  }
}

TEST_CASE("record validation and JSON codec") {
  for (auto g : kAllGranularities) {
    const auto r = sample_record(g);
    CHECK_NOTHROW(validate(r));
    CHECK(feedback_record_from_json(to_json(r)) == r);
  }
  auto bad = sample_record(Granularity::FullLocalization);
  bad.feedback[0].binary_label = 1;
  CHECK_ERROR_KIND(validate(bad), ErrorKind::InvalidRecord);
  bad = sample_record(Granularity::Binary);
  bad.feedback[1].reasoning = "extra";
  CHECK_ERROR_KIND(validate(bad), ErrorKind::InvalidRecord);
  bad = sample_record(Granularity::Binary);
  bad.feedback[1].sentence_index = 7;
  CHECK_ERROR_KIND(validate(bad), ErrorKind::InvalidRecord);

  Json j = to_json(sample_record(Granularity::Binary));
  CHECK(j["feedback"][0]["index"] == 1);
  CHECK(j["defaulted"] == false);
  j["feedback"][0]["label"] = 5;
  CHECK_ERROR_KIND(feedback_record_from_json(j), ErrorKind::SchemaMismatch);
}

TEST_CASE("consolidate truth table and symmetry") {
  CHECK(consolidate(0, 0) == 0);
  CHECK(consolidate(1, 1) == 1);
  CHECK_FALSE(consolidate(0, 1).has_value());
  CHECK_FALSE(consolidate(1, 0).has_value());
  for (int a : {0, 1})
    for (int b : {0, 1}) CHECK(consolidate(a, b) == consolidate(b, a));
  static_assert(consolidate(1, 1) == 1);
}

TEST_CASE("record consolidation drops disagreements and passes single labels through") {
  ConsolidationCounts counts;
  HumanAnnotation agreed{"d", "m", {{{0, 0}, {}}, {{1, 1}, {}}}, OriginalSplit::Unassigned};
  auto kept = consolidate_annotation(agreed, counts);
  REQUIRE(kept.has_value());
  CHECK(kept->per_sentence[0].labels == std::vector<int>{0});
  CHECK(kept->per_sentence[1].labels == std::vector<int>{1});

  HumanAnnotation split{"d", "m2", {{{0, 0}, {}}, {{0, 1}, {}}}, OriginalSplit::Unassigned};
  CHECK_FALSE(consolidate_annotation(split, counts).has_value());

  HumanAnnotation single{"d", "m3", {{{1}, {}}}, OriginalSplit::Test};
  kept = consolidate_annotation(single, counts);
  REQUIRE(kept.has_value());
  CHECK(*kept == single);

  CHECK(counts == ConsolidationCounts{3, 2, 1, 2, 1, 1, 1});
  CHECK(to_json(counts)["records_dropped"] == 1);
}

TEST_CASE("gold labels and categories") {
  CHECK(gold_label({{1}, {}}) == 1);
  CHECK(gold_label({{0, 0}, {}}) == 0);
  CHECK_FALSE(gold_label({{0, 1}, {}}).has_value());
  CHECK(gold_label({{0, 1, 1}, {}}) == 1);
  CHECK(gold_label({{0, 0, 1}, {}}) == 0);
  const AnnotatedSentence s{{1, 1, 1}, {{"EntE"}, {"OutE", "entity error"}, {}}};
  CHECK(gold_categories(s) == std::vector<ErrorCategory>{ErrorCategory::OutOfContext, ErrorCategory::Entity});
  CHECK_ERROR_KIND(gold_categories({{1}, {{"typo"}}}), ErrorKind::UnknownCategory);
}

TEST_CASE("retry: success on first try uses one attempt") {
  int calls = 0;
  auto gen = [&] {
    ++calls;
    return serialize_feedback(sample_record(Granularity::Binary).feedback, Granularity::Binary);
  };
  const auto out = feedback_with_retry(gen, kThree, Granularity::Binary, 3);
  CHECK(out.attempts == 1);
  CHECK(calls == 1);
}

TEST_CASE("retry: two failures then success") {
  int calls = 0;
  auto gen = [&]() -> std::string {
    if (++calls <= 2) return "not json";
    return serialize_feedback(sample_record(Granularity::Binary).feedback, Granularity::Binary);
  };
  const auto out = feedback_with_retry(gen, kThree, Granularity::Binary, 3);
  CHECK(out.attempts == 3);
  CHECK(out.feedback.size() == 3);
}

TEST_CASE("retry: exhaustion carries the last parse error; eval default is all zeros") {
  int calls = 0;
  auto gen = [&]() -> std::string { return ++calls == 1 ? "nothing" : "[{\"sentence\":\"x\",\"label\":0}]"; };
  try {
    feedback_with_retry(gen, kThree, Granularity::Binary, 2);
    FAIL("expected Exhausted");
  } catch (const ExhaustedError& e) {
    CHECK(e.kind() == ErrorKind::Exhausted);
    CHECK(e.attempts() == 2);
    CHECK(e.last_kind() == ErrorKind::WrongArity);
  }
  const auto d = default_prediction("d", "m", kThree, Granularity::FullLocalization, "full_localization@1");
  CHECK(d.defaulted);
  CHECK(d.faithfulness() == 1.0);
  CHECK_NOTHROW(validate(d));
  for (const auto& f : d.feedback) {
    CHECK(f.binary_label == 0);
    CHECK(f.category == ErrorCategory::NoError);
  }
}

TEST_CASE("retry: non-parse errors propagate immediately") {
  int calls = 0;
  auto gen = [&]() -> std::string {
    ++calls;
    throw Error(ErrorKind::Timeout, "slow");
  };
  CHECK_ERROR_KIND(feedback_with_retry(gen, kThree, Granularity::Binary, 5), ErrorKind::Timeout);
  CHECK(calls == 1);
  CHECK_ERROR_KIND(feedback_with_retry(gen, kThree, Granularity::Binary, 0), ErrorKind::InvalidConfig);
}
