#include <set>

#include "doctest.h"
#include "sumfact/error.hpp"
#include "sumfact/taxonomy.hpp"

using namespace sumfact;

TEST_CASE("taxonomy has nine categories, seven localizable") {
  CHECK(kAllCategories.size() == 9);
  CHECK(kLocalizableCategories.size() == 7);
  std::set<ErrorCategory> loc(kLocalizableCategories.begin(), kLocalizableCategories.end());
  CHECK(loc.size() == 7);
  CHECK_FALSE(loc.contains(ErrorCategory::NoError));
  CHECK_FALSE(loc.contains(ErrorCategory::Other));
  for (auto c : kAllCategories) CHECK(is_localizable(c) == loc.contains(c));
}

TEST_CASE("binary mapping: 0 iff no error") {
  for (auto c : kAllCategories) CHECK((to_binary(c) == 0) == (c == ErrorCategory::NoError));
  CHECK(to_binary(ErrorCategory::Other) == 1);
}

TEST_CASE("canonical names and ids round-trip through normalization") {
  for (auto c : kAllCategories) {
    CHECK(normalize_category(canonical_name(c)) == c);
    CHECK(normalize_category(id_of(c)) == c);
  }
  CHECK(canonical_name(ErrorCategory::OutOfContext) == "out-of-context error");
  CHECK(canonical_name(ErrorCategory::NoError) == "no error");
}

TEST_CASE("normalization tolerates case, spacing and abbreviations") {
  CHECK(normalize_category("Out-of-Context Error") == ErrorCategory::OutOfContext);
  CHECK(normalize_category("out of context error") == ErrorCategory::OutOfContext);
  CHECK(normalize_category("  NO ERROR ") == ErrorCategory::NoError);
  CHECK(normalize_category("OutE") == ErrorCategory::OutOfContext);
  CHECK(normalize_category("EntE") == ErrorCategory::Entity);
  CHECK(normalize_category("PredE") == ErrorCategory::Predicate);
  CHECK(normalize_category("CircE") == ErrorCategory::Circumstantial);
  CHECK(normalize_category("GramE") == ErrorCategory::Grammatical);
  CHECK(normalize_category("CorefE") == ErrorCategory::Coreference);
  CHECK(normalize_category("LinkE") == ErrorCategory::Linking);
  CHECK(normalize_category("NoE") == ErrorCategory::NoError);
}

TEST_CASE("unknown category is a hard error, never other") {
  CHECK_FALSE(try_normalize_category("hallucination").has_value());
  try {
    normalize_category("hallucination");
    FAIL("expected UnknownCategory");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownCategory);
  }
}
