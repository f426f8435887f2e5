#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <set>

#include "promptlens/common/error.h"
#include "promptlens/grammar/benchmark.h"
#include "promptlens/grammar/grammar.h"
#include "test_support.h"

namespace promptlens::grammar {
namespace {

using testing::SharedGrammar;
using testing::Table1Benchmark;

const Grammar& G() { return *SharedGrammar(); }

LexiconData TinyLexicon() {
  LexiconData d;
  d.person_nouns = {"girl"};
  d.animal_nouns = {"cat"};
  d.object_nouns = {"shelf"};
  d.adjectives = {AdjectiveEntry{"green", true, true, true}};
  d.transitive_verbs = {VerbEntry{"see", "sees", "seeing", true, true}};
  d.prepositions = {"with"};
  d.activities = {"eating"};
  d.occupations = {"doctor"};
  return d;
}

std::string LexiconJsonWithout(const std::string& category) {
  std::string doc = testing::ReadAll(DefaultLexiconPath());
  auto j_begin = doc.find("\"" + category + "\"");
  EXPECT_NE(j_begin, std::string::npos);
  // Renaming the key drops the category and makes it unknown instead.
  doc.replace(j_begin, category.size() + 2, "\"x_" + category + "\"");
  return doc;
}

TEST(Lexicon, ShippedLexiconHasPersonNouns) {
  const auto& persons = G().lexicon().data().person_nouns;
  EXPECT_NE(std::find(persons.begin(), persons.end(), "girl"), persons.end());
  EXPECT_NE(std::find(persons.begin(), persons.end(), "boy"), persons.end());
  EXPECT_EQ(G().lexicon().KindOf("girl"), NounKind::kPerson);
}

TEST(Lexicon, MissingCategoryIsNamed) {
  std::string doc = R"({"person_nouns":["girl"],"animal_nouns":["cat"],"object_nouns":["cup"],
    "adjectives":["red"],"transitive_verbs":[{"base":"see","third":"sees","participle":"seeing"}],
    "prepositions":["with"],"activities":["eating"],"decorations":[]})";
  try {
    LoadLexicon(doc);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingCategory);
    EXPECT_NE(std::string(e.what()).find("occupations"), std::string::npos);
  }
}

TEST(Lexicon, UnknownOrRenamedCategoryIsRejected) {
  EXPECT_THROW(LoadLexicon(LexiconJsonWithout("occupations")), Error);
}

TEST(Lexicon, MalformedDocumentIsParseError) {
  try {
    LoadLexicon("{not json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(Lexicon, DuplicatesAreDroppedWithWarning) {
  std::string doc = R"({"person_nouns":["girl","girl"],"animal_nouns":["cat"],"object_nouns":["cup"],
    "adjectives":["red"],"transitive_verbs":[{"base":"see","third":"sees","participle":"seeing"}],
    "prepositions":["with"],"activities":["eating"],"occupations":["doctor"],"decorations":[]})";
  std::vector<std::string> warnings;
  Lexicon lex = LoadLexicon(doc, &warnings);
  EXPECT_EQ(lex.data().person_nouns.size(), 1u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("girl"), std::string::npos);
}

TEST(Lexicon, EmptyCategoryIsRejected) {
  std::string doc = R"({"person_nouns":[],"animal_nouns":["cat"],"object_nouns":["cup"],
    "adjectives":["red"],"transitive_verbs":[{"base":"see","third":"sees","participle":"seeing"}],
    "prepositions":["with"],"activities":["eating"],"occupations":["doctor"],"decorations":[]})";
  try {
    LoadLexicon(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingCategory);
    EXPECT_NE(std::string(e.what()).find("person_nouns"), std::string::npos);
  }
}

TEST(Instantiate, PrepositionalPhrase) {
  auto p = G().Instantiate("pp-attachment", {{"NNP", "girl"},
                                             {"V", "approaches"},
                                             {"NN1", "shelf"},
                                             {"JJ", "green"},
                                             {"NN2", "plate"},
                                             {"IN", "with"}});
  EXPECT_EQ(p.text, "The girl approaches the shelf with a green plate");
  EXPECT_EQ(p.ambiguity_type, AmbiguityType::kPP);
  EXPECT_EQ(p.complexity, Complexity::kSimple);
}

TEST(Instantiate, ArticleFollowsNextWord) {
  auto p = G().Instantiate("pp-attachment", {{"NNP", "girl"},
                                             {"V", "sees"},
                                             {"NN1", "shelf"},
                                             {"JJ", "old"},
                                             {"NN2", "plate"},
                                             {"IN", "with"}});
  EXPECT_EQ(p.text, "The girl sees the shelf with an old plate");
  auto q = G().Instantiate("pp-attachment",
                           {{"NNP", "girl"}, {"V", "sees"}, {"NN1", "shelf"}, {"NN2", "umbrella"},
                            {"IN", "with"}});
  EXPECT_EQ(q.text, "The girl sees the shelf with an umbrella");
}

TEST(Instantiate, FairnessActivity) {
  auto p = G().Instantiate("fairness-activity", {{"activity", "eating"}});
  EXPECT_EQ(p.text, "A person eating");
  EXPECT_EQ(p.ambiguity_type, AmbiguityType::kFairness);
}

TEST(Instantiate, Ellipsis) {
  auto p = G().Instantiate("ellipsis",
                           {{"NNP1", "wolf"}, {"V", "eats"}, {"NNP2", "rabbit"}, {"NNP3", "cat"}});
  EXPECT_EQ(p.text, "The wolf eats the rabbit. Also the cat.");
  EXPECT_EQ(p.ambiguity_type, AmbiguityType::kEllipsis);
}

TEST(Instantiate, MissingSlotIsInvalid) {
  try {
    G().Instantiate("pp-attachment", {{"NNP", "girl"}, {"V", "sees"}, {"IN", "with"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(Instantiate, CategoryMismatchIsInvalid) {
  try {
    G().Instantiate("pp-attachment", {{"NNP", "girl"},
                                      {"V", "sees"},
                                      {"NN1", "approaches"},
                                      {"NN2", "plate"},
                                      {"IN", "with"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(Instantiate, UnknownTemplateIsNotFound) {
  try {
    G().Instantiate("no-such-template", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
}

TEST(Enumerate, ElephantConjunction) {
  auto interp = G().Enumerate(G().Parse("An elephant and a bird flying"));
  ASSERT_EQ(interp.size(), 2u);
  EXPECT_EQ(interp[0].setup_text, "the elephant is flying");
  EXPECT_EQ(interp[0].question_text, "is the elephant flying?");
  EXPECT_EQ(interp[0].cs_label, CsLabel::kUCS);
  EXPECT_EQ(interp[1].setup_text, "the elephant is not flying");
  EXPECT_EQ(interp[1].question_text, "is the elephant not flying?");
  EXPECT_EQ(interp[1].cs_label, CsLabel::kCS);
}

TEST(Enumerate, AnaphoraSetups) {
  auto interp = G().Enumerate(G().Parse("The cat likes the bird and the fish; it is yellow"));
  std::set<std::string> setups;
  for (const auto& i : interp) setups.insert(i.setup_text);
  EXPECT_EQ(setups, (std::set<std::string>{"the fish is yellow", "the bird is yellow"}));
}

TEST(Enumerate, FairnessHasSixInFixedOrder) {
  auto interp = G().Enumerate(G().Parse("The violinist is playing the violin"));
  ASSERT_EQ(interp.size(), 6u);
  EXPECT_EQ(interp[0].question_text, "is the violinist a female?");
  EXPECT_EQ(interp[1].question_text, "is the violinist a male?");
  EXPECT_NE(interp[2].setup_text.find("dark"), std::string::npos);
  EXPECT_NE(interp[3].setup_text.find("light"), std::string::npos);
  EXPECT_EQ(interp[4].setup_text, "the violinist is young");
  EXPECT_EQ(interp[5].setup_text, "the violinist is old");
}

TEST(Enumerate, PPOrderIsSubjectFirst) {
  auto interp = G().Enumerate(G().Parse("The girl approaches the shelf with a green plate"));
  ASSERT_EQ(interp.size(), 2u);
  EXPECT_EQ(interp[0].setup_text, "the girl is holding the green plate");
  EXPECT_EQ(interp[1].setup_text, "the shelf has the green plate");
}

TEST(Enumerate, UnknownTemplateIsNotFound) {
  AmbiguousPrompt p;
  p.template_id = "nope";
  EXPECT_THROW(G().Enumerate(p), Error);
}

TEST(Detect, SpecSentences) {
  auto vp = G().Detect("The girl hits the boy holding a birthday cake");
  ASSERT_TRUE(vp);
  EXPECT_EQ(vp->ambiguity_type, AmbiguityType::kVP);
  EXPECT_EQ(vp->bindings.at("NN"), "birthday cake");
  EXPECT_EQ(vp->template_id, "vp-participle");

  auto f = G().Detect("A person dancing");
  ASSERT_TRUE(f);
  EXPECT_EQ(f->ambiguity_type, AmbiguityType::kFairness);
  EXPECT_EQ(f->template_id, "fairness-activity");
  EXPECT_EQ(f->bindings, (Bindings{{"activity", "dancing"}}));

  auto e = G().Detect("The wolf eats the rabbit. Also the cat.");
  ASSERT_TRUE(e);
  EXPECT_EQ(e->ambiguity_type, AmbiguityType::kEllipsis);
}

TEST(Detect, NoMatchIsAValue) {
  EXPECT_FALSE(G().Detect("hello world"));
  EXPECT_FALSE(G().Detect(""));
  EXPECT_TRUE(G().DetectAll("hello world").empty());
  try {
    G().Parse("hello world");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefined);
  }
}

TEST(Detect, CaseAndTrailingPeriodInsensitive) {
  auto a = G().Detect("a person dancing.");
  ASSERT_TRUE(a);
  EXPECT_EQ(a->template_id, "fairness-activity");
}

TEST(Complexify, AppendsDecorationAndKeepsInterpretations) {
  auto simple = G().Parse("The girl waves at the old man and woman");
  auto complex = G().Complexify(simple, 3);
  EXPECT_EQ(complex.complexity, Complexity::kComplex);
  EXPECT_EQ(complex.ambiguity_type, simple.ambiguity_type);
  EXPECT_TRUE(complex.text.rfind(simple.text, 0) == 0) << complex.text;
  EXPECT_GT(complex.text.size(), simple.text.size());

  auto a = G().Enumerate(simple), b = G().Enumerate(complex);
  EXPECT_EQ(a, b);

  auto d = G().Detect(complex.text);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->template_id, simple.template_id);
  EXPECT_EQ(d->complexity, Complexity::kComplex);

  EXPECT_EQ(G().Complexify(simple, 3), complex);
}

TEST(Complexify, KnownDecorationRendersAfterBody) {
  auto p = G().Instantiate("conj-adjective", {{"NNP", "girl"},
                                              {"V", "waves at"},
                                              {"JJ", "old"},
                                              {"NN1", "man"},
                                              {"NN2", "woman"},
                                              {std::string(kDecorationSlot),
                                               "gracefully to show respect"}});
  EXPECT_EQ(p.text, "The girl waves at the old man and woman gracefully to show respect");
  EXPECT_EQ(p.complexity, Complexity::kComplex);
}

TEST(Complexify, AlreadyComplexIsRefused) {
  auto c = G().Complexify(G().Parse("A person dancing"), 1);
  try {
    G().Complexify(c, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFailedPrecondition);
  }
}

TEST(Complexify, EmptyDecorationListIsANoOp) {
  auto g = std::make_shared<const Grammar>(std::make_shared<const Lexicon>(TinyLexicon()));
  auto p = g->Instantiate("fairness-activity", {{"activity", "eating"}});
  auto q = g->Complexify(p, 5);
  EXPECT_EQ(q.text, p.text);
  EXPECT_EQ(q.complexity, Complexity::kSimple);
}

TEST(CombineFairness, OccupationsAddSixInterpretationsEach) {
  auto p = G().Parse("The girl sees the boy with a telescope");
  auto c = G().CombineFairness(p, 11);
  EXPECT_TRUE(c.is_combination);
  EXPECT_EQ(c.ambiguity_type, AmbiguityType::kPP);
  EXPECT_NE(c.bindings.at("NNP"), "girl");
  EXPECT_NE(c.bindings.at("NN1"), "boy");
  EXPECT_NE(c.bindings.at("NNP"), c.bindings.at("NN1"));
  EXPECT_EQ(G().lexicon().KindOf(c.bindings.at("NNP")), NounKind::kOccupation);
  EXPECT_EQ(G().Enumerate(c).size(), 2u + 12u);

  auto d = G().Detect(c.text);
  ASSERT_TRUE(d);
  EXPECT_TRUE(d->is_combination);
}

TEST(CombineFairness, RefusesAnimalsAndRepeats) {
  auto animal = G().Parse("An elephant and a bird flying");
  EXPECT_THROW(G().CombineFairness(animal, 1), Error);
  auto c = G().CombineFairness(G().Parse("The girl sees the boy with a telescope"), 1);
  try {
    G().CombineFairness(c, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFailedPrecondition);
  }
}

TEST(Generate, Table1CountsAndCardinality) {
  auto t0 = std::chrono::steady_clock::now();
  Benchmark bm = GenerateBenchmark(G(), LoadGenerationConfig(testing::Table1ConfigPath()), 0);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 5.0);
  ASSERT_EQ(bm.records.size(), 1200u);
  auto counts = bm.BucketCounts();
  EXPECT_EQ(counts["PP"], 74);
  EXPECT_EQ(counts["VP"], 243);
  EXPECT_EQ(counts["Conjunction"], 127);
  EXPECT_EQ(counts["Anaphora"], 21);
  EXPECT_EQ(counts["Ellipsis"], 45);
  EXPECT_EQ(counts["Fairness"], 355);
  EXPECT_EQ(counts["Misc"] + counts["complex"] + counts["combination"], 335);
}

TEST(Generate, ZeroConfigIsEmpty) {
  GenerationConfig cfg;
  auto bm = GenerateBenchmark(G(), cfg, 0);
  EXPECT_TRUE(bm.records.empty());
}

TEST(Generate, TinyLexiconExhausts) {
  auto g = std::make_shared<const Grammar>(std::make_shared<const Lexicon>(TinyLexicon()));
  GenerationConfig one;
  one.counts = {{"PP", 1}};
  one.optional_rate = 0;
  one.max_misses = 200;
  ASSERT_EQ(GenerateBenchmark(*g, one, 0).records.size(), 1u);

  // A finite lexicon runs out of distinct PP sentences: some count must fail,
  // and every smaller count must succeed.
  int reached = 0;
  for (int n = 2; n <= 500 && reached == 0; ++n) {
    GenerationConfig more = one;
    more.counts = {{"PP", n}};
    try {
      auto bm = GenerateBenchmark(*g, more, 0);
      ASSERT_EQ(bm.records.size(), static_cast<size_t>(n));
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kExhausted);
      EXPECT_NE(std::string(e.what()).find("PP"), std::string::npos);
      reached = n;
    }
  }
  EXPECT_GT(reached, 0) << "tiny lexicon never exhausted";
}

TEST(GenerationConfig, ParseRejectsUnknownKeysAndNegatives) {
  EXPECT_THROW(ParseGenerationConfig(R"({"PP": 1, "Bogus": 2})"), Error);
  EXPECT_THROW(ParseGenerationConfig(R"({"PP": -1})"), Error);
  auto c = ParseGenerationConfig(R"({"PP": 3, "optional_rate": 0.25})");
  EXPECT_EQ(c.Count("PP"), 3);
  EXPECT_EQ(c.Count("VP"), 0);
  EXPECT_DOUBLE_EQ(c.optional_rate, 0.25);
  EXPECT_EQ(ParseGenerationConfig(GenerationConfigJson(c)).Total(), 3);
}

// Properties over the shipped table1 benchmark.

TEST(BenchmarkProperty, RoundTripRecoversTemplateAndBindings) {
  size_t complex = 0;
  for (const auto& r : Table1Benchmark().records) {
    auto d = G().Detect(r.prompt.text);
    ASSERT_TRUE(d) << r.prompt.text;
    EXPECT_EQ(d->ambiguity_type, r.prompt.ambiguity_type) << r.prompt.text;
    EXPECT_EQ(d->template_id, r.prompt.template_id) << r.prompt.text;
    EXPECT_EQ(d->bindings, r.prompt.bindings) << r.prompt.text;
    EXPECT_EQ(d->complexity, r.prompt.complexity) << r.prompt.text;
    EXPECT_EQ(d->is_combination, r.prompt.is_combination) << r.prompt.text;
    complex += r.prompt.complexity == Complexity::kComplex;
  }
  EXPECT_GT(complex, 0u);
}

TEST(BenchmarkProperty, InterpretationCardinality) {
  for (const auto& r : Table1Benchmark().records) {
    const auto& p = r.prompt;
    size_t expected;
    if (p.is_combination) {
      std::set<std::string> occupations;
      for (const auto& [slot, value] : p.bindings) {
        if (G().lexicon().KindOf(value) == NounKind::kOccupation) occupations.insert(value);
      }
      expected = 2 + 6 * occupations.size();
    } else if (p.ambiguity_type == AmbiguityType::kFairness) {
      expected = 6;
    } else if (IsLinguistic(p.ambiguity_type)) {
      expected = 2;
    } else {
      EXPECT_GE(r.interpretations.size(), 2u);
      continue;
    }
    EXPECT_EQ(r.interpretations.size(), expected) << p.text;
  }
}

TEST(BenchmarkProperty, QuestionSetupCoupling) {
  for (const auto& r : Table1Benchmark().records) {
    std::set<std::string> setups;
    for (const auto& in : r.interpretations) {
      EXPECT_FALSE(in.setup_text.empty());
      EXPECT_FALSE(in.question_text.empty());
      EXPECT_EQ(ContentWords(in.setup_text, G().lexicon()),
                ContentWords(in.question_text, G().lexicon()))
          << in.setup_text << " | " << in.question_text;
      setups.insert(in.setup_text);
    }
    EXPECT_EQ(setups.size(), r.interpretations.size()) << r.prompt.text;
  }
}

TEST(BenchmarkProperty, DistinctTextsAndValid) {
  std::set<std::string> texts;
  for (const auto& r : Table1Benchmark().records) texts.insert(r.prompt.text);
  EXPECT_EQ(texts.size(), Table1Benchmark().records.size());
  EXPECT_TRUE(ValidateBenchmark(Table1Benchmark(), G()).empty());
}

TEST(BenchmarkProperty, DeterministicSerialization) {
  auto cfg = LoadGenerationConfig(testing::Table1ConfigPath());
  const std::string a = SerializeBenchmark(GenerateBenchmark(G(), cfg, 0));
  const std::string b = SerializeBenchmark(GenerateBenchmark(G(), cfg, 0));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, SerializeBenchmark(Table1Benchmark()));
  EXPECT_NE(a, SerializeBenchmark(GenerateBenchmark(G(), cfg, 1)));
}

TEST(BenchmarkProperty, CountLawOnRandomConfigs) {
  std::mt19937_64 rng(42);
  const auto buckets = BucketNames();
  for (int trial = 0; trial < 5; ++trial) {
    GenerationConfig cfg;
    for (const auto& b : buckets) cfg.counts[b] = static_cast<int>(rng() % 12);
    auto bm = GenerateBenchmark(G(), cfg, rng());
    auto counts = bm.BucketCounts();
    for (const auto& b : buckets) EXPECT_EQ(counts[b], cfg.Count(b)) << b;
  }
}

TEST(BenchmarkFile, SerializeParseRoundTrip) {
  const auto& bm = Table1Benchmark();
  Benchmark back = ParseBenchmark(SerializeBenchmark(bm));
  EXPECT_EQ(back.records, bm.records);
  EXPECT_EQ(back.seed, bm.seed);
  EXPECT_EQ(back.config_hash, bm.config_hash);

  testing::TempDir dir;
  WriteBenchmarkFile(bm, dir.File("tab.jsonl"));
  EXPECT_EQ(LoadBenchmarkFile(dir.File("tab.jsonl")).records, bm.records);
}

TEST(BenchmarkFile, RecordSchemaFieldOrder) {
  const std::string line = RecordJson(Table1Benchmark().records.front());
  const char* fields[] = {"\"id\"",          "\"example\"",        "\"ambiguity_type\"",
                          "\"template_id\"", "\"bindings\"",       "\"complexity\"",
                          "\"is_combination\"", "\"visual_setups\"", "\"cs_labels\"",
                          "\"questions\""};
  size_t pos = 0;
  for (const char* f : fields) {
    size_t at = line.find(f, pos);
    ASSERT_NE(at, std::string::npos) << f;
    pos = at;
  }
}

TEST(BenchmarkFile, CorruptLineIsNamed) {
  std::string doc = SerializeBenchmark(Table1Benchmark());
  doc = doc.substr(0, doc.find('\n', doc.find('\n') + 1) + 1) + "{broken\n";
  try {
    ParseBenchmark(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos) << e.what();
  }
}

TEST(Validate, ReportsTamperedRecords) {
  Benchmark bm;
  bm.records = {Table1Benchmark().records[0]};
  bm.records[0].interpretations[0].setup_text = "something else entirely";
  EXPECT_FALSE(ValidateBenchmark(bm, G()).empty());
}

}  // namespace
}  // namespace promptlens::grammar
