#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "metric_oracles.h"
#include "promptlens/common/error.h"
#include "promptlens/metrics/metrics.h"

namespace promptlens::metrics {
namespace {

constexpr double kTol = 1e-9;

Tokens T(const char* s) { return Tokenize(s); }

TEST(Tokenize, Rules) {
  EXPECT_EQ(Tokenize("Is the cat in the basket?"),
            (Tokens{"is", "the", "cat", "in", "the", "basket"}));
  EXPECT_TRUE(Tokenize("").empty());
  EXPECT_EQ(Tokenize("A  person   eating."), (Tokens{"a", "person", "eating"}));
  EXPECT_EQ(Tokenize("  ?! .  "), Tokens{});
  EXPECT_EQ(Tokenize("wait... what?!"), (Tokens{"wait", "what"}));
}

TEST(Tokenize, MatchesOracleOnRandomText) {
  std::mt19937 rng(7);
  const std::string alphabet = "abcXYZ .,;:?!\t\n'-";
  for (int i = 0; i < 500; ++i) {
    std::string s;
    for (int k = rng() % 40; k > 0; --k) s += alphabet[rng() % alphabet.size()];
    EXPECT_EQ(Tokenize(s), oracle::Tokens(s)) << s;
  }
}

TEST(Bleu, PerfectMatchIsOne) {
  EXPECT_NEAR(Bleu4({T("is the cat in the basket")}, {{T("is the cat in the basket")}}), 1.0,
              kTol);
}

TEST(Bleu, NoSharedTokensIsZero) {
  EXPECT_EQ(Bleu4({T("alpha beta gamma delta")}, {{T("one two three four")}}), 0.0);
}

TEST(Bleu, HandCountedMultiReference) {
  // 1-grams 6/6, 2-grams 5/5, 3-grams 4/4, 4-grams 3/3 against the first
  // reference; closest reference length 6 equals the candidate, so BP = 1.
  const std::vector<Tokens> c = {T("is the cat in the basket")};
  const std::vector<std::vector<Tokens>> r = {
      {T("is the cat in the basket"), T("is the boy holding the cat")}};
  EXPECT_NEAR(Bleu4(c, r), 1.0, kTol);
  EXPECT_NEAR(Bleu4(c, r), oracle::Bleu(c, r), kTol);
}

TEST(Bleu, HandCountedPartial) {
  // candidate "the cat is in the basket" vs "is the cat in the basket":
  // 1-grams 6/6; 2-grams {the cat, in the, the basket} 3/5;
  // 3-grams {in the basket} 1/4; 4-grams 0/3 -> 0.
  EXPECT_EQ(Bleu4({T("the cat is in the basket")}, {{T("is the cat in the basket")}}), 0.0);
  // "the cat is in the red basket" vs "the cat is in the basket":
  // 1: 6/7, 2: 4/6, 3: 3/5, 4: 2/4; c = 7 > r = 6 so BP = 1.
  const double expected = std::exp((std::log(6.0 / 7) + std::log(4.0 / 6) + std::log(3.0 / 5) +
                                    std::log(2.0 / 4)) /
                                   4);
  EXPECT_NEAR(Bleu4({T("the cat is in the red basket")}, {{T("the cat is in the basket")}}),
              expected, kTol);
}

TEST(Bleu, BrevityPenalty) {
  // candidate of 4 tokens, reference of 6: BP = exp(1 - 6/4).
  const double got = Bleu4({T("is the cat in")}, {{T("is the cat in the basket")}});
  EXPECT_NEAR(got, std::exp(1.0 - 6.0 / 4.0), kTol);
}

TEST(Bleu, ErrorsOnMalformedInput) {
  EXPECT_THROW(Bleu4({T("a b c d")}, {}), Error);
  EXPECT_THROW(Bleu4({}, {}), Error);
  EXPECT_THROW(Bleu4({T("a b c d")}, {{}}), Error);
}

TEST(Rouge, Fixtures) {
  EXPECT_NEAR(Rouge1(T("is the cat flying"), {T("is the cat in the basket")}), 0.6, kTol);
  EXPECT_NEAR(Rouge1(T("is the cat in the basket"), {T("is the cat in the basket")}), 1.0, kTol);
  EXPECT_EQ(Rouge1(T("alpha beta"), {T("gamma delta")}), 0.0);
  EXPECT_EQ(Rouge1({}, {T("gamma delta")}), 0.0);
}

TEST(Rouge, ClippedOverlap) {
  // "the the the" vs "the cat": overlap 1, P = 1/3, R = 1/2, F1 = 0.4.
  EXPECT_NEAR(Rouge1(T("the the the"), {T("the cat")}), 0.4, kTol);
}

TEST(Rouge, MaxOverReferencesIsMonotone) {
  std::mt19937 rng(3);
  const std::vector<std::string> vocab = {"the", "cat", "is", "in", "basket", "boy", "dog"};
  auto random_tokens = [&] {
    Tokens t;
    for (int k = 1 + rng() % 6; k > 0; --k) t.push_back(vocab[rng() % vocab.size()]);
    return t;
  };
  for (int trial = 0; trial < 200; ++trial) {
    Tokens c = random_tokens();
    std::vector<Tokens> refs = {random_tokens()};
    double prev = Rouge1(c, refs);
    for (int k = 0; k < 3; ++k) {
      refs.push_back(random_tokens());
      double now = Rouge1(c, refs);
      EXPECT_GE(now, prev);
      prev = now;
    }
  }
}

TEST(Pearson, Fixtures) {
  EXPECT_NEAR(Pearson({1, 2, 3}, {2, 4, 7}), 0.9933992677987828, kTol);
  EXPECT_NEAR(Pearson({1, 2, 3, 4}, {2, 4, 6, 8}), 1.0, kTol);
  EXPECT_NEAR(Pearson({1, 2, 3, 4}, {-1, -2, -3, -4}), -1.0, kTol);
}

TEST(Pearson, AffineInvariance) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> xs(2 + rng() % 8);
    for (auto& x : xs) x = u(rng);
    double a = u(rng), b = u(rng);
    if (std::abs(a) < 0.01) a = 1;
    std::vector<double> ys;
    for (double x : xs) ys.push_back(a * x + b);
    EXPECT_NEAR(Pearson(xs, ys), a > 0 ? 1.0 : -1.0, 1e-9);
  }
}

TEST(Pearson, Errors) {
  EXPECT_THROW(Pearson({1}, {2}), Error);
  EXPECT_THROW(Pearson({1, 2}, {2}), Error);
  try {
    Pearson({1, 1, 1}, {1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefined);
  }
}

TEST(Fleiss, PerfectAgreementIsOne) {
  EXPECT_DOUBLE_EQ(FleissKappa({{3, 0}, {0, 3}, {3, 0}, {0, 3}, {3, 0}}), 1.0);
}

TEST(Fleiss, UniformSplitIsNegative) {
  const std::vector<std::vector<int>> m = {{1, 1}, {1, 1}, {1, 1}};
  // P_i = 0, P_e = 0.5 -> kappa = -1.
  EXPECT_NEAR(FleissKappa(m), -1.0, kTol);
  EXPECT_NEAR(FleissKappa(m), oracle::Fleiss(m), kTol);
}

TEST(Fleiss, TextbookExample) {
  // The 10-subject, 5-category, 14-rater example from Fleiss (1971).
  const std::vector<std::vector<int>> m = {
      {0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0}, {2, 2, 8, 1, 1},
      {7, 7, 0, 0, 0},  {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2}, {6, 5, 2, 1, 0}, {0, 2, 2, 3, 7}};
  EXPECT_NEAR(FleissKappa(m), 0.20993070442195522, 1e-12);
}

TEST(Fleiss, Errors) {
  try {
    FleissKappa({{3, 0}, {3, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefined);
  }
  EXPECT_THROW(FleissKappa({}), Error);
  EXPECT_THROW(FleissKappa({{2, 1}, {1, 1}}), Error);  // unequal rater counts
  EXPECT_THROW(FleissKappa({{1, 0}, {0, 1}}), Error);  // one rater
  EXPECT_THROW(FleissKappa({{-1, 3}, {1, 1}}), Error);
}

// Oracle equivalence: each fixture is checked against the brute-force
// definitions in metric_oracles.h.

struct BleuFixture {
  std::vector<std::string> cands;
  std::vector<std::vector<std::string>> refs;
};

const std::vector<BleuFixture>& BleuFixtures() {
  static const std::vector<BleuFixture> f = {
      {{"is the cat in the basket"}, {{"is the cat in the basket", "is the boy holding the cat"}}},
      {{"is the boy holding the cat"}, {{"is the cat in the basket"}}},
      {{"the cat is in the red basket"}, {{"the cat is in the basket"}}},
      {{"is the girl holding the green plate?", "does the shelf have the green plate?"},
       {{"is the girl holding the green plate?"}, {"does the shelf have the green plate?"}}},
      {{"is the girl holding a plate", "is the shelf green"},
       {{"is the girl holding the green plate?", "does the shelf have the green plate?"},
        {"is the shelf green?", "is the plate green?"}}},
      {{"the the the the the the"}, {{"the cat is on the mat"}}},
      {{"a b c d e f g h"}, {{"a b c d", "a b c d e f g h i j"}}},
      {{"a b c d e"}, {{"a b c d e f", "a b c d"}}},
      {{"is the elephant flying", "is the elephant not flying", "is the bird flying"},
       {{"is the elephant flying?"}, {"is the elephant not flying?"}, {"is the bird flying?"}}},
      {{"x y z w v", "is the cat in the basket"},
       {{"is the cat in the basket"}, {"is the cat in the basket"}}},
  };
  return f;
}

std::vector<Tokens> Toks(const std::vector<std::string>& v) {
  std::vector<Tokens> out;
  for (const auto& s : v) out.push_back(Tokenize(s));
  return out;
}

TEST(OracleEquivalence, Bleu) {
  for (const auto& f : BleuFixtures()) {
    std::vector<Tokens> c = Toks(f.cands);
    std::vector<std::vector<Tokens>> r;
    for (const auto& rs : f.refs) r.push_back(Toks(rs));
    EXPECT_NEAR(Bleu4(c, r), oracle::Bleu(c, r), kTol) << f.cands[0];
    std::vector<double> w;
    for (size_t i = 0; i < c.size(); ++i) w.push_back(0.25 + 0.5 * static_cast<double>(i));
    EXPECT_NEAR(Bleu4Weighted(c, r, w), oracle::Bleu(c, r, w), kTol) << f.cands[0];
  }
}

TEST(OracleEquivalence, Rouge) {
  for (const auto& f : BleuFixtures()) {
    for (size_t i = 0; i < f.cands.size(); ++i) {
      auto c = Tokenize(f.cands[i]);
      auto r = Toks(f.refs[i]);
      EXPECT_NEAR(Rouge1(c, r), oracle::Rouge(c, r), kTol) << f.cands[i];
    }
  }
}

TEST(OracleEquivalence, Pearson) {
  const std::vector<std::pair<std::vector<double>, std::vector<double>>> f = {
      {{1, 2, 3}, {2, 4, 7}},
      {{0.75, 0.5, 1, 0, 0.25}, {0.66, 0.5, 1, 0.33, 0}},
      {{1, 0}, {0, 1}},
      {{3, 1, 4, 1, 5, 9, 2, 6}, {2, 7, 1, 8, 2, 8, 1, 8}},
      {{0.1, 0.2, 0.3, 0.4}, {0.4, 0.1, 0.3, 0.2}},
  };
  for (const auto& [x, y] : f) EXPECT_NEAR(Pearson(x, y), oracle::Pearson(x, y), kTol);
}

TEST(OracleEquivalence, Fleiss) {
  const std::vector<std::vector<std::vector<int>>> f = {
      {{3, 0}, {0, 3}, {2, 1}, {1, 2}, {3, 0}},
      {{1, 1}, {1, 1}, {2, 0}},
      {{0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0}, {2, 2, 8, 1, 1},
       {7, 7, 0, 0, 0},  {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2}, {6, 5, 2, 1, 0}, {0, 2, 2, 3, 7}},
      {{4, 1, 0}, {0, 5, 0}, {1, 1, 3}, {2, 2, 1}},
      {{2, 0}, {0, 2}},
  };
  for (const auto& m : f) EXPECT_NEAR(FleissKappa(m), oracle::Fleiss(m), kTol);
}

TEST(OracleEquivalence, RandomMatrices) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int raters = 2 + rng() % 5, cats = 2 + rng() % 3, subjects = 2 + rng() % 8;
    std::vector<std::vector<int>> m(subjects, std::vector<int>(cats, 0));
    for (auto& row : m) {
      for (int k = 0; k < raters; ++k) ++row[rng() % cats];
    }
    double expected;
    try {
      expected = FleissKappa(m);
    } catch (const Error&) {
      continue;  // single-category draw
    }
    EXPECT_NEAR(expected, oracle::Fleiss(m), kTol);
  }
}

// score_generations

std::vector<ScoreItem> ToItems(const std::vector<oracle::Item>& in) {
  std::vector<ScoreItem> out;
  for (const auto& i : in) out.push_back({i.generations, i.references, i.type});
  return out;
}

const std::vector<oracle::Item>& ScoreFixture() {
  static const std::vector<oracle::Item> items = {
      {{"is the cat in the basket?", "is the boy holding the cat?"},
       {"is the cat in the basket?", "is the boy holding the cat?"},
       "PP"},
      {{"is the elephant flying?"}, {"is the elephant flying?", "is the elephant not flying?"},
       "Conjunction"},
      {{}, {"is the fish yellow?", "is the bird yellow?"}, "Anaphora"},
      {{"is the person a female", "is the person old", "is the violinist young"},
       {"is the person a female?", "is the person a male?", "is the person young?",
        "is the person old?"},
       "Fairness"},
      {{"the girl is holding the plate on the shelf today"},
       {"the girl is holding the green plate", "the shelf has the green plate"},
       "PP"},
  };
  return items;
}

TEST(ScoreGenerations, MatchesOracleBothModes) {
  for (bool first : {true, false}) {
    auto report = ScoreGenerations(ToItems(ScoreFixture()), first ? ScoreMode::kFirst
                                                                  : ScoreMode::kAll);
    auto all = oracle::ScoreItems(ScoreFixture(), first);
    EXPECT_NEAR(report.bleu, all.bleu, kTol);
    EXPECT_NEAR(report.rouge, all.rouge, kTol);
    EXPECT_EQ(report.n_items, ScoreFixture().size());
    size_t per_type_items = 0;
    for (const auto& [type, ts] : report.per_type) {
      auto o = oracle::ScoreItems(ScoreFixture(), first, type);
      EXPECT_NEAR(ts.bleu, o.bleu, kTol) << type;
      EXPECT_NEAR(ts.rouge, o.rouge, kTol) << type;
      EXPECT_GE(ts.bleu, 0.0);
      EXPECT_LE(ts.rouge, 1.0);
      per_type_items += ts.n_items;
    }
    EXPECT_EQ(per_type_items, report.n_items);
  }
}

TEST(ScoreGenerations, RandomFixturesMatchOracle) {
  std::mt19937 rng(19);
  const std::vector<std::string> vocab = {"is", "the", "cat", "in", "basket", "boy", "holding",
                                          "a", "girl", "plate?", "Green", "shelf."};
  const std::vector<std::string> types = {"PP", "VP", "Fairness"};
  auto sentence = [&] {
    std::string s;
    for (int k = 2 + rng() % 7; k > 0; --k) s += vocab[rng() % vocab.size()] + " ";
    return s;
  };
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<oracle::Item> items(1 + rng() % 10);
    for (auto& it : items) {
      for (int k = rng() % 4; k > 0; --k) it.generations.push_back(sentence());
      for (int k = 1 + rng() % 3; k > 0; --k) it.references.push_back(sentence());
      it.type = types[rng() % types.size()];
    }
    for (bool first : {true, false}) {
      auto r = ScoreGenerations(ToItems(items), first ? ScoreMode::kFirst : ScoreMode::kAll);
      auto o = oracle::ScoreItems(items, first);
      ASSERT_NEAR(r.bleu, o.bleu, kTol);
      ASSERT_NEAR(r.rouge, o.rouge, kTol);
    }
  }
}

TEST(ScoreGenerations, IdenticalIsOneEverywhere) {
  std::vector<ScoreItem> items = {
      {{"is the cat in the basket?"}, {"is the cat in the basket?"}, "PP"},
      {{"is the person a female?"}, {"is the person a female?"}, "Fairness"}};
  auto r = ScoreGenerations(items, ScoreMode::kFirst);
  EXPECT_NEAR(r.bleu, 1.0, kTol);
  EXPECT_NEAR(r.rouge, 1.0, kTol);
  ASSERT_EQ(r.per_type.size(), 2u);
  for (const auto& [t, s] : r.per_type) {
    EXPECT_NEAR(s.bleu, 1.0, kTol) << t;
    EXPECT_NEAR(s.rouge, 1.0, kTol) << t;
  }
}

TEST(ScoreGenerations, CaseAndPunctuationInvariant) {
  std::vector<ScoreItem> a = {{{"Is The Cat In The Basket"}, {"is the cat in the basket?"}, "PP"}};
  std::vector<ScoreItem> b = {{{"is the cat in the basket!"}, {"IS THE CAT IN THE BASKET"}, "PP"}};
  EXPECT_NEAR(ScoreGenerations(a, ScoreMode::kAll).bleu, ScoreGenerations(b, ScoreMode::kAll).bleu,
              kTol);
  EXPECT_NEAR(ScoreGenerations(a, ScoreMode::kAll).rouge,
              ScoreGenerations(b, ScoreMode::kAll).rouge, kTol);
}

TEST(ScoreGenerations, Errors) {
  EXPECT_THROW(ScoreGenerations({}, ScoreMode::kAll), Error);
  EXPECT_THROW(ScoreGenerations({{{"a"}, {}, "PP"}}, ScoreMode::kAll), Error);
}

}  // namespace
}  // namespace promptlens::metrics
