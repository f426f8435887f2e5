#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "promptlens/common/error.h"
#include "promptlens/common/text.h"
#include "promptlens/mock/mock.h"
#include "promptlens/session/session.h"
#include "test_support.h"

namespace promptlens::session {
namespace {

using clarify::FewShotMode;
using testing::ElephantRecord;

class FailingParaphraser : public ParaphraseClient {
 public:
  std::string Paraphrase(const std::string&) override {
    throw TransportError("paraphraser down", 3);
  }
};

Session Open(const grammar::BenchmarkRecord& r, int intention, FewShotMode mode) {
  clarify::OracleClarifier oracle;
  LogicalClock clock;
  return OpenSession("s1", r, intention, mode, oracle, clock);
}

TEST(OpenSession, ElephantOneQuestion) {
  Session s = Open(ElephantRecord(), 1, FewShotMode::kOneQuestion);
  EXPECT_TRUE(s.pending());
  EXPECT_EQ(s.clarification.items, (std::vector<std::string>{"is the elephant flying?"}));
  EXPECT_EQ(s.intention().setup_text, "the elephant is not flying");
  EXPECT_FALSE(s.disambiguated_prompt);
  EXPECT_EQ(s.opened_at, 1);
}

TEST(OpenSession, BadIntentionIsOutOfRange) {
  clarify::OracleClarifier oracle;
  LogicalClock clock;
  try {
    OpenSession("s", ElephantRecord(), 7, FewShotMode::kOneQuestion, oracle, clock);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
  }
  EXPECT_THROW(OpenSession("s", ElephantRecord(), -1, FewShotMode::kOneQuestion, oracle, clock),
               Error);
}

TEST(OpenSession, FairnessOffersSixSetups) {
  Session s = Open(testing::ViolinistRecord(), 0, FewShotMode::kMultiSetup);
  EXPECT_EQ(s.clarification.items.size(), 6u);
}

TEST(Concatenate, Rule) {
  EXPECT_EQ(ConcatenateSignal("An elephant and a bird flying", "the elephant is not flying"),
            "An elephant and a bird flying. The elephant is not flying.");
  EXPECT_EQ(ConcatenateSignal("The wolf eats the rabbit. Also the cat.", "the cat is eaten"),
            "The wolf eats the rabbit. Also the cat. The cat is eaten.");
  EXPECT_EQ(ConcatenateSignal("A person eating", "yes!"), "A person eating. Yes.");
}

TEST(Concatenate, OriginalIsAlwaysAPrefix) {
  std::mt19937 rng(4);
  const std::vector<std::string> parts = {"a", "cat", ".", "?", " ", "Dog", "!"};
  for (int i = 0; i < 500; ++i) {
    std::string o, sig;
    for (int k = 1 + rng() % 6; k > 0; --k) o += parts[rng() % parts.size()];
    for (int k = 1 + rng() % 6; k > 0; --k) sig += parts[rng() % parts.size()];
    const std::string out = ConcatenateSignal(o, sig);
    // surrounding whitespace of the original is not preserved
    const std::string base = text::Trim(o);
    EXPECT_EQ(out.rfind(base, 0), 0u) << o;
    EXPECT_EQ(out.back(), '.');
  }
}

TEST(Resolve, SelectSetup) {
  Session s = Open(ElephantRecord(), 1, FewShotMode::kMultiSetup);
  LogicalClock clock;
  Session r = Resolve(s, Action::Select(1), clock);
  EXPECT_EQ(r.resolution.kind, ResolutionKind::kSelected);
  EXPECT_EQ(r.disambiguated_prompt, "An elephant and a bird flying. The elephant is not flying.");
  EXPECT_TRUE(s.pending()) << "input session must not change";
}

TEST(Resolve, NoAnswerIsNormalized) {
  Session s = Open(ElephantRecord(), 1, FewShotMode::kOneQuestion);
  LogicalClock clock;
  Session r = Resolve(s, Action::Answer("No, the elephant is not flying"), clock);
  EXPECT_EQ(r.resolution.kind, ResolutionKind::kAnswered);
  EXPECT_EQ(r.resolution.answer, "No, the elephant is not flying");
  EXPECT_EQ(r.disambiguated_prompt, "An elephant and a bird flying. The elephant is not flying.");

  Session bare = Resolve(s, Action::Answer("no"), clock);
  EXPECT_EQ(bare.disambiguated_prompt, r.disambiguated_prompt);
  Session yes = Resolve(s, Action::Answer("Yes"), clock);
  EXPECT_EQ(yes.disambiguated_prompt, "An elephant and a bird flying. The elephant is flying.");
}

TEST(Resolve, RawStyleKeepsAnswerText) {
  Session s = Open(ElephantRecord(), 1, FewShotMode::kOneQuestion);
  LogicalClock clock;
  Session r = Resolve(s, Action::Answer("no"), clock, SignalStyle::kRaw);
  EXPECT_EQ(r.disambiguated_prompt, "An elephant and a bird flying. No.");
}

TEST(Resolve, FreeTextIsVerbatim) {
  Session s = Open(ElephantRecord(), 0, FewShotMode::kOneQuestion);
  LogicalClock clock;
  Session r = Resolve(s, Action::Answer("the bird sits on its back"), clock);
  EXPECT_EQ(r.disambiguated_prompt, "An elephant and a bird flying. The bird sits on its back.");
}

TEST(Resolve, NoOnMultiInterpretationRecordIsVerbatim) {
  Session s = Open(testing::ViolinistRecord(), 0, FewShotMode::kOneQuestion);
  LogicalClock clock;
  Session r = Resolve(s, Action::Answer("no"), clock);
  EXPECT_EQ(r.resolution.signal, "no");
}

TEST(Resolve, SkipFinalizesWithoutPrompt) {
  Session s = Open(ElephantRecord(), 0, FewShotMode::kOneQuestion);
  LogicalClock clock;
  Session r = Resolve(s, Action::Skip(), clock);
  EXPECT_EQ(r.resolution.kind, ResolutionKind::kSkipped);
  EXPECT_FALSE(r.disambiguated_prompt);
  EXPECT_TRUE(r.resolved_at);
  mock::MockParaphraseClient para(mock::ParaphraseMode::kIdentity);
  EXPECT_THROW(Paraphrase(r, para, clock), Error);
}

TEST(Resolve, Errors) {
  Session s = Open(ElephantRecord(), 0, FewShotMode::kMultiSetup);
  LogicalClock clock;
  try {
    Resolve(s, Action::Select(9), clock);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfRange);
  }
  EXPECT_THROW(Resolve(s, Action::Answer("   "), clock), Error);
  Session done = Resolve(s, Action::Select(0), clock);
  try {
    Resolve(done, Action::Skip(), clock);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConflict);
  }
}

TEST(Paraphrase, IdentityAndReorder) {
  Session s = Open(ElephantRecord(), 1, FewShotMode::kMultiSetup);
  LogicalClock clock;
  s = Resolve(s, Action::Select(1), clock);
  mock::MockParaphraseClient id(mock::ParaphraseMode::kIdentity);
  Session p = Paraphrase(s, id, clock);
  EXPECT_EQ(p.paraphrased_prompt, s.disambiguated_prompt);
  EXPECT_EQ(p.disambiguated_prompt, s.disambiguated_prompt);

  mock::MockParaphraseClient swap(mock::ParaphraseMode::kSentenceSwap);
  Session q = Paraphrase(s, swap, clock);
  EXPECT_EQ(q.paraphrased_prompt, "The elephant is not flying. An elephant and a bird flying.");
}

TEST(Paraphrase, EndpointDownLeavesSessionUnchanged) {
  Session s = Open(ElephantRecord(), 1, FewShotMode::kMultiSetup);
  LogicalClock clock;
  s = Resolve(s, Action::Select(1), clock);
  const Session before = s;
  FailingParaphraser down;
  EXPECT_THROW(Paraphrase(s, down, clock), TransportError);
  EXPECT_EQ(s, before);
}

TEST(ParseActionLine, Syntax) {
  EXPECT_EQ(ParseActionLine("yes"), Action::Answer("yes"));
  EXPECT_EQ(ParseActionLine(" No "), Action::Answer("No"));
  EXPECT_EQ(ParseActionLine("select 2"), Action::Select(1));
  EXPECT_EQ(ParseActionLine("skip"), Action::Skip());
  EXPECT_EQ(ParseActionLine("the cat is red"), Action::Answer("the cat is red"));
  EXPECT_FALSE(ParseActionLine(""));
  EXPECT_FALSE(ParseActionLine("   "));
}

TEST(Log, RoundTripAndEvents) {
  Session s = Open(ElephantRecord(), 1, FewShotMode::kOneQuestion);
  LogicalClock clock;
  std::ostringstream log;
  Persist(s, "open", log);
  s = Resolve(s, Action::Answer("no"), clock);
  Persist(s, "resolve", log);
  mock::MockParaphraseClient id(mock::ParaphraseMode::kIdentity);
  s = Paraphrase(s, id, clock);
  Persist(s, "paraphrase", log);
  EXPECT_EQ(Load(log.str()), s);
  EXPECT_EQ(Load(log.str(), "s1"), s);
  EXPECT_THROW(Load(log.str(), "other"), Error);
  EXPECT_NE(log.str().find("\"schema_version\":1"), std::string::npos);
}

TEST(Log, EmptyLogIsNoSession) {
  try {
    Load("");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    EXPECT_NE(std::string(e.what()).find("no session"), std::string::npos);
  }
}

TEST(Log, TruncatedLineIsNamed) {
  Session s = Open(ElephantRecord(), 1, FewShotMode::kOneQuestion);
  LogicalClock clock;
  std::ostringstream log;
  Persist(s, "open", log);
  Persist(Resolve(s, Action::Skip(), clock), "resolve", log);
  std::string text = log.str();
  text.resize(text.size() - 20);
  try {
    LoadSessions(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Log, ImpossibleSequenceIsRejected) {
  Session s = Open(ElephantRecord(), 1, FewShotMode::kOneQuestion);
  std::ostringstream log;
  Persist(s, "resolve", log);
  EXPECT_THROW(LoadSessions(log.str()), Error);
  std::ostringstream twice;
  Persist(s, "open", twice);
  Persist(s, "open", twice);
  EXPECT_THROW(LoadSessions(twice.str()), Error);
}

TEST(Log, InvariantViolationIsRejected) {
  Session s = Open(ElephantRecord(), 1, FewShotMode::kOneQuestion);
  s.disambiguated_prompt = "while pending";
  EXPECT_THROW(ParseSessionJson(SessionJson(s)), Error);
}

TEST(Log, FilePersistAppends) {
  testing::TempDir dir;
  Session s = Open(ElephantRecord(), 1, FewShotMode::kOneQuestion);
  LogicalClock clock;
  Persist(s, "open", dir.File("log.jsonl"));
  s = Resolve(s, Action::Skip(), clock);
  Persist(s, "resolve", dir.File("log.jsonl"));
  auto all = LoadSessionsFile(dir.File("log.jsonl"));
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0], s);
}

// 1000 randomized sessions persisted event by event and replayed.
TEST(LogProperty, RandomizedSessionsRoundTrip) {
  const auto& bm = testing::Table1Benchmark();
  std::mt19937_64 rng(2024);
  clarify::OracleClarifier oracle;
  mock::MockLmClient noise(testing::SharedGrammar(), mock::LmMode::kNoise);
  clarify::ModelClarifier model(
      std::shared_ptr<clarify::LmClient>(&noise, [](clarify::LmClient*) {}),
      clarify::LoadShotLibrary(clarify::DefaultShotsPath()));
  mock::MockParaphraseClient swap(mock::ParaphraseMode::kSentenceSwap);
  const std::vector<std::string> free_text = {"the cat is \"red\"", "née \\ tab\there",
                                              "Yes, obviously", "no", "YES", "line\nbreak"};
  std::ostringstream log;
  std::vector<Session> expected;
  LogicalClock clock;
  for (int i = 0; i < 1000; ++i) {
    const auto& rec = bm.records[rng() % bm.records.size()];
    const int intention = static_cast<int>(rng() % rec.interpretations.size());
    const FewShotMode mode = clarify::kAllModes[rng() % 3];
    clarify::Clarifier& c = rng() % 10 == 0 ? static_cast<clarify::Clarifier&>(model) : oracle;
    Session s = OpenSession("r" + std::to_string(i), rec, intention, mode, c, clock);
    Persist(s, "open", log);
    const int what = static_cast<int>(rng() % 4);
    if (what > 0) {
      Action a = Action::Skip();
      const int n = static_cast<int>(s.clarification.items.size());
      if (what == 1 && n > 0) a = Action::Select(static_cast<int>(rng() % n));
      if (what == 2) {
        a = Action::Answer(free_text[rng() % free_text.size()], n > 0 ? rng() % n : 0);
      }
      s = Resolve(s, a, clock, rng() % 2 ? SignalStyle::kRaw : SignalStyle::kDeclarative);
      Persist(s, "resolve", log);
      if (s.disambiguated_prompt && rng() % 2) {
        s = Paraphrase(s, swap, clock);
        Persist(s, "paraphrase", log);
      }
    }
    EXPECT_EQ(ParseSessionJson(SessionJson(s)), s);
    expected.push_back(std::move(s));
  }
  auto loaded = LoadSessions(log.str());
  ASSERT_EQ(loaded.size(), expected.size());
  for (size_t i = 0; i < loaded.size(); ++i) ASSERT_EQ(loaded[i], expected[i]) << i;
}

TEST(Answerers, AutoAnswerer) {
  AutoAnswerer a;
  Session q = Open(ElephantRecord(), 0, FewShotMode::kOneQuestion);
  EXPECT_EQ(a.Decide(q), Action::Answer("yes", 0));
  Session q1 = Open(ElephantRecord(), 1, FewShotMode::kOneQuestion);
  EXPECT_EQ(a.Decide(q1), Action::Answer("no", 0));
  Session m = Open(ElephantRecord(), 1, FewShotMode::kMultiSetup);
  EXPECT_EQ(a.Decide(m), Action::Select(1));
  Session v = Open(testing::ViolinistRecord(), 4, FewShotMode::kOneQuestion);
  EXPECT_EQ(a.Decide(v).kind, Action::Kind::kAnswer);
}

TEST(Answerers, LineAnswererSkipsBlankAndExhausts) {
  std::istringstream in("\n\nselect 2\n");
  LineAnswerer a(in);
  Session m = Open(ElephantRecord(), 1, FewShotMode::kMultiSetup);
  EXPECT_EQ(a.Decide(m), Action::Select(1));
  try {
    a.Decide(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kExhausted);
  }
}

TEST(Answerers, InteractiveRepromptsOnBadSelection) {
  std::istringstream in("select 9\nselect 1\n");
  std::ostringstream prompt;
  LineAnswerer a(in, &prompt);
  Session m = Open(ElephantRecord(), 1, FewShotMode::kMultiSetup);
  EXPECT_EQ(a.Decide(m), Action::Select(0));
  EXPECT_NE(prompt.str().find("An elephant and a bird flying"), std::string::npos);
}

std::string BatchLog(Answerer& answerer, const grammar::Benchmark& bm, FewShotMode mode) {
  clarify::OracleClarifier oracle;
  LogicalClock clock;
  std::ostringstream log;
  BatchOptions opts;
  opts.mode = mode;
  mock::MockParaphraseClient id(mock::ParaphraseMode::kIdentity);
  RunBatch(bm, opts, oracle, answerer, clock, &log, &id);
  return log.str();
}

TEST(Batch, ScriptedAndInteractiveLogsAreIdentical) {
  grammar::Benchmark bm;
  const auto& full = testing::Table1Benchmark();
  for (size_t i = 0; i < full.records.size(); i += 40) bm.records.push_back(full.records[i]);
  for (FewShotMode mode : clarify::kAllModes) {
    // Record what the auto answerer does, then replay it as answer lines.
    std::string script;
    clarify::OracleClarifier oracle;
    for (const auto& r : bm.records) {
      for (size_t k = 0; k < r.interpretations.size(); ++k) {
        LogicalClock c;
        Session s = OpenSession("x", r, static_cast<int>(k), mode, oracle, c);
        Action a = AutoAnswerer().Decide(s);
        if (k % 5 == 3) a = Action::Skip();
        switch (a.kind) {
          case Action::Kind::kSkip: script += "skip\n"; break;
          case Action::Kind::kSelect: script += "select " + std::to_string(a.index + 1) + "\n"; break;
          case Action::Kind::kAnswer: script += a.text + "\n"; break;
        }
      }
    }
    std::istringstream file_in(script);
    LineAnswerer scripted(file_in);
    std::istringstream tty_in(script);
    std::ostringstream tty_out;
    LineAnswerer interactive(tty_in, &tty_out);
    const std::string a = BatchLog(scripted, bm, mode);
    const std::string b = BatchLog(interactive, bm, mode);
    EXPECT_FALSE(tty_out.str().empty());
    EXPECT_EQ(a, b) << clarify::ModeName(mode);
  }
}

TEST(Batch, OracleClosedLoopAnswersEverything) {
  const auto& bm = testing::Table1Benchmark();
  clarify::OracleClarifier oracle;
  AutoAnswerer auto_answer;
  LogicalClock clock;
  for (FewShotMode mode : clarify::kAllModes) {
    BatchOptions opts;
    opts.mode = mode;
    auto sessions = RunBatch(bm, opts, oracle, auto_answer, clock);
    auto stats = Tally(sessions);
    EXPECT_EQ(stats.total, bm.TotalInterpretations());
    EXPECT_EQ(stats.skipped, 0u);
    EXPECT_EQ(stats.answered + stats.selected + stats.skipped, stats.total);
    EXPECT_DOUBLE_EQ(stats.SuccessRate(), 1.0);
    for (const auto& s : sessions) {
      ASSERT_TRUE(s.disambiguated_prompt);
      EXPECT_EQ(s.disambiguated_prompt->rfind(s.record.prompt.text, 0), 0u);
      EXPECT_EQ(s.session_id, BatchSessionId(s.record.prompt.id, s.intention_index));
    }
  }
}

TEST(Batch, DeclarativeSignalMatchesIntention) {
  // With the oracle and the cooperative answerer, the appended sentence of
  // every two-way record is the intention's setup.
  const auto& bm = testing::Table1Benchmark();
  clarify::OracleClarifier oracle;
  AutoAnswerer a;
  LogicalClock clock;
  BatchOptions opts;
  opts.mode = FewShotMode::kOneQuestion;
  for (const auto& s : RunBatch(bm, opts, oracle, a, clock)) {
    if (s.record.interpretations.size() != 2) continue;
    EXPECT_EQ(s.resolution.signal, s.intention().setup_text) << s.session_id;
  }
}

TEST(Batch, RecordFilterAndStats) {
  const auto& bm = testing::Table1Benchmark();
  clarify::OracleClarifier oracle;
  AutoAnswerer a;
  LogicalClock clock;
  BatchOptions opts;
  opts.record_ids = {bm.records[0].prompt.id, bm.records[5].prompt.id};
  auto sessions = RunBatch(bm, opts, oracle, a, clock);
  EXPECT_EQ(sessions.size(),
            bm.records[0].interpretations.size() + bm.records[5].interpretations.size());
  BatchStats empty;
  EXPECT_EQ(empty.SuccessRate(), 0.0);
}

}  // namespace
}  // namespace promptlens::session
