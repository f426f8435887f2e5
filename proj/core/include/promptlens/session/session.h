#ifndef PROMPTLENS_SESSION_SESSION_H_
#define PROMPTLENS_SESSION_SESSION_H_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptlens/clarify/engine.h"
#include "promptlens/grammar/benchmark.h"
#include "promptlens/grammar/types.h"
#include "promptlens/http/client.h"

namespace promptlens::session {

inline constexpr int kLogSchemaVersion = 1;

// Timestamps are ticks of an injected clock so logs stay reproducible.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual int64_t Now() = 0;
};

// 1, 2, 3, ...
class LogicalClock : public Clock {
 public:
  int64_t Now() override { return ++ticks_; }

 private:
  int64_t ticks_ = 0;
};

// Milliseconds since the Unix epoch.
class SystemClock : public Clock {
 public:
  int64_t Now() override;
};

enum class ResolutionKind { kPending, kAnswered, kSelected, kSkipped };
std::string_view ResolutionName(ResolutionKind kind);
std::optional<ResolutionKind> ParseResolution(std::string_view name);

struct Resolution {
  ResolutionKind kind = ResolutionKind::kPending;
  // Raw answer text (kAnswered).
  std::string answer;
  // Item the answer refers to (kAnswered) or the chosen item (kSelected).
  std::optional<int> index;
  // Sentence appended to the prompt (kAnswered, kSelected).
  std::string signal;

  bool operator==(const Resolution&) const = default;
};

struct Session {
  std::string session_id;
  grammar::BenchmarkRecord record;
  int intention_index = 0;
  clarify::FewShotMode mode = clarify::FewShotMode::kOneQuestion;
  clarify::ClarificationResult clarification;
  Resolution resolution;
  std::optional<std::string> disambiguated_prompt;
  std::optional<std::string> paraphrased_prompt;
  int64_t opened_at = 0;
  std::optional<int64_t> resolved_at;
  std::optional<int64_t> paraphrased_at;

  const grammar::Interpretation& intention() const;
  bool pending() const { return resolution.kind == ResolutionKind::kPending; }
  bool operator==(const Session&) const = default;
};

// How yes/no answers become signals.
enum class SignalStyle {
  kDeclarative,  // interpretation setup text (default)
  kRaw,          // the answer text as typed
};

struct Action {
  enum class Kind { kAnswer, kSelect, kSkip };
  Kind kind = Kind::kSkip;
  std::string text;
  // kAnswer: clarification item answered (default the first).
  // kSelect: 0-based item index.
  int index = 0;

  static Action Answer(std::string text, int question_index = 0);
  static Action Select(int index);
  static Action Skip();
  bool operator==(const Action&) const = default;
};

// Answer-line syntax shared by answer files and the terminal: "yes", "no",
// "select N" (1-based), "skip"; anything else is a free-text answer. Blank
// lines yield nullopt.
std::optional<Action> ParseActionLine(std::string_view line);

// Error(kOutOfRange) for an invalid intention index; clarifier errors
// propagate.
Session OpenSession(std::string session_id, const grammar::BenchmarkRecord& record,
                    int intention_index, clarify::FewShotMode mode,
                    clarify::Clarifier& clarifier, Clock& clock);

// Original text, then ". " (or " " after terminal punctuation), then the
// signal capitalized and ending in a single period.
std::string ConcatenateSignal(std::string_view original, std::string_view signal);

// Signal an answer to `question` conveys. "yes" maps to the setup of the
// interpretation asking `question`; "no" maps to the other setup of a
// two-interpretation record; a leading "yes,"/"no," is dropped from longer
// answers; anything else, or a yes/no that cannot be mapped, is verbatim.
std::string NormalizeAnswer(const grammar::BenchmarkRecord& record, std::string_view question,
                            std::string_view answer, SignalStyle style = SignalStyle::kDeclarative);

// Error(kConflict) unless pending; Error(kOutOfRange) for an item index
// outside the clarification; Error(kInvalidArgument) for an empty answer.
// Selecting a question is answering it "yes".
Session Resolve(const Session& session, const Action& action, Clock& clock,
                SignalStyle style = SignalStyle::kDeclarative);

class ParaphraseClient {
 public:
  virtual ~ParaphraseClient() = default;
  // Throws TransportError / EndpointError.
  virtual std::string Paraphrase(const std::string& text) = 0;
};

// POSTs {text}; expects {paraphrase}.
class HttpParaphraseClient : public ParaphraseClient {
 public:
  explicit HttpParaphraseClient(http::EndpointConfig config);
  std::string Paraphrase(const std::string& text) override;

 private:
  http::JsonClient client_;
};

// Error(kFailedPrecondition) without a disambiguated prompt. The input
// session is never modified.
Session Paraphrase(const Session& session, ParaphraseClient& client, Clock& clock);

// Log lines: {"schema_version": 1, "event": "open"|"resolve"|"paraphrase",
// "session": {...snapshot}}.
std::string SessionJson(const Session& session);
Session ParseSessionJson(std::string_view json);
std::string LogLine(std::string_view event, const Session& session);

// Appends one event line to a log file or stream.
void Persist(const Session& session, std::string_view event, std::ostream& log);
void Persist(const Session& session, std::string_view event, const std::string& path);

// Replays a log; returns the final snapshot of each session in order of
// first appearance. Error(kParse) naming the line for a corrupt line or an
// impossible event sequence.
std::vector<Session> LoadSessions(std::string_view log);
std::vector<Session> LoadSessionsFile(const std::string& path);
// Final snapshot of `session_id`, or of the last session when empty.
// Error(kNotFound) "no session" when the log holds none.
Session Load(std::string_view log, std::string_view session_id = {});

// Chooses the action for a pending session.
class Answerer {
 public:
  virtual ~Answerer() = default;
  virtual Action Decide(const Session& session) = 0;
};

// Cooperative annotator that always knows the intention: says yes to its
// question, no to the other question of a two-way record, picks its setup,
// and states its setup otherwise.
class AutoAnswerer : public Answerer {
 public:
  Action Decide(const Session& session) override;
};

// Reads answer lines. With a prompt stream it shows each session first
// (interactive use); unparseable or blank lines are re-read. Running out of
// input is Error(kExhausted).
class LineAnswerer : public Answerer {
 public:
  explicit LineAnswerer(std::istream& in, std::ostream* prompt = nullptr);
  Action Decide(const Session& session) override;

 private:
  std::istream& in_;
  std::ostream* prompt_;
};

// Terminal rendering of a pending session.
std::string DescribeSession(const Session& session);

struct BatchOptions {
  clarify::FewShotMode mode = clarify::FewShotMode::kOneQuestion;
  SignalStyle style = SignalStyle::kDeclarative;
  // Empty means every record.
  std::vector<std::string> record_ids;
};

struct BatchStats {
  size_t total = 0;
  size_t answered = 0;
  size_t selected = 0;
  size_t skipped = 0;

  double SuccessRate() const;
};

BatchStats Tally(const std::vector<Session>& sessions);

// "<record id>-i<intention>".
std::string BatchSessionId(std::string_view record_id, int intention_index);

// One session per (record, interpretation), in benchmark order. Each open,
// resolve and paraphrase event is appended to `log` when given; paraphrasing
// runs only when a client is given and the session was not skipped.
std::vector<Session> RunBatch(const grammar::Benchmark& benchmark, const BatchOptions& options,
                              clarify::Clarifier& clarifier, Answerer& answerer, Clock& clock,
                              std::ostream* log = nullptr,
                              ParaphraseClient* paraphraser = nullptr);

}  // namespace promptlens::session

#endif  // PROMPTLENS_SESSION_SESSION_H_
