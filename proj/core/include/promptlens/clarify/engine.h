#ifndef PROMPTLENS_CLARIFY_ENGINE_H_
#define PROMPTLENS_CLARIFY_ENGINE_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptlens/grammar/grammar.h"
#include "promptlens/grammar/types.h"
#include "promptlens/http/client.h"

namespace promptlens::clarify {

enum class FewShotMode { kOneQuestion, kMultiQuestion, kMultiSetup };

inline constexpr FewShotMode kAllModes[] = {FewShotMode::kOneQuestion, FewShotMode::kMultiQuestion,
                                            FewShotMode::kMultiSetup};

// "one_question", "multi_question", "multi_setup".
std::string_view ModeName(FewShotMode mode);
std::optional<FewShotMode> ParseMode(std::string_view name);
bool IsQuestionMode(FewShotMode mode);
// Instruction line of the few-shot prompt for the mode.
std::string_view Instruction(FewShotMode mode);
// "Question:" or "Setup:".
std::string_view Cue(FewShotMode mode);

struct ShotExample {
  std::string context;
  std::vector<std::string> outputs;

  bool operator==(const ShotExample&) const = default;
};

// Shots per mode: {"one_question": {"instruction": ..., "shots": [...]}, ...}.
struct ShotLibrary {
  std::map<FewShotMode, std::vector<ShotExample>> by_mode;

  const std::vector<ShotExample>& For(FewShotMode mode) const;
};

// Shots per ambiguity type for the one-question shot-count ablation:
// {"PP": {"instruction": ..., "shots": [...]}, ...}.
struct AblationShots {
  std::map<grammar::AmbiguityType, std::vector<ShotExample>> by_type;
};

// Throw Error(kParse) for malformed documents or an instruction line that
// does not match the mode.
ShotLibrary ParseShotLibrary(std::string_view document);
ShotLibrary LoadShotLibrary(const std::string& path);
AblationShots ParseAblationShots(std::string_view document);
AblationShots LoadAblationShots(const std::string& path);
std::string DefaultShotsPath();
std::string AblationShotsPath();

enum class Source { kModel, kOracle };
std::string_view SourceName(Source source);
std::optional<Source> ParseSource(std::string_view name);

struct ClarificationResult {
  std::string prompt_id;
  FewShotMode mode = FewShotMode::kOneQuestion;
  std::vector<std::string> items;
  std::string raw_continuation;
  Source source = Source::kOracle;

  bool operator==(const ClarificationResult&) const = default;
};

struct DecodeParams {
  int max_tokens = 64;
  double temperature = 0.0;  // greedy
  std::vector<std::string> stop = {"###"};
};

// Instruction, blank line, each shot as "Context: ..." plus one cue line per
// output and a "###" line, then "Context: <target>" and a dangling cue.
// A target without terminal punctuation gets a period. Throws
// Error(kInvalidArgument) for no shots or shots whose shape does not fit the
// mode (one output in kOneQuestion, at least one otherwise).
std::string BuildFewShotPrompt(FewShotMode mode, const std::vector<ShotExample>& shots,
                               std::string_view target);

// Items in a continuation of a prompt ending in the dangling cue. Everything
// from the first "###" or "Context:" line on is ignored. The first line
// continues the cue and counts when it ends like an item of the mode ('?'
// for questions, '.' for setups); later lines count when cue-prefixed.
// kOneQuestion keeps the first item. Items are trimmed, otherwise verbatim.
std::vector<std::string> ParseGeneration(FewShotMode mode, std::string_view continuation);

class LmClient {
 public:
  virtual ~LmClient() = default;
  // Raw continuation of `prompt`. Throws TransportError / EndpointError.
  virtual std::string Complete(const std::string& prompt, const DecodeParams& params) = 0;
};

// POSTs {prompt, max_tokens, temperature, stop}; accepts {continuation} or an
// OpenAI-style {choices: [{text}]} response.
class HttpLmClient : public LmClient {
 public:
  explicit HttpLmClient(http::EndpointConfig config);
  std::string Complete(const std::string& prompt, const DecodeParams& params) override;

 private:
  http::JsonClient client_;
};

// Builds the few-shot prompt for the target, queries the model and parses its
// continuation. Unparseable output yields an empty item list.
ClarificationResult Clarify(const grammar::AmbiguousPrompt& prompt, FewShotMode mode,
                            const std::vector<ShotExample>& shots, LmClient& client,
                            const DecodeParams& params = {});

// Ground-truth clarification: the first question (kOneQuestion), all
// questions (kMultiQuestion) or all setups (kMultiSetup). A prompt without a
// known template is detected from its text first; Error(kUndefined) when
// that fails.
ClarificationResult FallbackClarify(const grammar::Grammar& grammar,
                                    const grammar::AmbiguousPrompt& prompt, FewShotMode mode);

// Items FallbackClarify derives from a record's stored interpretations.
std::vector<std::string> GroundTruthItems(const grammar::BenchmarkRecord& record,
                                          FewShotMode mode);

// Source of clarifications for sessions.
class Clarifier {
 public:
  virtual ~Clarifier() = default;
  virtual ClarificationResult ClarifyRecord(const grammar::BenchmarkRecord& record,
                                            FewShotMode mode) = 0;
};

class OracleClarifier : public Clarifier {
 public:
  ClarificationResult ClarifyRecord(const grammar::BenchmarkRecord& record,
                                    FewShotMode mode) override;
};

class ModelClarifier : public Clarifier {
 public:
  ModelClarifier(std::shared_ptr<LmClient> client, ShotLibrary shots, DecodeParams params = {});
  ClarificationResult ClarifyRecord(const grammar::BenchmarkRecord& record,
                                    FewShotMode mode) override;

 private:
  std::shared_ptr<LmClient> client_;
  ShotLibrary shots_;
  DecodeParams params_;
};

}  // namespace promptlens::clarify

#endif  // PROMPTLENS_CLARIFY_ENGINE_H_
