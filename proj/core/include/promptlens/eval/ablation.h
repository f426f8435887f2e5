#ifndef PROMPTLENS_EVAL_ABLATION_H_
#define PROMPTLENS_EVAL_ABLATION_H_

#include <string>
#include <vector>

#include "promptlens/clarify/engine.h"
#include "promptlens/grammar/benchmark.h"
#include "promptlens/metrics/metrics.h"

namespace promptlens::eval {

// Ground truth a generation is scored against: every question of the record
// in the question modes, every setup in kMultiSetup.
std::vector<std::string> References(const grammar::BenchmarkRecord& record,
                                    clarify::FewShotMode mode);
// kFirst for kOneQuestion, kAll otherwise.
metrics::ScoreMode ScoreModeFor(clarify::FewShotMode mode);

// Clarifies every record and scores the items against References().
metrics::ScoreReport ScoreClarifications(const std::vector<const grammar::BenchmarkRecord*>& records,
                                         clarify::FewShotMode mode, clarify::Clarifier& clarifier,
                                         int parallelism = 1);
metrics::ScoreReport ScoreResults(const std::vector<const grammar::BenchmarkRecord*>& records,
                                  const std::vector<clarify::ClarificationResult>& results,
                                  clarify::FewShotMode mode);

// One-question generation with the first k shots of one ambiguity type, for
// k = 1..max_shots, scored on the simple records of `eval_types`.
struct ShotAblationTable {
  grammar::AmbiguityType shot_type = grammar::AmbiguityType::kPP;
  std::vector<grammar::AmbiguityType> eval_types;
  // scores[k-1]: overall plus per evaluated type.
  std::vector<metrics::ScoreReport> scores;
  size_t n_prompts = 0;
};

// Error(kNotFound) when the shot type has fewer than max_shots shots or no
// record of the evaluated types exists.
ShotAblationTable RunShotAblation(const grammar::Benchmark& benchmark,
                                  const clarify::AblationShots& shots,
                                  grammar::AmbiguityType shot_type,
                                  const std::vector<grammar::AmbiguityType>& eval_types,
                                  clarify::LmClient& client,
                                  const clarify::DecodeParams& params = {}, int max_shots = 6,
                                  int parallelism = 1);

// Rows "Total Benchmark" then one per evaluated type; a BLEU and ROUGE
// column pair per shot count.
std::string FormatShotAblation(const ShotAblationTable& table);

// Complex records against their decoration-free counterparts.
struct ComplexityRow {
  clarify::FewShotMode mode = clarify::FewShotMode::kOneQuestion;
  metrics::ScoreReport simple;
  metrics::ScoreReport complex;
};

struct ComplexityAblationTable {
  std::vector<ComplexityRow> rows;
  size_t n_pairs = 0;
};

// Simple counterpart of a complex record: same template and bindings without
// the decoration.
grammar::BenchmarkRecord SimpleCounterpart(const grammar::Grammar& grammar,
                                           const grammar::BenchmarkRecord& complex);

// Error(kNotFound) when the benchmark has no complex records.
ComplexityAblationTable RunComplexityAblation(const grammar::Benchmark& benchmark,
                                              const grammar::Grammar& grammar,
                                              clarify::Clarifier& clarifier,
                                              const std::vector<clarify::FewShotMode>& modes,
                                              int parallelism = 1);

// One row per mode: BLEU simple/complex, ROUGE simple/complex.
std::string FormatComplexityAblation(const ComplexityAblationTable& table);

}  // namespace promptlens::eval

#endif  // PROMPTLENS_EVAL_ABLATION_H_
