#include "promptlens/eval/ablation.h"

#include <cstdio>
#include <sstream>

#include "promptlens/common/error.h"
#include "promptlens/eval/eval.h"

namespace promptlens::eval {

using clarify::FewShotMode;
using grammar::BenchmarkRecord;

std::vector<std::string> References(const BenchmarkRecord& record, FewShotMode mode) {
  return clarify::GroundTruthItems(record, clarify::IsQuestionMode(mode)
                                               ? FewShotMode::kMultiQuestion
                                               : FewShotMode::kMultiSetup);
}

metrics::ScoreMode ScoreModeFor(FewShotMode mode) {
  return mode == FewShotMode::kOneQuestion ? metrics::ScoreMode::kFirst : metrics::ScoreMode::kAll;
}

metrics::ScoreReport ScoreResults(const std::vector<const BenchmarkRecord*>& records,
                                  const std::vector<clarify::ClarificationResult>& results,
                                  FewShotMode mode) {
  if (records.size() != results.size()) {
    throw Error(ErrorCode::kInvalidArgument, "records and results differ in length");
  }
  std::vector<metrics::ScoreItem> items;
  for (size_t i = 0; i < records.size(); ++i) {
    items.push_back(metrics::ScoreItem{
        results[i].items, References(*records[i], mode),
        std::string(grammar::TypeName(records[i]->prompt.ambiguity_type))});
  }
  return metrics::ScoreGenerations(items, ScoreModeFor(mode));
}

metrics::ScoreReport ScoreClarifications(const std::vector<const BenchmarkRecord*>& records,
                                         FewShotMode mode, clarify::Clarifier& clarifier,
                                         int parallelism) {
  std::vector<clarify::ClarificationResult> results(records.size());
  ParallelFor(records.size(), parallelism,
              [&](size_t i) { results[i] = clarifier.ClarifyRecord(*records[i], mode); });
  return ScoreResults(records, results, mode);
}

ShotAblationTable RunShotAblation(const grammar::Benchmark& benchmark,
                                  const clarify::AblationShots& shots,
                                  grammar::AmbiguityType shot_type,
                                  const std::vector<grammar::AmbiguityType>& eval_types,
                                  clarify::LmClient& client, const clarify::DecodeParams& params,
                                  int max_shots, int parallelism) {
  auto it = shots.by_type.find(shot_type);
  if (max_shots < 1 || it == shots.by_type.end() ||
      static_cast<int>(it->second.size()) < max_shots) {
    throw Error(ErrorCode::kNotFound, "not enough " + std::string(grammar::TypeName(shot_type)) +
                                          " shots for a " + std::to_string(max_shots) +
                                          "-shot ablation");
  }
  std::vector<const BenchmarkRecord*> records;
  for (const auto& r : benchmark.records) {
    for (auto t : eval_types) {
      if (grammar::BucketOf(r.prompt) == grammar::TypeName(t)) records.push_back(&r);
    }
  }
  if (records.empty()) throw Error(ErrorCode::kNotFound, "no records of the evaluated types");

  ShotAblationTable table;
  table.shot_type = shot_type;
  table.eval_types = eval_types;
  table.n_prompts = records.size();
  for (int k = 1; k <= max_shots; ++k) {
    std::vector<clarify::ShotExample> prefix(it->second.begin(), it->second.begin() + k);
    std::vector<clarify::ClarificationResult> results(records.size());
    ParallelFor(records.size(), parallelism, [&](size_t i) {
      results[i] =
          clarify::Clarify(records[i]->prompt, FewShotMode::kOneQuestion, prefix, client, params);
    });
    table.scores.push_back(ScoreResults(records, results, FewShotMode::kOneQuestion));
  }
  return table;
}

namespace {

std::string Cell(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string Pad(std::string s, size_t width) {
  if (s.size() < width) s.resize(width, ' ');
  return s;
}

}  // namespace

std::string FormatShotAblation(const ShotAblationTable& table) {
  std::ostringstream out;
  out << "one clarifying question with " << grammar::TypeName(table.shot_type)
      << " shots, " << table.n_prompts << " prompts\n";
  constexpr size_t kLabel = 18;
  out << Pad("", kLabel);
  for (size_t k = 1; k <= table.scores.size(); ++k) {
    out << " | " << Pad(std::to_string(k) + "-shot", 11);
  }
  out << "\n" << Pad("Ambiguity Type", kLabel);
  for (size_t k = 0; k < table.scores.size(); ++k) out << " | BLEU  ROUGE";
  out << "\n";
  auto row = [&](const std::string& label, auto pick) {
    out << Pad(label, kLabel);
    for (const auto& s : table.scores) {
      auto [b, r] = pick(s);
      out << " | " << Cell(b) << "  " << Cell(r) << " ";
    }
    out << "\n";
  };
  row("Total Benchmark", [](const metrics::ScoreReport& s) {
    return std::pair<double, double>(s.bleu, s.rouge);
  });
  for (auto t : table.eval_types) {
    const std::string name(grammar::TypeName(t));
    row(name, [&](const metrics::ScoreReport& s) {
      auto it = s.per_type.find(name);
      return it == s.per_type.end() ? std::pair<double, double>(0, 0)
                                    : std::pair<double, double>(it->second.bleu, it->second.rouge);
    });
  }
  return out.str();
}

BenchmarkRecord SimpleCounterpart(const grammar::Grammar& grammar, const BenchmarkRecord& complex) {
  grammar::Bindings b = complex.prompt.bindings;
  if (b.erase(std::string(grammar::kDecorationSlot)) == 0) {
    throw Error(ErrorCode::kInvalidArgument, "record " + complex.prompt.id + " is not complex");
  }
  grammar::AmbiguousPrompt p = grammar.Instantiate(complex.prompt.template_id, b);
  p.id = complex.prompt.id + "-simple";
  return grammar.MakeRecord(p);
}

ComplexityAblationTable RunComplexityAblation(const grammar::Benchmark& benchmark,
                                              const grammar::Grammar& grammar,
                                              clarify::Clarifier& clarifier,
                                              const std::vector<FewShotMode>& modes,
                                              int parallelism) {
  std::vector<BenchmarkRecord> simple;
  std::vector<const BenchmarkRecord*> complex;
  for (const auto& r : benchmark.records) {
    if (r.prompt.complexity != grammar::Complexity::kComplex) continue;
    complex.push_back(&r);
    simple.push_back(SimpleCounterpart(grammar, r));
  }
  if (complex.empty()) throw Error(ErrorCode::kNotFound, "benchmark has no complex records");
  std::vector<const BenchmarkRecord*> simple_ptrs;
  for (const auto& r : simple) simple_ptrs.push_back(&r);

  ComplexityAblationTable table;
  table.n_pairs = complex.size();
  for (FewShotMode m : modes) {
    ComplexityRow row;
    row.mode = m;
    row.simple = ScoreClarifications(simple_ptrs, m, clarifier, parallelism);
    row.complex = ScoreClarifications(complex, m, clarifier, parallelism);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string FormatComplexityAblation(const ComplexityAblationTable& table) {
  std::ostringstream out;
  out << table.n_pairs << " simple/complex pairs\n";
  constexpr size_t kLabel = 30;
  out << Pad("", kLabel) << " | " << Pad("BLEU", 15) << " | ROUGE\n";
  out << Pad("Mode", kLabel) << " | simple  complex | simple  complex\n";
  for (const auto& row : table.rows) {
    std::string label;
    switch (row.mode) {
      case FewShotMode::kOneQuestion: label = "One Clarifying Question"; break;
      case FewShotMode::kMultiQuestion: label = "Multiple Clarifying Questions"; break;
      case FewShotMode::kMultiSetup: label = "Multiple Visual Setups"; break;
    }
    out << Pad(label, kLabel) << " | " << Cell(row.simple.bleu) << "    " << Cell(row.complex.bleu)
        << "    | " << Cell(row.simple.rouge) << "    " << Cell(row.complex.rouge) << "\n";
  }
  return out.str();
}

}  // namespace promptlens::eval
