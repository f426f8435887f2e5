#ifndef PROMPTLENS_GRAMMAR_BENCHMARK_H_
#define PROMPTLENS_GRAMMAR_BENCHMARK_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "promptlens/grammar/grammar.h"
#include "promptlens/grammar/types.h"

namespace promptlens::grammar {

// Record buckets: the seven ambiguity types for simple, non-combined
// records, plus "complex" and "combination".
inline constexpr std::string_view kComplexBucket = "complex";
inline constexpr std::string_view kCombinationBucket = "combination";

std::string BucketOf(const AmbiguousPrompt& prompt);
// Bucket names in output order.
std::vector<std::string> BucketNames();

struct GenerationConfig {
  // Bucket name -> record count. Missing buckets count as zero.
  std::map<std::string, int> counts;
  // Probability that an optional group (e.g. [JJ]) is rendered.
  double optional_rate = 0.5;
  // Consecutive rejected samples tolerated before reporting exhaustion.
  int max_misses = 5000;

  int Total() const;
  int Count(std::string_view bucket) const;
};

// {"PP": 74, ..., "complex": 150, "combination": 145, "optional_rate": 0.5}.
// Throws Error(kParse) for unknown keys or negative counts.
GenerationConfig ParseGenerationConfig(std::string_view document);
GenerationConfig LoadGenerationConfig(const std::string& path);
std::string GenerationConfigJson(const GenerationConfig& config);
std::string GenerationConfigHash(const GenerationConfig& config);

struct Benchmark {
  int schema_version = 1;
  uint64_t seed = 0;
  GenerationConfig config;
  std::string config_hash;
  std::vector<BenchmarkRecord> records;

  const BenchmarkRecord* Find(std::string_view id) const;
  std::map<std::string, int> BucketCounts() const;
  size_t TotalInterpretations() const;
};

// Deterministic in (grammar lexicon, config, seed). Every emitted prompt is
// distinct and is recovered exactly by grammar.Detect. Throws
// Error(kExhausted) naming the bucket that could not be filled.
Benchmark GenerateBenchmark(const Grammar& grammar, const GenerationConfig& config,
                            uint64_t seed);

// Line-delimited JSON: a header line, then one record per line.
std::string SerializeBenchmark(const Benchmark& benchmark);
// Throws Error(kParse) naming the offending line.
Benchmark ParseBenchmark(std::string_view document);
Benchmark LoadBenchmarkFile(const std::string& path);
void WriteBenchmarkFile(const Benchmark& benchmark, const std::string& path);

std::string RecordJson(const BenchmarkRecord& record);
BenchmarkRecord ParseRecordJson(std::string_view line);

// Checks every benchmark invariant against the grammar; returns one message
// per violation, empty when the benchmark is valid.
std::vector<std::string> ValidateBenchmark(const Benchmark& benchmark, const Grammar& grammar);

}  // namespace promptlens::grammar

#endif  // PROMPTLENS_GRAMMAR_BENCHMARK_H_
