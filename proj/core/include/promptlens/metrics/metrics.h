#ifndef PROMPTLENS_METRICS_METRICS_H_
#define PROMPTLENS_METRICS_METRICS_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace promptlens::metrics {

using Tokens = std::vector<std::string>;

// Lowercases, splits on whitespace and strips trailing .,;:?! from each
// token; empty tokens are dropped.
Tokens Tokenize(std::string_view text);

// Corpus BLEU-4: clipped n-gram precisions for n = 1..4 summed over the
// corpus, geometric mean, brevity penalty against the closest reference
// length (the shorter one on ties). 0 when any corpus precision has a zero
// numerator. Throws Error(kInvalidArgument) on a size mismatch, an empty
// corpus or an empty reference set.
double Bleu4(const std::vector<Tokens>& candidates,
             const std::vector<std::vector<Tokens>>& references);

// Same, with candidate i's counts scaled by weights[i] > 0.
double Bleu4Weighted(const std::vector<Tokens>& candidates,
                     const std::vector<std::vector<Tokens>>& references,
                     const std::vector<double>& weights);

// Unigram F1 with clipped overlap, maximized over references.
double Rouge1(const Tokens& candidate, const std::vector<Tokens>& references);

// Sample Pearson r. Throws Error(kInvalidArgument) for fewer than two points
// or mismatched lengths and Error(kUndefined) for a constant sequence.
double Pearson(const std::vector<double>& xs, const std::vector<double>& ys);

// subjects x categories counts, each row summing to the same rater count
// (at least 2). Throws Error(kInvalidArgument) for a malformed matrix and
// Error(kUndefined) when all ratings fall in one category.
double FleissKappa(const std::vector<std::vector<int>>& ratings);

struct ScoreItem {
  std::vector<std::string> generations;
  std::vector<std::string> references;
  std::string type;
};

// kFirst scores only the first generation of each item; kAll scores every
// generation against the full reference set, each item carrying total
// weight 1 in the corpus BLEU counts and its ROUGE being the mean over its
// generations.
enum class ScoreMode { kFirst, kAll };

struct TypeScore {
  double bleu = 0;
  double rouge = 0;
  size_t n_items = 0;
};

struct ScoreReport {
  double bleu = 0;
  double rouge = 0;
  size_t n_items = 0;
  std::map<std::string, TypeScore> per_type;
};

// Items without generations count as a single empty generation, so an
// unparseable model output scores 0 instead of disappearing. Throws
// Error(kInvalidArgument) for an empty item list or an item without
// references.
ScoreReport ScoreGenerations(const std::vector<ScoreItem>& items, ScoreMode mode);

}  // namespace promptlens::metrics

#endif  // PROMPTLENS_METRICS_METRICS_H_
