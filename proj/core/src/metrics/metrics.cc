#include "promptlens/metrics/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "promptlens/common/error.h"
#include "promptlens/common/text.h"

namespace promptlens::metrics {

namespace {

using NGramCounts = std::map<std::vector<std::string>, int>;

NGramCounts Count(const Tokens& t, size_t n) {
  NGramCounts out;
  for (size_t i = 0; i + n <= t.size(); ++i) {
    ++out[std::vector<std::string>(t.begin() + i, t.begin() + i + n)];
  }
  return out;
}

size_t ClosestRefLength(size_t cand, const std::vector<Tokens>& refs) {
  size_t best = refs.front().size();
  auto dist = [cand](size_t r) { return r > cand ? r - cand : cand - r; };
  for (const auto& r : refs) {
    const size_t len = r.size();
    if (dist(len) < dist(best) || (dist(len) == dist(best) && len < best)) best = len;
  }
  return best;
}

size_t Overlap(const Tokens& a, const Tokens& b) {
  std::map<std::string, int> ca, cb;
  for (const auto& t : a) ++ca[t];
  for (const auto& t : b) ++cb[t];
  size_t n = 0;
  for (const auto& [tok, c] : ca) {
    auto it = cb.find(tok);
    if (it != cb.end()) n += static_cast<size_t>(std::min(c, it->second));
  }
  return n;
}

}  // namespace

Tokens Tokenize(std::string_view s) {
  Tokens out;
  for (const auto& w : text::SplitWhitespace(text::Lower(s))) {
    std::string t = text::StripTrailingPunct(w);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

double Bleu4Weighted(const std::vector<Tokens>& candidates,
                     const std::vector<std::vector<Tokens>>& references,
                     const std::vector<double>& weights) {
  if (candidates.size() != references.size() || candidates.size() != weights.size()) {
    throw Error(ErrorCode::kInvalidArgument, "bleu4: candidates and references differ in length");
  }
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "bleu4: empty corpus");
  double matches[4] = {0, 0, 0, 0};
  double totals[4] = {0, 0, 0, 0};
  double cand_len = 0, ref_len = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const Tokens& cand = candidates[i];
    const auto& refs = references[i];
    if (refs.empty()) throw Error(ErrorCode::kInvalidArgument, "bleu4: empty reference set");
    const double w = weights[i];
    if (!(w > 0)) throw Error(ErrorCode::kInvalidArgument, "bleu4: weights must be positive");
    for (size_t n = 1; n <= 4; ++n) {
      NGramCounts max_ref;
      for (const auto& r : refs) {
        for (const auto& [g, c] : Count(r, n)) max_ref[g] = std::max(max_ref[g], c);
      }
      int clipped = 0, total = 0;
      for (const auto& [g, c] : Count(cand, n)) {
        total += c;
        auto it = max_ref.find(g);
        if (it != max_ref.end()) clipped += std::min(c, it->second);
      }
      matches[n - 1] += w * clipped;
      totals[n - 1] += w * total;
    }
    cand_len += w * static_cast<double>(cand.size());
    ref_len += w * static_cast<double>(ClosestRefLength(cand.size(), refs));
  }
  double log_precision = 0;
  for (int n = 0; n < 4; ++n) {
    if (matches[n] == 0 || totals[n] == 0) return 0.0;
    log_precision += std::log(matches[n] / totals[n]);
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return std::clamp(bp * std::exp(log_precision / 4.0), 0.0, 1.0);
}

double Bleu4(const std::vector<Tokens>& candidates,
             const std::vector<std::vector<Tokens>>& references) {
  return Bleu4Weighted(candidates, references, std::vector<double>(candidates.size(), 1.0));
}

double Rouge1(const Tokens& candidate, const std::vector<Tokens>& references) {
  if (references.empty()) throw Error(ErrorCode::kInvalidArgument, "rouge1: empty reference set");
  double best = 0;
  for (const auto& ref : references) {
    if (candidate.empty() || ref.empty()) continue;
    const double overlap = static_cast<double>(Overlap(candidate, ref));
    const double p = overlap / static_cast<double>(candidate.size());
    const double r = overlap / static_cast<double>(ref.size());
    if (p + r > 0) best = std::max(best, 2 * p * r / (p + r));
  }
  return best;
}

double Pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorCode::kInvalidArgument, "pearson: sequences differ in length");
  }
  if (xs.size() < 2) throw Error(ErrorCode::kInvalidArgument, "pearson: needs at least 2 points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) {
    throw Error(ErrorCode::kUndefined, "pearson: constant sequence has no variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double FleissKappa(const std::vector<std::vector<int>>& ratings) {
  if (ratings.empty() || ratings.front().empty()) {
    throw Error(ErrorCode::kInvalidArgument, "fleiss_kappa: empty ratings matrix");
  }
  const size_t k = ratings.front().size();
  long raters = -1;
  for (const auto& row : ratings) {
    if (row.size() != k) throw Error(ErrorCode::kInvalidArgument, "fleiss_kappa: ragged matrix");
    long sum = 0;
    for (int c : row) {
      if (c < 0) throw Error(ErrorCode::kInvalidArgument, "fleiss_kappa: negative count");
      sum += c;
    }
    if (raters < 0) raters = sum;
    if (sum != raters) {
      throw Error(ErrorCode::kInvalidArgument, "fleiss_kappa: rows have different rater counts");
    }
  }
  if (raters < 2) throw Error(ErrorCode::kInvalidArgument, "fleiss_kappa: needs at least 2 raters");
  const double n = static_cast<double>(raters);
  const double subjects = static_cast<double>(ratings.size());
  std::vector<double> column(k, 0);
  double p_bar = 0;
  for (const auto& row : ratings) {
    double sq = 0;
    for (size_t j = 0; j < k; ++j) {
      sq += static_cast<double>(row[j]) * row[j];
      column[j] += row[j];
    }
    p_bar += (sq - n) / (n * (n - 1));
  }
  p_bar /= subjects;
  double p_e = 0;
  for (double c : column) p_e += (c / (subjects * n)) * (c / (subjects * n));
  if (p_e >= 1.0) {
    throw Error(ErrorCode::kUndefined, "fleiss_kappa: all ratings fall in one category");
  }
  return (p_bar - p_e) / (1 - p_e);
}

ScoreReport ScoreGenerations(const std::vector<ScoreItem>& items, ScoreMode mode) {
  if (items.empty()) throw Error(ErrorCode::kInvalidArgument, "score_generations: no items");
  struct Corpus {
    std::vector<Tokens> cands;
    std::vector<std::vector<Tokens>> refs;
    std::vector<double> weights;
    double rouge_sum = 0;
    size_t n = 0;
  };
  Corpus all;
  std::map<std::string, Corpus> by_type;
  for (const auto& item : items) {
    if (item.references.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "score_generations: item without references");
    }
    std::vector<Tokens> refs;
    for (const auto& r : item.references) refs.push_back(Tokenize(r));
    std::vector<std::string> gens = item.generations;
    if (gens.empty()) gens.emplace_back();
    if (mode == ScoreMode::kFirst) gens.resize(1);
    const double w = 1.0 / static_cast<double>(gens.size());
    double rouge = 0;
    for (Corpus* c : {&all, &by_type[item.type]}) {
      for (const auto& g : gens) {
        c->cands.push_back(Tokenize(g));
        c->refs.push_back(refs);
        c->weights.push_back(w);
      }
    }
    for (const auto& g : gens) rouge += Rouge1(Tokenize(g), refs);
    rouge /= static_cast<double>(gens.size());
    for (Corpus* c : {&all, &by_type[item.type]}) {
      c->rouge_sum += rouge;
      ++c->n;
    }
  }
  ScoreReport report;
  report.bleu = Bleu4Weighted(all.cands, all.refs, all.weights);
  report.rouge = all.rouge_sum / static_cast<double>(all.n);
  report.n_items = all.n;
  for (const auto& [type, c] : by_type) {
    report.per_type[type] = TypeScore{Bleu4Weighted(c.cands, c.refs, c.weights),
                                      c.rouge_sum / static_cast<double>(c.n), c.n};
  }
  return report;
}

}  // namespace promptlens::metrics
