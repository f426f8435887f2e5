#ifndef PROMPTLENS_EVAL_EVAL_H_
#define PROMPTLENS_EVAL_EVAL_H_

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptlens/http/client.h"
#include "promptlens/session/session.h"

namespace promptlens::eval {

class T2iClient {
 public:
  virtual ~T2iClient() = default;
  // Exactly `n` image payloads (raw bytes) or an exception.
  virtual std::vector<std::string> Generate(const std::string& prompt, int n) = 0;
};

// POSTs {prompt, n}; accepts {images: [...]} whose entries are base64
// strings, {b64} / {b64_json} objects or {url} objects (fetched with GET).
class HttpT2iClient : public T2iClient {
 public:
  explicit HttpT2iClient(http::EndpointConfig config);
  std::vector<std::string> Generate(const std::string& prompt, int n) override;

 private:
  http::JsonClient client_;
};

class VqaClient {
 public:
  virtual ~VqaClient() = default;
  // The endpoint's top answer, unnormalized.
  virtual std::string Ask(const std::string& image, const std::string& question) = 0;
};

// POSTs {image: base64, question}; expects {answer, score?}.
class HttpVqaClient : public VqaClient {
 public:
  explicit HttpVqaClient(http::EndpointConfig config);
  std::string Ask(const std::string& image, const std::string& question) override;

 private:
  http::JsonClient client_;
};

// Content-addressed image store. Blobs live under <dir>/blobs/<sha256> and
// <dir>/index.jsonl maps (prompt hash, n, i) to a blob; an empty directory
// keeps everything in memory. Thread-safe.
class ImageStore {
 public:
  explicit ImageStore(std::string dir = {});

  // Hashes of a complete cached set, or nullopt.
  std::optional<std::vector<std::string>> Lookup(std::string_view prompt, int n) const;
  // Stores a full set; returns the blob hashes in order.
  std::vector<std::string> Put(std::string_view prompt, int n,
                               const std::vector<std::string>& images);
  // Error(kNotFound) for an unknown hash.
  std::string Read(std::string_view hash) const;
  bool Contains(std::string_view hash) const;

  const std::string& dir() const { return dir_; }

 private:
  static std::string Key(std::string_view prompt_hash, int n, int i);
  void LoadIndex();

  std::string dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> index_;  // key -> blob hash
  std::map<std::string, std::string> blobs_;  // in-memory mode only
};

struct StoredImage {
  std::string hash;

  bool operator==(const StoredImage&) const = default;
};

struct ImageSet {
  std::string prompt_text;
  std::vector<StoredImage> images;
  int n_requested = 0;
  // Whether the endpoint was called (false on a warm store).
  bool generated = false;
};

// Error(kInvalidArgument) for n < 1; Error(kEndpoint) when the endpoint
// returns the wrong number of images or duplicates. Nothing is stored on
// failure.
ImageSet GenerateImages(const std::string& prompt, int n, T2iClient& client, ImageStore& store);

// Lowercased, trimmed, trailing punctuation removed.
std::string NormalizeVqaAnswer(std::string_view answer);
// Only the literal normalized "yes".
bool IsYesAnswer(std::string_view normalized);

// Error(kInvalidArgument) for an empty question.
std::string VqaAnswer(const std::string& image, const std::string& question, VqaClient& client);

enum class Condition { kAmbiguous, kDisambiguated, kParaphrased };
inline constexpr Condition kAllConditions[] = {Condition::kAmbiguous, Condition::kDisambiguated,
                                               Condition::kParaphrased};
std::string_view ConditionName(Condition c);
std::optional<Condition> ParseCondition(std::string_view name);

struct FaithfulnessResult {
  std::string prompt_id;
  std::string question;
  std::vector<std::string> answers;
  size_t yes_count = 0;
  double rate = 0;
  Condition condition = Condition::kAmbiguous;
};

// Error(kInvalidArgument) for an empty image set.
FaithfulnessResult Faithfulness(const ImageSet& images, const std::string& question,
                                VqaClient& client, const ImageStore& store,
                                std::string prompt_id = {},
                                Condition condition = Condition::kAmbiguous);

// Where the VQA question comes from.
enum class QuestionSource {
  kIntention,  // the intention's ground-truth question; faithful = "yes"
  kGenerated,  // the clarifying question the session showed; faithful =
               // the VQA answer agrees with the human's yes/no
};
std::string_view QuestionSourceName(QuestionSource s);
std::optional<QuestionSource> ParseQuestionSource(std::string_view name);

struct ExperimentConfig {
  std::vector<Condition> conditions = {Condition::kAmbiguous, Condition::kDisambiguated};
  int n_images = 4;
  int parallelism = 4;
  QuestionSource question_source = QuestionSource::kIntention;
};

std::string ExperimentConfigJson(const ExperimentConfig& config);
ExperimentConfig ParseExperimentConfig(std::string_view json);

struct ItemResult {
  std::string session_id;
  std::string record_id;
  std::string ambiguity_type;
  Condition condition = Condition::kAmbiguous;
  std::string prompt;
  std::string question;
  std::string expected;  // "yes" or "no"
  std::vector<std::string> image_hashes;
  std::vector<std::string> answers;  // normalized
  size_t yes_count = 0;  // answers equal to `expected`
  double rate = 0;

  bool operator==(const ItemResult&) const = default;
};

struct Aggregate {
  double mean_per_prompt = 0;  // mean of item rates
  double mean_per_image = 0;   // pooled over images
  size_t n_items = 0;
  size_t n_images = 0;

  bool operator==(const Aggregate&) const = default;
};

struct CorrelationBlock {
  std::optional<double> pearson;
  std::optional<double> fleiss_kappa;
  size_t n_points = 0;
  size_t n_subjects = 0;
  size_t n_raters = 0;
  // Why a statistic is missing (MetricErrors::kRecord only).
  std::optional<std::string> pearson_error;
  std::optional<std::string> fleiss_kappa_error;

  bool operator==(const CorrelationBlock&) const = default;
};

struct ExperimentReport {
  std::string config_hash;
  ExperimentConfig config;
  session::BatchStats sessions;
  std::map<Condition, Aggregate> overall;
  std::map<Condition, std::map<std::string, Aggregate>> per_type;
  std::vector<ItemResult> items;  // session order, then condition order
  std::optional<CorrelationBlock> correlation;
  // Endpoint calls made by this run (not serialized).
  size_t generation_requests = 0;
  size_t vqa_requests = 0;
};

using Progress = std::function<void(size_t done, size_t total)>;

// Scores every non-skipped session under each condition. Error(kFailedPrecondition)
// when a requested condition lacks prompts (e.g. paraphrased without a
// paraphrase step) or the generated question source has no question.
ExperimentReport RunExperiment(const std::vector<session::Session>& sessions,
                               const ExperimentConfig& config, T2iClient& t2i, VqaClient& vqa,
                               ImageStore& store, const Progress& progress = {});

// Recomputes every aggregate from the item log.
void RecomputeAggregates(ExperimentReport& report);

// One human verdict on one generated image.
struct HumanLabel {
  std::string session_id;
  Condition condition = Condition::kAmbiguous;
  int image_index = 0;
  std::string rater;
  bool faithful = false;

  bool operator==(const HumanLabel&) const = default;
};

// {"labels": [{session_id, condition, image_index, rater, faithful}, ...]}
// or a bare array.
std::vector<HumanLabel> ParseHumanLabels(std::string_view json);
std::string HumanLabelsJson(const std::vector<HumanLabel>& labels);

enum class MetricErrors {
  kPropagate,
  kRecord,  // leave the statistic empty and store the message
};

// Pearson between each labelled item's automatic rate and its human rate
// (mean verdict over images and raters), and Fleiss kappa over the raw
// yes/no ratings per image. Error(kInvalidArgument) for labels naming no
// item of the report.
CorrelationBlock CorrelateWithHuman(const ExperimentReport& report,
                                    const std::vector<HumanLabel>& labels,
                                    MetricErrors errors = MetricErrors::kPropagate);

std::string ReportJson(const ExperimentReport& report);
ExperimentReport ParseReportJson(std::string_view json);
// One row per item: tab-separated with a header line.
std::string ReportTsv(const ExperimentReport& report);
// Human-readable summary table.
std::string ReportText(const ExperimentReport& report);

// Runs fn(0..n-1) on up to `parallelism` threads; the first exception is
// rethrown after all workers stop.
void ParallelFor(size_t n, int parallelism, const std::function<void(size_t)>& fn);

}  // namespace promptlens::eval

#endif  // PROMPTLENS_EVAL_EVAL_H_
