#include "promptlens/eval/eval.h"

#include <exception>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "promptlens/common/error.h"
#include "promptlens/common/hash.h"
#include "promptlens/common/text.h"
#include "promptlens/grammar/types.h"
#include "promptlens/metrics/metrics.h"

namespace promptlens::eval {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string ReadAll(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool StartsWithNo(std::string_view answer) {
  std::string t = text::Lower(text::Trim(answer));
  return text::StripTrailingPunct(t) == "no" || text::StartsWith(t, "no,");
}

}  // namespace

HttpT2iClient::HttpT2iClient(http::EndpointConfig config) : client_(std::move(config)) {}

std::vector<std::string> HttpT2iClient::Generate(const std::string& prompt, int n) {
  const std::string body = client_.Post(ordered_json{{"prompt", prompt}, {"n", n}}.dump());
  std::vector<std::string> out;
  try {
    auto res = ordered_json::parse(body);
    for (const auto& img : res.at("images")) {
      if (img.is_string()) {
        out.push_back(Base64Decode(img.get<std::string>()));
      } else if (img.contains("b64")) {
        out.push_back(Base64Decode(img.at("b64").get<std::string>()));
      } else if (img.contains("b64_json")) {
        out.push_back(Base64Decode(img.at("b64_json").get<std::string>()));
      } else {
        out.push_back(client_.Get(img.at("url").get<std::string>()));
      }
    }
  } catch (const ordered_json::exception&) {
    throw EndpointError("image endpoint returned an unrecognized body", 200, 1, std::nullopt,
                        body);
  }
  return out;
}

HttpVqaClient::HttpVqaClient(http::EndpointConfig config) : client_(std::move(config)) {}

std::string HttpVqaClient::Ask(const std::string& image, const std::string& question) {
  const std::string body =
      client_.Post(ordered_json{{"image", Base64Encode(image)}, {"question", question}}.dump());
  try {
    return ordered_json::parse(body).at("answer").get<std::string>();
  } catch (const ordered_json::exception&) {
    throw EndpointError("vqa endpoint returned an unrecognized body", 200, 1, std::nullopt, body);
  }
}

ImageStore::ImageStore(std::string dir) : dir_(std::move(dir)) {
  if (dir_.empty()) return;
  std::error_code ec;
  fs::create_directories(fs::path(dir_) / "blobs", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create image store " + dir_ + ": " + ec.message());
  LoadIndex();
}

std::string ImageStore::Key(std::string_view prompt_hash, int n, int i) {
  return std::string(prompt_hash) + "/" + std::to_string(n) + "/" + std::to_string(i);
}

void ImageStore::LoadIndex() {
  const fs::path path = fs::path(dir_) / "index.jsonl";
  if (!fs::exists(path)) return;
  std::istringstream in(ReadAll(path));
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::Trim(line).empty()) continue;
    try {
      auto j = ordered_json::parse(line);
      const std::string hash = j.at("hash").get<std::string>();
      if (!fs::exists(fs::path(dir_) / "blobs" / hash)) continue;
      index_[Key(j.at("prompt_hash").get<std::string>(), j.at("n").get<int>(),
                 j.at("i").get<int>())] = hash;
    } catch (const ordered_json::exception&) {
      // a torn final append is dropped; earlier lines must be intact
      if (in.peek() != std::char_traits<char>::eof()) {
        throw Error(ErrorCode::kParse,
                    "image index line " + std::to_string(line_no) + " is corrupt");
      }
    }
  }
}

std::optional<std::vector<std::string>> ImageStore::Lookup(std::string_view prompt, int n) const {
  const std::string ph = Sha256Hex(prompt);
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    auto it = index_.find(Key(ph, n, i));
    if (it == index_.end()) return std::nullopt;
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::string> ImageStore::Put(std::string_view prompt, int n,
                                         const std::vector<std::string>& images) {
  const std::string ph = Sha256Hex(prompt);
  std::vector<std::string> hashes;
  for (const auto& img : images) hashes.push_back(Sha256Hex(img));
  std::lock_guard<std::mutex> lock(mu_);
  if (dir_.empty()) {
    for (size_t i = 0; i < images.size(); ++i) {
      blobs_[hashes[i]] = images[i];
      index_[Key(ph, n, static_cast<int>(i))] = hashes[i];
    }
    return hashes;
  }
  for (size_t i = 0; i < images.size(); ++i) {
    const fs::path blob = fs::path(dir_) / "blobs" / hashes[i];
    if (fs::exists(blob)) continue;
    const fs::path tmp = blob.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out.write(images[i].data(), static_cast<std::streamsize>(images[i].size()));
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    }
    fs::rename(tmp, blob);
  }
  std::ofstream idx(fs::path(dir_) / "index.jsonl", std::ios::app | std::ios::binary);
  for (size_t i = 0; i < images.size(); ++i) {
    idx << ordered_json{{"prompt_hash", ph}, {"n", n}, {"i", i}, {"hash", hashes[i]}}.dump()
        << '\n';
    index_[Key(ph, n, static_cast<int>(i))] = hashes[i];
  }
  if (!idx.flush()) throw Error(ErrorCode::kIo, "cannot append to image index in " + dir_);
  return hashes;
}

std::string ImageStore::Read(std::string_view hash) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (dir_.empty()) {
    auto it = blobs_.find(std::string(hash));
    if (it == blobs_.end()) throw Error(ErrorCode::kNotFound, "no image " + std::string(hash));
    return it->second;
  }
  // hashes are hex, so they cannot escape the blob directory
  if (hash.empty() || hash.find_first_not_of("0123456789abcdef") != std::string_view::npos) {
    throw Error(ErrorCode::kNotFound, "no image " + std::string(hash));
  }
  const fs::path blob = fs::path(dir_) / "blobs" / std::string(hash);
  if (!fs::exists(blob)) throw Error(ErrorCode::kNotFound, "no image " + std::string(hash));
  return ReadAll(blob);
}

bool ImageStore::Contains(std::string_view hash) const {
  try {
    Read(hash);
    return true;
  } catch (const Error&) {
    return false;
  }
}

ImageSet GenerateImages(const std::string& prompt, int n, T2iClient& client, ImageStore& store) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "image count must be at least 1");
  ImageSet set;
  set.prompt_text = prompt;
  set.n_requested = n;
  std::optional<std::vector<std::string>> hashes = store.Lookup(prompt, n);
  if (!hashes) {
    std::vector<std::string> images = client.Generate(prompt, n);
    set.generated = true;
    if (static_cast<int>(images.size()) != n) {
      throw EndpointError("image endpoint returned " + std::to_string(images.size()) +
                              " images, expected " + std::to_string(n),
                          200, 1, std::nullopt, {});
    }
    std::set<std::string> seen;
    for (const auto& img : images) {
      if (!seen.insert(Sha256Hex(img)).second) {
        throw EndpointError("image endpoint returned duplicate images", 200, 1, std::nullopt, {});
      }
    }
    hashes = store.Put(prompt, n, images);
  }
  for (auto& h : *hashes) set.images.push_back(StoredImage{std::move(h)});
  return set;
}

std::string NormalizeVqaAnswer(std::string_view answer) {
  return text::Trim(text::StripTrailingPunct(text::Lower(text::Trim(answer))));
}

bool IsYesAnswer(std::string_view normalized) { return normalized == "yes"; }

std::string VqaAnswer(const std::string& image, const std::string& question, VqaClient& client) {
  if (text::Trim(question).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "vqa question is empty");
  }
  return NormalizeVqaAnswer(client.Ask(image, question));
}

std::string_view ConditionName(Condition c) {
  switch (c) {
    case Condition::kAmbiguous: return "ambiguous";
    case Condition::kDisambiguated: return "disambiguated";
    case Condition::kParaphrased: return "paraphrased";
  }
  return "ambiguous";
}

std::optional<Condition> ParseCondition(std::string_view name) {
  for (Condition c : kAllConditions) {
    if (ConditionName(c) == name) return c;
  }
  return std::nullopt;
}

FaithfulnessResult Faithfulness(const ImageSet& images, const std::string& question,
                                VqaClient& client, const ImageStore& store,
                                std::string prompt_id, Condition condition) {
  if (images.images.empty()) throw Error(ErrorCode::kInvalidArgument, "image set is empty");
  FaithfulnessResult r;
  r.prompt_id = std::move(prompt_id);
  r.question = question;
  r.condition = condition;
  for (const auto& img : images.images) {
    r.answers.push_back(VqaAnswer(store.Read(img.hash), question, client));
    if (IsYesAnswer(r.answers.back())) ++r.yes_count;
  }
  r.rate = static_cast<double>(r.yes_count) / static_cast<double>(r.answers.size());
  return r;
}

std::string_view QuestionSourceName(QuestionSource s) {
  return s == QuestionSource::kIntention ? "intention" : "generated";
}

std::optional<QuestionSource> ParseQuestionSource(std::string_view name) {
  if (name == "intention") return QuestionSource::kIntention;
  if (name == "generated") return QuestionSource::kGenerated;
  return std::nullopt;
}

namespace {

ordered_json ConfigToJson(const ExperimentConfig& c) {
  ordered_json conds = ordered_json::array();
  for (Condition x : c.conditions) conds.push_back(ConditionName(x));
  return {{"conditions", conds},
          {"n_images", c.n_images},
          {"parallelism", c.parallelism},
          {"question_source", QuestionSourceName(c.question_source)}};
}

ExperimentConfig ConfigFromJson(const ordered_json& j) {
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "conditions") {
      c.conditions.clear();
      for (const auto& x : value) {
        auto cond = ParseCondition(x.get<std::string>());
        if (!cond) throw Error(ErrorCode::kParse, "unknown condition " + x.dump());
        c.conditions.push_back(*cond);
      }
    } else if (key == "n_images") {
      c.n_images = value.get<int>();
    } else if (key == "parallelism") {
      c.parallelism = value.get<int>();
    } else if (key == "question_source") {
      auto q = ParseQuestionSource(value.get<std::string>());
      if (!q) throw Error(ErrorCode::kParse, "unknown question source " + value.dump());
      c.question_source = *q;
    } else {
      throw Error(ErrorCode::kParse, "unknown experiment config key '" + key + "'");
    }
  }
  if (c.conditions.empty()) throw Error(ErrorCode::kParse, "no conditions");
  if (c.n_images < 1) throw Error(ErrorCode::kParse, "n_images must be at least 1");
  return c;
}

ordered_json AggregateJson(const Aggregate& a) {
  return {{"mean_per_prompt", a.mean_per_prompt},
          {"mean_per_image", a.mean_per_image},
          {"n_items", a.n_items},
          {"n_images", a.n_images}};
}

Aggregate AggregateFromJson(const ordered_json& j) {
  Aggregate a;
  a.mean_per_prompt = j.at("mean_per_prompt").get<double>();
  a.mean_per_image = j.at("mean_per_image").get<double>();
  a.n_items = j.at("n_items").get<size_t>();
  a.n_images = j.at("n_images").get<size_t>();
  return a;
}

struct Accumulator {
  double rate_sum = 0;
  size_t yes = 0;
  size_t images = 0;
  size_t items = 0;

  void Add(const ItemResult& r) {
    rate_sum += r.rate;
    yes += r.yes_count;
    images += r.answers.size();
    ++items;
  }
  Aggregate Finish() const {
    Aggregate a;
    a.n_items = items;
    a.n_images = images;
    a.mean_per_prompt = items ? rate_sum / static_cast<double>(items) : 0.0;
    a.mean_per_image = images ? static_cast<double>(yes) / static_cast<double>(images) : 0.0;
    return a;
  }
};

struct PlannedItem {
  const session::Session* session;
  Condition condition;
  std::string prompt;
  std::string question;
  std::string expected;
};

}  // namespace

std::string ExperimentConfigJson(const ExperimentConfig& config) {
  return ConfigToJson(config).dump();
}

ExperimentConfig ParseExperimentConfig(std::string_view json) {
  try {
    return ConfigFromJson(ordered_json::parse(json));
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed experiment config: ") + e.what());
  }
}

void ParallelFor(size_t n, int parallelism, const std::function<void(size_t)>& fn) {
  const size_t workers = std::min<size_t>(n, static_cast<size_t>(std::max(1, parallelism)));
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        const size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

ExperimentReport RunExperiment(const std::vector<session::Session>& sessions,
                               const ExperimentConfig& config, T2iClient& t2i, VqaClient& vqa,
                               ImageStore& store, const Progress& progress) {
  if (config.conditions.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "experiment needs at least one condition");
  }
  if (config.n_images < 1) throw Error(ErrorCode::kInvalidArgument, "n_images must be >= 1");

  std::vector<PlannedItem> plan;
  for (const auto& s : sessions) {
    if (s.resolution.kind == session::ResolutionKind::kSkipped) continue;
    if (s.pending()) {
      throw Error(ErrorCode::kFailedPrecondition, "session " + s.session_id + " is pending");
    }
    std::string question = s.intention().question_text;
    std::string expected = "yes";
    if (config.question_source == QuestionSource::kGenerated) {
      const auto& items = s.clarification.items;
      if (!clarify::IsQuestionMode(s.mode) || items.empty()) {
        throw Error(ErrorCode::kFailedPrecondition,
                    "session " + s.session_id + " has no generated question");
      }
      question = items[s.resolution.index.value_or(0)];
      if (s.resolution.kind == session::ResolutionKind::kAnswered &&
          StartsWithNo(s.resolution.answer)) {
        expected = "no";
      }
    }
    for (Condition c : config.conditions) {
      const std::optional<std::string>* prompt = nullptr;
      std::optional<std::string> original = s.record.prompt.text;
      if (c == Condition::kAmbiguous) prompt = &original;
      if (c == Condition::kDisambiguated) prompt = &s.disambiguated_prompt;
      if (c == Condition::kParaphrased) prompt = &s.paraphrased_prompt;
      if (!*prompt) {
        throw Error(ErrorCode::kFailedPrecondition,
                    "session " + s.session_id + " has no " + std::string(ConditionName(c)) +
                        " prompt");
      }
      plan.push_back(PlannedItem{&s, c, **prompt, question, expected});
    }
  }

  std::vector<std::string> prompts;
  {
    std::set<std::string> seen;
    for (const auto& p : plan) {
      if (seen.insert(p.prompt).second) prompts.push_back(p.prompt);
    }
  }
  const size_t total = prompts.size() + plan.size();
  std::atomic<size_t> done{0};
  std::mutex progress_mu;
  auto tick = [&] {
    const size_t d = ++done;
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mu);
      progress(d, total);
    }
  };

  std::atomic<size_t> generation_requests{0};
  std::map<std::string, std::vector<std::string>> hashes_by_prompt;
  std::mutex map_mu;
  ParallelFor(prompts.size(), config.parallelism, [&](size_t i) {
    ImageSet set = GenerateImages(prompts[i], config.n_images, t2i, store);
    if (set.generated) ++generation_requests;
    std::vector<std::string> hashes;
    for (const auto& img : set.images) hashes.push_back(img.hash);
    {
      std::lock_guard<std::mutex> lock(map_mu);
      hashes_by_prompt[prompts[i]] = std::move(hashes);
    }
    tick();
  });

  std::atomic<size_t> vqa_requests{0};
  std::vector<ItemResult> items(plan.size());
  ParallelFor(plan.size(), config.parallelism, [&](size_t i) {
    const PlannedItem& p = plan[i];
    ItemResult r;
    r.session_id = p.session->session_id;
    r.record_id = p.session->record.prompt.id;
    r.ambiguity_type = std::string(grammar::TypeName(p.session->record.prompt.ambiguity_type));
    r.condition = p.condition;
    r.prompt = p.prompt;
    r.question = p.question;
    r.expected = p.expected;
    {
      std::lock_guard<std::mutex> lock(map_mu);
      r.image_hashes = hashes_by_prompt.at(p.prompt);
    }
    for (const auto& h : r.image_hashes) {
      r.answers.push_back(VqaAnswer(store.Read(h), p.question, vqa));
      ++vqa_requests;
      if (r.answers.back() == p.expected) ++r.yes_count;
    }
    r.rate = static_cast<double>(r.yes_count) / static_cast<double>(r.answers.size());
    items[i] = std::move(r);
    tick();
  });

  ExperimentReport report;
  report.config = config;
  {
    ordered_json h = ConfigToJson(config);
    h.erase("parallelism");
    ordered_json ids = ordered_json::array();
    for (const auto& s : sessions) ids.push_back(s.session_id);
    h["sessions"] = ids;
    report.config_hash = Fnv1a64Hex(h.dump());
  }
  report.sessions = session::Tally(sessions);
  report.items = std::move(items);
  report.generation_requests = generation_requests.load();
  report.vqa_requests = vqa_requests.load();
  RecomputeAggregates(report);
  return report;
}

void RecomputeAggregates(ExperimentReport& report) {
  std::map<Condition, Accumulator> overall;
  std::map<Condition, std::map<std::string, Accumulator>> per_type;
  for (const auto& r : report.items) {
    overall[r.condition].Add(r);
    per_type[r.condition][r.ambiguity_type].Add(r);
  }
  report.overall.clear();
  report.per_type.clear();
  for (Condition c : report.config.conditions) {
    report.overall[c] = overall[c].Finish();
    auto& dst = report.per_type[c];
    for (const auto& [type, acc] : per_type[c]) dst[type] = acc.Finish();
  }
}

std::vector<HumanLabel> ParseHumanLabels(std::string_view json) {
  std::vector<HumanLabel> out;
  try {
    auto doc = ordered_json::parse(json);
    const ordered_json& arr = doc.is_array() ? doc : doc.at("labels");
    for (const auto& l : arr) {
      HumanLabel h;
      h.session_id = l.at("session_id").get<std::string>();
      auto c = ParseCondition(l.at("condition").get<std::string>());
      if (!c) throw Error(ErrorCode::kParse, "unknown condition in human label");
      h.condition = *c;
      h.image_index = l.at("image_index").get<int>();
      h.rater = l.at("rater").get<std::string>();
      h.faithful = l.at("faithful").get<bool>();
      out.push_back(std::move(h));
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed human labels: ") + e.what());
  }
  return out;
}

std::string HumanLabelsJson(const std::vector<HumanLabel>& labels) {
  ordered_json arr = ordered_json::array();
  for (const auto& h : labels) {
    arr.push_back({{"session_id", h.session_id},
                   {"condition", ConditionName(h.condition)},
                   {"image_index", h.image_index},
                   {"rater", h.rater},
                   {"faithful", h.faithful}});
  }
  return ordered_json{{"labels", arr}}.dump();
}

CorrelationBlock CorrelateWithHuman(const ExperimentReport& report,
                                    const std::vector<HumanLabel>& labels, MetricErrors errors) {
  using ItemKey = std::pair<std::string, Condition>;
  std::map<ItemKey, const ItemResult*> items;
  for (const auto& r : report.items) items[{r.session_id, r.condition}] = &r;

  // item -> (sum of verdicts, count); image -> verdicts
  std::map<ItemKey, std::pair<double, size_t>> human;
  std::map<std::tuple<std::string, Condition, int>, std::map<std::string, bool>> per_image;
  std::set<std::string> raters;
  for (const auto& l : labels) {
    auto it = items.find({l.session_id, l.condition});
    if (it == items.end()) {
      throw Error(ErrorCode::kInvalidArgument, "human label for unknown item " + l.session_id +
                                                   "/" + std::string(ConditionName(l.condition)));
    }
    if (l.image_index < 0 ||
        l.image_index >= static_cast<int>(it->second->image_hashes.size())) {
      throw Error(ErrorCode::kOutOfRange, "human label image index out of range");
    }
    auto& h = human[it->first];
    h.first += l.faithful ? 1.0 : 0.0;
    ++h.second;
    per_image[{l.session_id, l.condition, l.image_index}][l.rater] = l.faithful;
    raters.insert(l.rater);
  }
  if (human.empty()) throw Error(ErrorCode::kInvalidArgument, "no human labels");

  CorrelationBlock block;
  std::vector<double> xs, ys;
  for (const auto& [key, h] : human) {
    xs.push_back(items.at(key)->rate);
    ys.push_back(h.first / static_cast<double>(h.second));
  }
  block.n_points = xs.size();
  auto guarded = [errors](auto compute, std::optional<double>& value,
                          std::optional<std::string>& why) {
    try {
      value = compute();
    } catch (const Error& e) {
      if (errors == MetricErrors::kPropagate) throw;
      why = e.what();
    }
  };
  guarded([&] { return metrics::Pearson(xs, ys); }, block.pearson, block.pearson_error);

  std::vector<std::vector<int>> ratings;
  for (const auto& [key, votes] : per_image) {
    int yes = 0;
    for (const auto& [rater, v] : votes) yes += v ? 1 : 0;
    ratings.push_back({yes, static_cast<int>(votes.size()) - yes});
  }
  block.n_subjects = ratings.size();
  block.n_raters = raters.size();
  guarded([&] { return metrics::FleissKappa(ratings); }, block.fleiss_kappa,
          block.fleiss_kappa_error);
  return block;
}

std::string ReportJson(const ExperimentReport& report) {
  ordered_json j;
  j["config_hash"] = report.config_hash;
  j["config"] = ConfigToJson(report.config);
  j["sessions"] = {{"total", report.sessions.total},
                   {"answered", report.sessions.answered},
                   {"selected", report.sessions.selected},
                   {"skipped", report.sessions.skipped},
                   {"success_rate", report.sessions.SuccessRate()}};
  ordered_json conds = ordered_json::object();
  for (const auto& [c, agg] : report.overall) {
    ordered_json types = ordered_json::object();
    if (auto it = report.per_type.find(c); it != report.per_type.end()) {
      for (const auto& [t, a] : it->second) types[t] = AggregateJson(a);
    }
    conds[std::string(ConditionName(c))] = {{"overall", AggregateJson(agg)},
                                            {"per_type", types}};
  }
  j["conditions"] = conds;
  if (report.correlation) {
    const auto& cb = *report.correlation;
    j["correlation"] = {{"pearson", cb.pearson ? ordered_json(*cb.pearson) : ordered_json()},
                        {"fleiss_kappa",
                         cb.fleiss_kappa ? ordered_json(*cb.fleiss_kappa) : ordered_json()},
                        {"n_points", cb.n_points},
                        {"n_subjects", cb.n_subjects},
                        {"n_raters", cb.n_raters}};
    if (cb.pearson_error) j["correlation"]["pearson_error"] = *cb.pearson_error;
    if (cb.fleiss_kappa_error) j["correlation"]["fleiss_kappa_error"] = *cb.fleiss_kappa_error;
  } else {
    j["correlation"] = nullptr;
  }
  ordered_json items = ordered_json::array();
  for (const auto& r : report.items) {
    items.push_back({{"session_id", r.session_id},
                     {"record_id", r.record_id},
                     {"ambiguity_type", r.ambiguity_type},
                     {"condition", ConditionName(r.condition)},
                     {"prompt", r.prompt},
                     {"question", r.question},
                     {"expected", r.expected},
                     {"image_hashes", r.image_hashes},
                     {"answers", r.answers},
                     {"yes_count", r.yes_count},
                     {"rate", r.rate}});
  }
  j["items"] = items;
  return j.dump(2) + "\n";
}

ExperimentReport ParseReportJson(std::string_view json) {
  ExperimentReport report;
  try {
    auto j = ordered_json::parse(json);
    report.config_hash = j.at("config_hash").get<std::string>();
    report.config = ConfigFromJson(j.at("config"));
    const auto& s = j.at("sessions");
    report.sessions.total = s.at("total").get<size_t>();
    report.sessions.answered = s.at("answered").get<size_t>();
    report.sessions.selected = s.at("selected").get<size_t>();
    report.sessions.skipped = s.at("skipped").get<size_t>();
    for (const auto& [name, block] : j.at("conditions").items()) {
      auto c = ParseCondition(name);
      if (!c) throw Error(ErrorCode::kParse, "unknown condition " + name);
      report.overall[*c] = AggregateFromJson(block.at("overall"));
      auto& dst = report.per_type[*c];
      for (const auto& [t, a] : block.at("per_type").items()) dst[t] = AggregateFromJson(a);
    }
    if (!j.at("correlation").is_null()) {
      const auto& cj = j.at("correlation");
      CorrelationBlock cb;
      if (!cj.at("pearson").is_null()) cb.pearson = cj.at("pearson").get<double>();
      if (!cj.at("fleiss_kappa").is_null()) cb.fleiss_kappa = cj.at("fleiss_kappa").get<double>();
      cb.n_points = cj.at("n_points").get<size_t>();
      cb.n_subjects = cj.at("n_subjects").get<size_t>();
      cb.n_raters = cj.at("n_raters").get<size_t>();
      if (cj.contains("pearson_error")) cb.pearson_error = cj.at("pearson_error").get<std::string>();
      if (cj.contains("fleiss_kappa_error")) {
        cb.fleiss_kappa_error = cj.at("fleiss_kappa_error").get<std::string>();
      }
      report.correlation = cb;
    }
    for (const auto& ij : j.at("items")) {
      ItemResult r;
      r.session_id = ij.at("session_id").get<std::string>();
      r.record_id = ij.at("record_id").get<std::string>();
      r.ambiguity_type = ij.at("ambiguity_type").get<std::string>();
      auto c = ParseCondition(ij.at("condition").get<std::string>());
      if (!c) throw Error(ErrorCode::kParse, "unknown item condition");
      r.condition = *c;
      r.prompt = ij.at("prompt").get<std::string>();
      r.question = ij.at("question").get<std::string>();
      r.expected = ij.at("expected").get<std::string>();
      r.image_hashes = ij.at("image_hashes").get<std::vector<std::string>>();
      r.answers = ij.at("answers").get<std::vector<std::string>>();
      r.yes_count = ij.at("yes_count").get<size_t>();
      r.rate = ij.at("rate").get<double>();
      report.items.push_back(std::move(r));
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string ReportTsv(const ExperimentReport& report) {
  auto clean = [](std::string s) {
    for (char& ch : s) {
      if (ch == '\t' || ch == '\n' || ch == '\r') ch = ' ';
    }
    return s;
  };
  std::string out =
      "session_id\trecord_id\tambiguity_type\tcondition\tquestion_source\tn_images\tyes_count\t"
      "rate\tprompt\tquestion\tanswers\n";
  const std::string source(QuestionSourceName(report.config.question_source));
  for (const auto& r : report.items) {
    std::ostringstream row;
    row.precision(6);
    row << std::fixed;
    row << r.session_id << '\t' << r.record_id << '\t' << r.ambiguity_type << '\t'
        << ConditionName(r.condition) << '\t' << source << '\t' << r.answers.size() << '\t'
        << r.yes_count << '\t' << r.rate << '\t' << clean(r.prompt) << '\t' << clean(r.question)
        << '\t' << clean(text::Join(r.answers, ",")) << '\n';
    out += row.str();
  }
  return out;
}

std::string ReportText(const ExperimentReport& report) {
  std::ostringstream out;
  out.precision(3);
  out << std::fixed;
  out << "config " << report.config_hash << "  question source "
      << QuestionSourceName(report.config.question_source) << "  images/prompt "
      << report.config.n_images << "\n";
  out << "sessions " << report.sessions.total << "  answered " << report.sessions.answered
      << "  selected " << report.sessions.selected << "  skipped " << report.sessions.skipped
      << "\n\n";
  out << "condition        type          items  per-prompt  per-image\n";
  for (const auto& [c, agg] : report.overall) {
    auto line = [&](std::string_view type, const Aggregate& a) {
      std::string cond(ConditionName(c));
      std::string t(type);
      cond.resize(std::max<size_t>(cond.size(), 16), ' ');
      t.resize(std::max<size_t>(t.size(), 12), ' ');
      out << cond << ' ' << t << ' ' << std::right;
      out.width(6);
      out << a.n_items << "  ";
      out.width(10);
      out << a.mean_per_prompt << "  ";
      out.width(9);
      out << a.mean_per_image << "\n";
    };
    if (auto it = report.per_type.find(c); it != report.per_type.end()) {
      for (const auto& [t, a] : it->second) line(t, a);
    }
    line("overall", agg);
  }
  if (report.correlation) {
    out << "\nhuman agreement: ";
    const auto& cb = *report.correlation;
    if (cb.pearson) out << "pearson " << *cb.pearson << "  ";
    if (cb.pearson_error) out << "pearson undefined (" << *cb.pearson_error << ")  ";
    if (cb.fleiss_kappa) out << "fleiss kappa " << *cb.fleiss_kappa;
    if (cb.fleiss_kappa_error) out << "fleiss kappa undefined (" << *cb.fleiss_kappa_error << ")";
    out << "  (" << report.correlation->n_points << " items, " << report.correlation->n_subjects
        << " images, " << report.correlation->n_raters << " raters)\n";
  }
  return out.str();
}

}  // namespace promptlens::eval
