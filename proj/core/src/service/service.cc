#include "promptlens/service/service.h"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <sstream>
#include <thread>

#include "promptlens/common/error.h"
#include "promptlens/common/text.h"
#include "promptlens/grammar/benchmark.h"

namespace promptlens::service {

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

void WriteAll(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << data;
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

http::EndpointConfig EndpointFromJson(const ordered_json& j) {
  http::EndpointConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "url") c.url = value.get<std::string>();
    else if (key == "token") c.token = value.get<std::string>();
    else if (key == "timeout_ms") c.timeout_ms = value.get<int>();
    else if (key == "max_retries") c.max_retries = value.get<int>();
    else if (key == "backoff_ms") c.backoff_ms = value.get<int>();
    else if (key == "max_in_flight") c.max_in_flight = value.get<int>();
    else throw Error(ErrorCode::kParse, "unknown endpoint key '" + key + "'");
  }
  return c;
}

std::vector<std::string> SplitPath(std::string_view path) {
  std::vector<std::string> parts;
  size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    size_t j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    if (j > i) parts.emplace_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

ApiResponse Json(int status, const std::string& body) { return ApiResponse{status, body}; }
ApiResponse Json(int status, const ordered_json& body) { return ApiResponse{status, body.dump()}; }

ordered_json ParseBody(const std::string& body) {
  if (text::Trim(body).empty()) return ordered_json::object();
  try {
    auto j = ordered_json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::kParse, "request body must be a JSON object");
    return j;
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed request body: ") + e.what());
  }
}

std::string ImageMime(std::string_view data) {
  if (data.substr(0, 8) == "\x89PNG\r\n\x1a\n") return "image/png";
  if (data.substr(0, 3) == "\xff\xd8\xff") return "image/jpeg";
  if (data.find("<svg") != std::string_view::npos) return "image/svg+xml";
  return "application/octet-stream";
}

bool SafeName(std::string_view s) {
  return !s.empty() && s.find_first_not_of("abcdefghijklmnopqrstuvwxyz"
                                           "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") ==
                           std::string_view::npos;
}

}  // namespace

ApiConfig ParseApiConfig(std::string_view json) {
  ApiConfig c;
  try {
    auto j = ordered_json::parse(json);
    for (const auto& [key, value] : j.items()) {
      if (key == "host") c.host = value.get<std::string>();
      else if (key == "port") c.port = value.get<int>();
      else if (key == "data_dir") c.data_dir = value.get<std::string>();
      else if (key == "parallelism") c.parallelism = value.get<int>();
      else if (key == "endpoints") {
        for (const auto& [name, ep] : value.items()) {
          if (name == "lm") c.lm = EndpointFromJson(ep);
          else if (name == "t2i") c.t2i = EndpointFromJson(ep);
          else if (name == "vqa") c.vqa = EndpointFromJson(ep);
          else if (name == "paraphrase") c.paraphrase = EndpointFromJson(ep);
          else throw Error(ErrorCode::kParse, "unknown endpoint '" + name + "'");
        }
      } else {
        throw Error(ErrorCode::kParse, "unknown config key '" + key + "'");
      }
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed service config: ") + e.what());
  }
  return c;
}

ApiConfig LoadApiConfig(const std::string& path) { return ParseApiConfig(ReadAll(path)); }

void ApplyEnvironment(ApiConfig& config) {
  config.lm.url = http::EnvOr("PROMPTLENS_LM_URL", config.lm.url);
  config.t2i.url = http::EnvOr("PROMPTLENS_T2I_URL", config.t2i.url);
  config.vqa.url = http::EnvOr("PROMPTLENS_VQA_URL", config.vqa.url);
  config.paraphrase.url = http::EnvOr("PROMPTLENS_PARA_URL", config.paraphrase.url);
  const std::string token = http::EnvOr("PROMPTLENS_TOKEN");
  if (!token.empty()) {
    for (auto* ep : {&config.lm, &config.t2i, &config.vqa, &config.paraphrase}) ep->token = token;
  }
  config.data_dir = http::EnvOr("PROMPTLENS_STATE_DIR", config.data_dir);
}

void ValidateApiConfig(const ApiConfig& config) {
  if (config.port < 0 || config.port > 65535) {
    throw Error(ErrorCode::kInvalidArgument, "port out of range");
  }
  if (config.parallelism < 1) throw Error(ErrorCode::kInvalidArgument, "parallelism must be >= 1");
  for (const auto* ep : {&config.lm, &config.t2i, &config.vqa, &config.paraphrase}) {
    if (!ep->url.empty()) http::ParseUrl(ep->url);
  }
  if (config.data_dir.empty()) throw Error(ErrorCode::kInvalidArgument, "data_dir is required");
  std::error_code ec;
  fs::create_directories(config.data_dir, ec);
  const fs::path probe = fs::path(config.data_dir) / ".write-probe";
  std::ofstream out(probe);
  if (ec || !out) {
    throw Error(ErrorCode::kInvalidArgument, "data_dir " + config.data_dir + " is not writable");
  }
  out.close();
  fs::remove(probe, ec);
}

int HttpStatus(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kAlreadyExists:
    case ErrorCode::kConflict:
    case ErrorCode::kFailedPrecondition: return 409;
    case ErrorCode::kOutOfRange:
    case ErrorCode::kMissingCategory:
    case ErrorCode::kExhausted:
    case ErrorCode::kUndefined: return 422;
    case ErrorCode::kTransport:
    case ErrorCode::kEndpoint: return 502;
    case ErrorCode::kIo: return 500;
  }
  return 500;
}

std::string ErrorBody(ErrorCode code, std::string_view message) {
  return ordered_json{{"error", {{"code", CodeName(code)}, {"message", message}}}}.dump();
}

struct Service::Impl {
  ApiConfig config;
  std::shared_ptr<const grammar::Grammar> grammar;
  Clients clients;
  std::unique_ptr<eval::ImageStore> images;
  session::SystemClock clock;

  struct SessionSlot {
    std::mutex mu;
    session::Session session;
  };

  struct Experiment {
    std::string id;
    eval::ExperimentConfig config;
    std::vector<std::string> session_ids;
    std::string status = "running";  // running | done | failed
    std::atomic<size_t> done{0};
    std::atomic<size_t> total{0};
    std::optional<eval::ExperimentReport> report;
    std::string error;
    ErrorCode error_code = ErrorCode::kIo;
  };

  mutable std::mutex mu;  // guards the maps below
  std::map<std::string, std::shared_ptr<grammar::Benchmark>> benchmarks;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions;
  std::vector<std::string> session_order;
  std::map<std::string, std::shared_ptr<Experiment>> experiments;
  std::vector<std::thread> workers;
  std::condition_variable experiments_cv;
  size_t running = 0;
  std::mutex log_mu;  // session log appends
  mutable std::mutex req_mu;
  std::vector<std::string> request_log;

  httplib::Server server;
  std::thread server_thread;
  int port = 0;

  fs::path Dir(std::string_view sub) const { return fs::path(config.data_dir) / sub; }

  void Load() {
    for (auto sub : {"benchmarks", "experiments", "images"}) fs::create_directories(Dir(sub));
    images = std::make_unique<eval::ImageStore>(Dir("images").string());
    for (const auto& entry : fs::directory_iterator(Dir("benchmarks"))) {
      if (entry.path().extension() != ".jsonl") continue;
      auto bm = std::make_shared<grammar::Benchmark>(grammar::LoadBenchmarkFile(entry.path()));
      benchmarks[entry.path().stem().string()] = bm;
    }
    if (fs::exists(Dir("sessions.jsonl"))) {
      for (auto& s : session::LoadSessionsFile(Dir("sessions.jsonl").string())) {
        auto slot = std::make_shared<SessionSlot>();
        session_order.push_back(s.session_id);
        slot->session = std::move(s);
        sessions[slot->session.session_id] = slot;
      }
    }
    for (const auto& entry : fs::directory_iterator(Dir("experiments"))) {
      if (entry.path().extension() != ".json") continue;
      auto doc = ordered_json::parse(ReadAll(entry.path()));
      auto ex = std::make_shared<Experiment>();
      ex->id = entry.path().stem().string();
      ex->status = "done";
      ex->session_ids = doc.at("session_ids").get<std::vector<std::string>>();
      ex->report = eval::ParseReportJson(doc.at("report").dump());
      ex->config = ex->report->config;
      ex->total = ex->done = 1;
      experiments[ex->id] = ex;
    }
    if (!clients.lm && !config.lm.url.empty()) {
      clients.lm = std::make_shared<clarify::HttpLmClient>(config.lm);
    }
    if (!clients.t2i && !config.t2i.url.empty()) {
      clients.t2i = std::make_shared<eval::HttpT2iClient>(config.t2i);
    }
    if (!clients.vqa && !config.vqa.url.empty()) {
      clients.vqa = std::make_shared<eval::HttpVqaClient>(config.vqa);
    }
    if (!clients.paraphrase && !config.paraphrase.url.empty()) {
      clients.paraphrase = std::make_shared<session::HttpParaphraseClient>(config.paraphrase);
    }
  }

  void LogRequest(const ApiRequest& req, int status) {
    std::string line = req.method + " " + req.path + " " + std::to_string(status);
    std::lock_guard<std::mutex> lock(req_mu);
    request_log.push_back(line);
    std::ofstream out(Dir("requests.log"), std::ios::app);
    out << line << '\n';
  }

  void PersistSession(const session::Session& s, std::string_view event) {
    std::lock_guard<std::mutex> lock(log_mu);
    session::Persist(s, event, Dir("sessions.jsonl").string());
  }

  std::shared_ptr<grammar::Benchmark> FindBenchmark(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mu);
    auto it = benchmarks.find(id);
    if (it == benchmarks.end()) throw Error(ErrorCode::kNotFound, "no benchmark " + id);
    return it->second;
  }

  std::shared_ptr<SessionSlot> FindSession(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) throw Error(ErrorCode::kNotFound, "no session " + id);
    return it->second;
  }

  std::shared_ptr<Experiment> FindExperiment(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mu);
    auto it = experiments.find(id);
    if (it == experiments.end()) throw Error(ErrorCode::kNotFound, "no experiment " + id);
    return it->second;
  }

  template <typename T>
  T& Require(const std::shared_ptr<T>& client, const char* what) const {
    if (!client) {
      throw Error(ErrorCode::kFailedPrecondition, std::string("no ") + what + " endpoint configured");
    }
    return *client;
  }

  // -- routes ---------------------------------------------------------------

  ApiResponse CreateBenchmark(const ordered_json& body) {
    grammar::GenerationConfig gc;
    if (body.contains("config")) {
      gc = grammar::ParseGenerationConfig(body.at("config").dump());
    } else {
      const std::string name = body.value("config_name", std::string("table1"));
      if (!SafeName(name)) throw Error(ErrorCode::kInvalidArgument, "bad config name");
      const std::string path = grammar::DataDir() + "/configs/" + name + ".json";
      if (!fs::exists(path)) throw Error(ErrorCode::kNotFound, "no shipped config " + name);
      gc = grammar::LoadGenerationConfig(path);
    }
    const uint64_t seed = body.value("seed", uint64_t{0});
    const std::string id = "bm-" + grammar::GenerationConfigHash(gc) + "-s" + std::to_string(seed);
    int status = 200;
    std::shared_ptr<grammar::Benchmark> bm;
    {
      std::lock_guard<std::mutex> lock(mu);
      if (auto it = benchmarks.find(id); it != benchmarks.end()) bm = it->second;
    }
    if (!bm) {
      bm = std::make_shared<grammar::Benchmark>(grammar::GenerateBenchmark(*grammar, gc, seed));
      grammar::WriteBenchmarkFile(*bm, (Dir("benchmarks") / (id + ".jsonl")).string());
      std::lock_guard<std::mutex> lock(mu);
      benchmarks.emplace(id, bm);
      status = 201;
    }
    return Json(status, ordered_json{{"id", id},
                                     {"seed", bm->seed},
                                     {"config_hash", bm->config_hash},
                                     {"n_records", bm->records.size()},
                                     {"n_interpretations", bm->TotalInterpretations()},
                                     {"bucket_counts", bm->BucketCounts()}});
  }

  ApiResponse ListRecords(const std::string& id, const std::map<std::string, std::string>& q) {
    auto bm = FindBenchmark(id);
    auto num = [&](const char* key, size_t fallback) -> size_t {
      auto it = q.find(key);
      if (it == q.end()) return fallback;
      try {
        return static_cast<size_t>(std::stoull(it->second));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, std::string("bad ") + key);
      }
    };
    const size_t offset = num("offset", 0);
    const size_t limit = num("limit", bm->records.size());
    std::optional<grammar::AmbiguityType> type;
    if (auto it = q.find("type"); it != q.end()) {
      type = grammar::ParseType(it->second);
      if (!type) throw Error(ErrorCode::kInvalidArgument, "unknown type " + it->second);
    }
    ordered_json records = ordered_json::array();
    size_t matched = 0;
    for (const auto& r : bm->records) {
      if (type && r.prompt.ambiguity_type != *type) continue;
      if (matched++ < offset) continue;
      if (records.size() >= limit) continue;
      records.push_back(ordered_json::parse(grammar::RecordJson(r)));
    }
    return Json(200, ordered_json{{"benchmark_id", id},
                                  {"total", matched},
                                  {"offset", offset},
                                  {"records", records}});
  }

  ApiResponse CreateSession(const ordered_json& body) {
    auto bm = FindBenchmark(body.at("benchmark_id").get<std::string>());
    const std::string record_id = body.at("record_id").get<std::string>();
    const auto* record = bm->Find(record_id);
    if (!record) throw Error(ErrorCode::kNotFound, "no record " + record_id);
    auto mode = clarify::ParseMode(body.value("mode", std::string("one_question")));
    if (!mode) throw Error(ErrorCode::kInvalidArgument, "unknown mode");
    const std::string which = body.value("clarifier", std::string("oracle"));
    std::unique_ptr<clarify::Clarifier> clarifier;
    if (which == "oracle") {
      clarifier = std::make_unique<clarify::OracleClarifier>();
    } else if (which == "model") {
      Require(clients.lm, "completion");
      clarifier = std::make_unique<clarify::ModelClarifier>(
          clients.lm, clarify::LoadShotLibrary(clarify::DefaultShotsPath()));
    } else {
      throw Error(ErrorCode::kInvalidArgument, "clarifier must be model or oracle");
    }
    auto slot = std::make_shared<SessionSlot>();
    const int intention = body.at("intention_index").get<int>();
    std::string id;
    {
      std::lock_guard<std::mutex> lock(mu);
      char buf[32];
      std::snprintf(buf, sizeof buf, "sess-%06zu", session_order.size() + 1);
      id = buf;
      // reserve the id so concurrent creations cannot collide
      session_order.push_back(id);
    }
    try {
      slot->session =
          session::OpenSession(id, *record, intention, *mode, *clarifier, clock);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      session_order.erase(std::find(session_order.begin(), session_order.end(), id));
      throw;
    }
    PersistSession(slot->session, "open");
    {
      std::lock_guard<std::mutex> lock(mu);
      sessions[id] = slot;
    }
    return Json(201, session::SessionJson(slot->session));
  }

  ApiResponse ListSessions(const std::map<std::string, std::string>& q) {
    std::optional<session::ResolutionKind> status;
    if (auto it = q.find("status"); it != q.end()) {
      status = session::ParseResolution(it->second);
      if (!status) throw Error(ErrorCode::kInvalidArgument, "unknown status " + it->second);
    }
    std::vector<std::shared_ptr<SessionSlot>> slots;
    {
      std::lock_guard<std::mutex> lock(mu);
      for (const auto& id : session_order) {
        if (auto it = sessions.find(id); it != sessions.end()) slots.push_back(it->second);
      }
    }
    ordered_json out = ordered_json::array();
    for (const auto& slot : slots) {
      std::lock_guard<std::mutex> lock(slot->mu);
      if (status && slot->session.resolution.kind != *status) continue;
      out.push_back(ordered_json::parse(session::SessionJson(slot->session)));
    }
    return Json(200, ordered_json{{"sessions", out}});
  }

  ApiResponse GetSession(const std::string& id) {
    auto slot = FindSession(id);
    std::lock_guard<std::mutex> lock(slot->mu);
    return Json(200, session::SessionJson(slot->session));
  }

  ApiResponse ResolveSession(const std::string& id, const ordered_json& body) {
    auto slot = FindSession(id);
    session::Action action;
    const int keys = static_cast<int>(body.contains("answer")) +
                     static_cast<int>(body.contains("select")) +
                     static_cast<int>(body.contains("skip"));
    if (keys != 1) {
      throw Error(ErrorCode::kInvalidArgument, "resolve needs exactly one of answer, select, skip");
    }
    if (body.contains("answer")) {
      action = session::Action::Answer(body.at("answer").get<std::string>(),
                                       body.value("question_index", 0));
    } else if (body.contains("select")) {
      action = session::Action::Select(body.at("select").get<int>());
    } else {
      if (!body.at("skip").get<bool>()) throw Error(ErrorCode::kInvalidArgument, "skip must be true");
      action = session::Action::Skip();
    }
    auto style = session::SignalStyle::kDeclarative;
    if (body.value("signal_style", std::string("declarative")) == "raw") {
      style = session::SignalStyle::kRaw;
    }
    std::lock_guard<std::mutex> lock(slot->mu);
    session::Session next = session::Resolve(slot->session, action, clock, style);
    PersistSession(next, "resolve");
    slot->session = std::move(next);
    return Json(200, session::SessionJson(slot->session));
  }

  ApiResponse ParaphraseSession(const std::string& id) {
    auto slot = FindSession(id);
    std::lock_guard<std::mutex> lock(slot->mu);
    auto& client = Require(clients.paraphrase, "paraphrase");
    session::Session next = session::Paraphrase(slot->session, client, clock);
    PersistSession(next, "paraphrase");
    slot->session = std::move(next);
    return Json(200, session::SessionJson(slot->session));
  }

  ordered_json ExperimentStatus(const Experiment& ex) const {
    ordered_json j{{"id", ex.id},
                   {"status", ex.status},
                   {"progress", {{"done", ex.done.load()}, {"total", ex.total.load()}}},
                   {"config", ordered_json::parse(eval::ExperimentConfigJson(ex.config))},
                   {"session_ids", ex.session_ids}};
    if (ex.status == "failed") {
      j["error"] = {{"code", CodeName(ex.error_code)}, {"message", ex.error}};
    }
    return j;
  }

  void SaveExperiment(const Experiment& ex) {
    ordered_json doc{{"session_ids", ex.session_ids},
                     {"report", ordered_json::parse(eval::ReportJson(*ex.report))}};
    WriteAll(Dir("experiments") / (ex.id + ".json"), doc.dump(2) + "\n");
    WriteAll(Dir("experiments") / (ex.id + ".tsv"), eval::ReportTsv(*ex.report));
  }

  ApiResponse CreateExperiment(const ordered_json& body) {
    ordered_json cfg = body;
    cfg.erase("session_ids");
    if (!cfg.contains("parallelism")) cfg["parallelism"] = config.parallelism;
    eval::ExperimentConfig ec = eval::ParseExperimentConfig(cfg.dump());
    auto ids = body.at("session_ids").get<std::vector<std::string>>();
    if (ids.empty()) throw Error(ErrorCode::kInvalidArgument, "session_ids is empty");
    std::vector<session::Session> snapshot;
    for (const auto& id : ids) {
      auto slot = FindSession(id);
      std::lock_guard<std::mutex> lock(slot->mu);
      if (slot->session.pending()) {
        throw Error(ErrorCode::kFailedPrecondition, "session " + id + " is pending");
      }
      snapshot.push_back(slot->session);
    }
    Require(clients.t2i, "image generation");
    Require(clients.vqa, "vqa");
    auto ex = std::make_shared<Experiment>();
    ex->config = ec;
    ex->session_ids = ids;
    {
      std::lock_guard<std::mutex> lock(mu);
      char buf[32];
      std::snprintf(buf, sizeof buf, "exp-%04zu", experiments.size() + 1);
      ex->id = buf;
      experiments[ex->id] = ex;
      ++running;
      workers.emplace_back([this, ex, snapshot = std::move(snapshot)] {
        try {
          auto report = eval::RunExperiment(snapshot, ex->config, *clients.t2i, *clients.vqa,
                                            *images, [&](size_t d, size_t t) {
                                              ex->total = t;
                                              ex->done = d;
                                            });
          std::lock_guard<std::mutex> lock(mu);
          ex->report = std::move(report);
          SaveExperiment(*ex);
          ex->status = "done";
        } catch (const Error& e) {
          std::lock_guard<std::mutex> lock(mu);
          ex->status = "failed";
          ex->error = e.what();
          ex->error_code = e.code();
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(mu);
          ex->status = "failed";
          ex->error = e.what();
        }
        std::lock_guard<std::mutex> lock(mu);
        --running;
        experiments_cv.notify_all();
      });
      return Json(202, ExperimentStatus(*ex));
    }
  }

  ApiResponse GetExperiment(const std::string& id) {
    auto ex = FindExperiment(id);
    std::lock_guard<std::mutex> lock(mu);
    return Json(200, ExperimentStatus(*ex));
  }

  ApiResponse GetReport(const std::string& id, const std::map<std::string, std::string>& q) {
    auto ex = FindExperiment(id);
    std::lock_guard<std::mutex> lock(mu);
    if (ex->status == "running") {
      ordered_json body = ordered_json::parse(
          ErrorBody(ErrorCode::kConflict, "experiment " + id + " is still running"));
      body["progress"] = {{"done", ex->done.load()}, {"total", ex->total.load()}};
      return Json(409, body);
    }
    if (ex->status == "failed") {
      return Json(HttpStatus(ex->error_code), ErrorBody(ex->error_code, ex->error));
    }
    if (auto it = q.find("format"); it != q.end() && it->second == "tsv") {
      return ApiResponse{200, eval::ReportTsv(*ex->report), "text/tab-separated-values"};
    }
    return Json(200, eval::ReportJson(*ex->report));
  }

  ApiResponse PostHumanLabels(const std::string& id, const std::string& body) {
    auto ex = FindExperiment(id);
    auto labels = eval::ParseHumanLabels(body);
    std::lock_guard<std::mutex> lock(mu);
    if (ex->status != "done") {
      throw Error(ErrorCode::kConflict, "experiment " + id + " has no report yet");
    }
    ex->report->correlation =
        eval::CorrelateWithHuman(*ex->report, labels, eval::MetricErrors::kRecord);
    SaveExperiment(*ex);
    WriteAll(Dir("experiments") / (ex->id + ".labels.json"), eval::HumanLabelsJson(labels));
    auto report = ordered_json::parse(eval::ReportJson(*ex->report));
    return Json(200, ordered_json{{"correlation", report.at("correlation")}});
  }

  ApiResponse GetImage(const std::string& hash) {
    std::string data = images->Read(hash);
    std::string mime = ImageMime(data);
    return ApiResponse{200, std::move(data), mime};
  }

  ApiResponse Route(const ApiRequest& req) {
    const auto p = SplitPath(req.path);
    const std::string& m = req.method;
    auto is = [&](std::initializer_list<std::string_view> shape) {
      if (p.size() != shape.size()) return false;
      size_t i = 0;
      for (auto s : shape) {
        if (s != "*" && p[i] != s) return false;
        ++i;
      }
      return true;
    };
    if (m == "GET" && is({"health"})) return Json(200, ordered_json{{"ok", true}});
    if (m == "GET" && is({"requests"})) {
      std::lock_guard<std::mutex> lock(req_mu);
      return Json(200, ordered_json{{"requests", request_log}});
    }
    if (m == "POST" && is({"benchmarks"})) return CreateBenchmark(ParseBody(req.body));
    if (m == "GET" && is({"benchmarks", "*", "records"})) return ListRecords(p[1], req.query);
    if (m == "POST" && is({"sessions"})) return CreateSession(ParseBody(req.body));
    if (m == "GET" && is({"sessions"})) return ListSessions(req.query);
    if (m == "GET" && is({"sessions", "*"})) return GetSession(p[1]);
    if (m == "POST" && is({"sessions", "*", "resolve"})) {
      return ResolveSession(p[1], ParseBody(req.body));
    }
    if (m == "POST" && is({"sessions", "*", "paraphrase"})) return ParaphraseSession(p[1]);
    if (m == "POST" && is({"experiments"})) return CreateExperiment(ParseBody(req.body));
    if (m == "GET" && is({"experiments", "*"})) return GetExperiment(p[1]);
    if (m == "GET" && is({"experiments", "*", "report"})) return GetReport(p[1], req.query);
    if (m == "POST" && is({"experiments", "*", "human-labels"})) {
      return PostHumanLabels(p[1], req.body);
    }
    if (m == "GET" && is({"images", "*"})) return GetImage(p[1]);
    throw Error(ErrorCode::kNotFound, "no route " + m + " " + req.path);
  }
};

Service::Service(ApiConfig config, std::shared_ptr<const grammar::Grammar> grammar,
                 Clients clients)
    : impl_(std::make_unique<Impl>()) {
  if (!grammar) throw Error(ErrorCode::kInvalidArgument, "service needs a grammar");
  ValidateApiConfig(config);
  impl_->config = std::move(config);
  impl_->grammar = std::move(grammar);
  impl_->clients = std::move(clients);
  impl_->Load();
}

Service::~Service() {
  Stop();
  WaitForExperiments();
  for (auto& t : impl_->workers) {
    if (t.joinable()) t.join();
  }
}

ApiResponse Service::Handle(const ApiRequest& request) {
  ApiResponse res;
  try {
    res = impl_->Route(request);
  } catch (const Error& e) {
    res = Json(HttpStatus(e.code()), ErrorBody(e.code(), e.what()));
  } catch (const ordered_json::exception& e) {
    res = Json(400, ErrorBody(ErrorCode::kParse, e.what()));
  } catch (const std::exception& e) {
    res = Json(500, ErrorBody(ErrorCode::kIo, e.what()));
  }
  impl_->LogRequest(request, res.status);
  return res;
}

int Service::Start() {
  auto& server = impl_->server;
  auto adapter = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query.emplace(k, v);
    r.body = req.body;
    ApiResponse out = Handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server.Get(".*", adapter);
  server.Post(".*", adapter);
  server.Put(".*", adapter);
  server.Delete(".*", adapter);
  // the browser console may be served from another origin
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization");
    res.status = 204;
  });
  // httplib defaults to SO_REUSEPORT, which lets a second server share a busy
  // port silently
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  const auto& host = impl_->config.host;
  int port = impl_->config.port;
  if (port == 0) {
    port = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    port = -1;
  }
  if (port <= 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(impl_->config.port));
  }
  impl_->port = port;
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  server.wait_until_ready();
  spdlog::info("serving on {}", BaseUrl());
  return port;
}

void Service::Wait() {
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

void Service::Stop() {
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

std::string Service::BaseUrl() const {
  return "http://" + impl_->config.host + ":" + std::to_string(impl_->port);
}

std::vector<std::string> Service::RequestLog() const {
  std::lock_guard<std::mutex> lock(impl_->req_mu);
  return impl_->request_log;
}

void Service::WaitForExperiments() {
  std::unique_lock<std::mutex> lock(impl_->mu);
  impl_->experiments_cv.wait(lock, [this] { return impl_->running == 0; });
}

}  // namespace promptlens::service
