#ifndef PROMPTLENS_SERVICE_SERVICE_H_
#define PROMPTLENS_SERVICE_SERVICE_H_

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptlens/clarify/engine.h"
#include "promptlens/common/error.h"
#include "promptlens/eval/eval.h"
#include "promptlens/grammar/grammar.h"
#include "promptlens/http/client.h"
#include "promptlens/session/session.h"

namespace promptlens::service {

struct ApiConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  http::EndpointConfig lm;
  http::EndpointConfig t2i;
  http::EndpointConfig vqa;
  http::EndpointConfig paraphrase;
  std::string data_dir;
  int parallelism = 4;
};

// {"host", "port", "data_dir", "parallelism", "endpoints": {"lm": {"url",
// "token", "timeout_ms", "max_retries", "max_in_flight"}, "t2i", "vqa",
// "paraphrase"}}. Unknown keys are Error(kParse).
ApiConfig ParseApiConfig(std::string_view json);
ApiConfig LoadApiConfig(const std::string& path);
// PROMPTLENS_{LM,T2I,VQA,PARA}_URL, PROMPTLENS_TOKEN and PROMPTLENS_STATE_DIR
// replace the corresponding settings when set.
void ApplyEnvironment(ApiConfig& config);
// Error(kInvalidArgument) for malformed endpoint URLs, a bad port or an
// unwritable data directory (created when missing).
void ValidateApiConfig(const ApiConfig& config);

// HTTP status for an error category.
int HttpStatus(ErrorCode code);
// {"error": {"code": "<CodeName>", "message": ...}}
std::string ErrorBody(ErrorCode code, std::string_view message);

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Clients the service uses; missing ones are built from ApiConfig endpoints.
struct Clients {
  std::shared_ptr<clarify::LmClient> lm;
  std::shared_ptr<eval::T2iClient> t2i;
  std::shared_ptr<eval::VqaClient> vqa;
  std::shared_ptr<session::ParaphraseClient> paraphrase;
};

// REST facade over the in-process operations:
//   GET  /health
//   POST /benchmarks                    {config?: {...}, config_name?, seed?}
//   GET  /benchmarks/{id}/records       ?offset&limit&type
//   POST /sessions                      {benchmark_id, record_id, intention_index,
//                                        mode, clarifier: model|oracle}
//   GET  /sessions                      ?status=pending|answered|selected|skipped
//   GET  /sessions/{id}
//   POST /sessions/{id}/resolve         {answer, question_index?} | {select} | {skip: true}
//   POST /sessions/{id}/paraphrase
//   POST /experiments                   {session_ids, conditions?, n_images?,
//                                        question_source?}
//   GET  /experiments/{id}              status and progress
//   GET  /experiments/{id}/report       409 with progress until finished
//   POST /experiments/{id}/human-labels {labels: [...]}
//   GET  /images/{hash}
//   GET  /requests                      the request log
// State lives under data_dir (benchmarks/, sessions.jsonl, images/,
// experiments/) and is reloaded on construction.
class Service {
 public:
  Service(ApiConfig config, std::shared_ptr<const grammar::Grammar> grammar,
          Clients clients = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Transport-independent dispatch; the HTTP server routes through here.
  ApiResponse Handle(const ApiRequest& request);

  // Binds and serves on a background thread; returns the bound port (0 in
  // the config picks a free one). Error(kIo) when the port is taken.
  int Start();
  void Wait();
  void Stop();
  std::string BaseUrl() const;

  // "METHOD path status" per handled request, in order.
  std::vector<std::string> RequestLog() const;
  // Blocks until no experiment is running.
  void WaitForExperiments();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace promptlens::service

#endif  // PROMPTLENS_SERVICE_SERVICE_H_
