// promptlens command-line driver.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "promptlens/clarify/engine.h"
#include "promptlens/common/error.h"
#include "promptlens/common/text.h"
#include "promptlens/eval/ablation.h"
#include "promptlens/eval/eval.h"
#include "promptlens/grammar/benchmark.h"
#include "promptlens/grammar/grammar.h"
#include "promptlens/mock/mock.h"
#include "promptlens/service/service.h"
#include "promptlens/session/session.h"

namespace fs = std::filesystem;
using namespace promptlens;

namespace {

std::atomic<bool> g_stop{false};

void OnSignal(int) { g_stop = true; }

void WaitForSignal() {
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << data;
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
}

// Shared options.
struct Common {
  std::string lexicon;
  std::string lm_url, t2i_url, vqa_url, para_url, token;
  int timeout_ms = 30000;
  int retries = 2;
  int in_flight = 4;
  std::string lm_mock;  // in-process completion stub mode

  std::shared_ptr<const grammar::Grammar> grammar;

  const grammar::Grammar& Grammar() {
    if (!grammar) {
      auto path = lexicon.empty() ? grammar::DefaultLexiconPath() : lexicon;
      grammar = std::make_shared<const grammar::Grammar>(
          std::make_shared<const grammar::Lexicon>(grammar::LoadLexiconFile(path)));
    }
    return *grammar;
  }

  http::EndpointConfig Endpoint(const std::string& flag, const char* env) const {
    http::EndpointConfig c;
    c.url = flag.empty() ? http::EnvOr(env) : flag;
    c.token = token.empty() ? http::EnvOr("PROMPTLENS_TOKEN") : token;
    c.timeout_ms = timeout_ms;
    c.max_retries = retries;
    c.max_in_flight = in_flight;
    return c;
  }

  std::shared_ptr<clarify::LmClient> Lm() {
    if (!lm_mock.empty()) {
      auto mode = mock::ParseLmMode(lm_mock);
      if (!mode) throw Error(ErrorCode::kInvalidArgument, "unknown --lm-mock mode " + lm_mock);
      Grammar();
      return std::make_shared<mock::MockLmClient>(grammar, *mode);
    }
    auto c = Endpoint(lm_url, "PROMPTLENS_LM_URL");
    if (c.url.empty()) {
      throw Error(ErrorCode::kFailedPrecondition,
                  "no completion endpoint: pass --lm-url or set PROMPTLENS_LM_URL");
    }
    return std::make_shared<clarify::HttpLmClient>(c);
  }

  std::unique_ptr<clarify::Clarifier> MakeClarifier(const std::string& which,
                                                    const std::string& shots_path) {
    if (which == "oracle") return std::make_unique<clarify::OracleClarifier>();
    if (which != "model") {
      throw Error(ErrorCode::kInvalidArgument, "--clarifier must be model or oracle");
    }
    auto shots = clarify::LoadShotLibrary(shots_path.empty() ? clarify::DefaultShotsPath()
                                                             : shots_path);
    return std::make_unique<clarify::ModelClarifier>(Lm(), std::move(shots));
  }
};

void AddEndpointFlags(CLI::App* cmd, Common& c, bool lm, bool t2i, bool vqa, bool para) {
  if (lm) {
    cmd->add_option("--lm-url", c.lm_url, "completion endpoint (default $PROMPTLENS_LM_URL)");
    cmd->add_option("--lm-mock", c.lm_mock, "in-process completion stub: oracle|echo|noise");
  }
  if (t2i) cmd->add_option("--t2i-url", c.t2i_url, "image endpoint (default $PROMPTLENS_T2I_URL)");
  if (vqa) cmd->add_option("--vqa-url", c.vqa_url, "vqa endpoint (default $PROMPTLENS_VQA_URL)");
  if (para) {
    cmd->add_option("--para-url", c.para_url, "paraphrase endpoint (default $PROMPTLENS_PARA_URL)");
  }
  cmd->add_option("--token", c.token, "bearer token (default $PROMPTLENS_TOKEN)");
  cmd->add_option("--timeout-ms", c.timeout_ms, "per-request timeout");
  cmd->add_option("--retries", c.retries, "retries after the first attempt");
  cmd->add_option("--in-flight", c.in_flight, "concurrent requests per endpoint");
}

clarify::FewShotMode Mode(const std::string& name) {
  auto m = clarify::ParseMode(name);
  if (!m) throw Error(ErrorCode::kInvalidArgument, "unknown mode " + name);
  return *m;
}

grammar::AmbiguityType Type(const std::string& name) {
  auto t = grammar::ParseType(name);
  if (!t) throw Error(ErrorCode::kInvalidArgument, "unknown ambiguity type " + name);
  return *t;
}

std::vector<grammar::AmbiguityType> MainTypes() {
  std::vector<grammar::AmbiguityType> out;
  for (auto t : grammar::kAllTypes) {
    if (t != grammar::AmbiguityType::kMisc) out.push_back(t);
  }
  return out;
}

// A path, or the name of a shipped config ("table1", "table1.cfg").
std::string ResolveConfig(const std::string& value) {
  if (fs::exists(value)) return value;
  std::string stem = fs::path(value).stem().string();
  std::string shipped = grammar::DataDir() + "/configs/" + stem + ".json";
  if (fs::exists(shipped)) return shipped;
  throw Error(ErrorCode::kNotFound, "no generation config " + value);
}

void PrintScore(const metrics::ScoreReport& s) {
  fmt::print("BLEU {:.4f}  ROUGE {:.4f}  ({} items)\n", s.bleu, s.rouge, s.n_items);
  for (const auto& [type, ts] : s.per_type) {
    fmt::print("  {:<12} BLEU {:.4f}  ROUGE {:.4f}  ({} items)\n", type, ts.bleu, ts.rouge,
               ts.n_items);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promptlens: ambiguous prompt benchmark, clarification and evaluation toolkit"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  std::string data_dir;
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");
  app.add_option("--data-dir", data_dir, "directory with lexicon/, shots/ and configs/");
  Common common;
  app.add_option("--lexicon", common.lexicon, "lexicon file (default: shipped lexicon)");

  // tab generate | validate
  auto* tab = app.add_subcommand("tab", "benchmark generation and validation");
  tab->require_subcommand(1);
  std::string tab_config = "table1", tab_out = "tab.jsonl", tab_in;
  uint64_t tab_seed = 0;
  auto* tab_gen = tab->add_subcommand("generate", "generate a benchmark file");
  tab_gen->add_option("--config", tab_config, "config file or shipped config name");
  tab_gen->add_option("--seed", tab_seed, "generation seed");
  tab_gen->add_option("--out", tab_out, "output file");
  auto* tab_val = tab->add_subcommand("validate", "check a benchmark against the grammar");
  tab_val->add_option("file,--in", tab_in, "benchmark file")->required();

  // detect
  auto* detect = app.add_subcommand("detect", "print the ambiguity type of a sentence");
  std::string sentence;
  bool verbose = false;
  detect->add_option("--sentence", sentence, "sentence to analyse")->required();
  detect->add_flag("--verbose", verbose, "also print template, bindings and interpretations");

  // clarify
  auto* clar = app.add_subcommand("clarify", "clarify one prompt");
  std::string clar_mode = "one_question", clarifier = "oracle", shots_path, bm_path, record_id;
  bool as_json = false;
  clar->add_option("--sentence", sentence, "prompt text");
  clar->add_option("--benchmark", bm_path, "benchmark file (with --record)");
  clar->add_option("--record", record_id, "record id");
  clar->add_option("--mode", clar_mode, "one_question|multi_question|multi_setup");
  clar->add_option("--clarifier", clarifier, "model|oracle");
  clar->add_option("--shots", shots_path, "shot library");
  clar->add_flag("--json", as_json, "print the full result as JSON");
  AddEndpointFlags(clar, common, true, false, false, false);

  // session run
  auto* sess = app.add_subcommand("session", "disambiguation sessions");
  sess->require_subcommand(1);
  auto* sess_run = sess->add_subcommand("run", "one session per (record, interpretation)");
  std::string answers = "auto", sess_log = "sessions.jsonl", signal_style = "declarative";
  std::vector<std::string> record_ids;
  bool paraphrase = false;
  size_t limit = 0;
  sess_run->add_option("--benchmark", bm_path, "benchmark file")->required();
  sess_run->add_option("--mode", clar_mode, "one_question|multi_question|multi_setup");
  sess_run->add_option("--clarifier", clarifier, "model|oracle");
  sess_run->add_option("--shots", shots_path, "shot library");
  sess_run->add_option("--answers", answers, "auto | interactive | answer file");
  sess_run->add_option("--log", sess_log, "session log to write");
  sess_run->add_option("--records", record_ids, "restrict to these record ids");
  sess_run->add_option("--limit", limit, "use only the first N records");
  sess_run->add_option("--signal-style", signal_style, "declarative|raw");
  sess_run->add_flag("--paraphrase", paraphrase, "paraphrase disambiguated prompts");
  AddEndpointFlags(sess_run, common, true, false, false, true);

  // ablate shots | complexity
  auto* abl = app.add_subcommand("ablate", "language-model ablations");
  abl->require_subcommand(1);
  auto* abl_shots = abl->add_subcommand("shots", "1..N shots of one type, one question");
  std::vector<std::string> shot_types, eval_types;
  int max_shots = 6, parallelism = 4;
  abl_shots->add_option("--benchmark", bm_path, "benchmark file")->required();
  abl_shots->add_option("--shots", shots_path, "ablation shot file");
  abl_shots->add_option("--shot-type", shot_types, "shot source types (default: all six)");
  abl_shots->add_option("--eval-types", eval_types, "evaluated types (default: all six)");
  abl_shots->add_option("--max-shots", max_shots, "largest shot count");
  abl_shots->add_option("--parallelism", parallelism, "concurrent completions");
  AddEndpointFlags(abl_shots, common, true, false, false, false);
  auto* abl_cx = abl->add_subcommand("complexity", "simple vs complex sentence pairs");
  std::vector<std::string> modes;
  abl_cx->add_option("--benchmark", bm_path, "benchmark file")->required();
  abl_cx->add_option("--clarifier", clarifier, "model|oracle");
  abl_cx->add_option("--shots", shots_path, "shot library");
  abl_cx->add_option("--modes", modes, "modes (default: all three)");
  abl_cx->add_option("--parallelism", parallelism, "concurrent completions");
  AddEndpointFlags(abl_cx, common, true, false, false, false);

  // eval
  auto* ev = app.add_subcommand("eval", "image faithfulness experiment over a session log");
  std::string sessions_in, store_dir = "images", report_out = "report.json", tsv_out, labels_in;
  std::vector<std::string> conditions{"ambiguous", "disambiguated"};
  std::string question_source = "intention";
  int n_images = 4;
  ev->add_option("--sessions", sessions_in, "session log")->required();
  ev->add_option("--conditions", conditions, "ambiguous, disambiguated, paraphrased");
  ev->add_option("--n-images", n_images, "images per prompt");
  ev->add_option("--store", store_dir, "image store directory");
  ev->add_option("--out", report_out, "report JSON");
  ev->add_option("--tsv", tsv_out, "per-item table");
  ev->add_option("--question-source", question_source, "intention|generated");
  ev->add_option("--labels", labels_in, "human labels for the correlation block");
  ev->add_option("--parallelism", parallelism, "concurrent items");
  AddEndpointFlags(ev, common, false, true, true, false);

  // report
  auto* rep = app.add_subcommand("report", "render an experiment report");
  std::string rep_format = "text";
  rep->add_option("--in", report_out, "report JSON")->required();
  rep->add_option("--format", rep_format, "text|tsv|json");
  rep->add_option("--labels", labels_in, "human labels to correlate");

  // serve
  auto* srv = app.add_subcommand("serve", "run the HTTP service");
  std::string srv_config, state_dir, host;
  int port = -1;
  srv->add_option("--config", srv_config, "service config file");
  srv->add_option("--host", host, "bind address");
  srv->add_option("--port", port, "bind port (0 picks a free port)");
  srv->add_option("--state-dir", state_dir, "state directory");

  // mock-servers
  auto* mk = app.add_subcommand("mock-servers", "deterministic stub endpoints");
  std::string lm_mode = "oracle", vqa_mode = "intent", para_mode = "identity";
  std::string mk_host = "127.0.0.1";
  int mk_port = 8765;
  uint64_t mk_seed = 0;
  mk->add_option("--host", mk_host, "bind address");
  mk->add_option("--port", mk_port, "bind port (0 picks a free port)");
  mk->add_option("--lm-mode", lm_mode, "oracle|echo|noise");
  mk->add_option("--vqa-mode", vqa_mode, "intent|hash|yes|no");
  mk->add_option("--paraphrase-mode", para_mode, "identity|sentence-swap");
  mk->add_option("--seed", mk_seed, "seed for the hash vqa mode");

  CLI11_PARSE(app, argc, argv);

  spdlog::set_default_logger(spdlog::stderr_color_mt("promptlens"));
  spdlog::set_level(spdlog::level::from_str(log_level));
  if (!data_dir.empty()) setenv("PROMPTLENS_DATA_DIR", data_dir.c_str(), 1);

  try {
    if (tab_gen->parsed()) {
      auto cfg = grammar::LoadGenerationConfig(ResolveConfig(tab_config));
      auto t0 = std::chrono::steady_clock::now();
      auto bm = grammar::GenerateBenchmark(common.Grammar(), cfg, tab_seed);
      grammar::WriteBenchmarkFile(bm, tab_out);
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
      fmt::print("wrote {} records ({} interpretations) to {} in {} ms\n", bm.records.size(),
                 bm.TotalInterpretations(), tab_out, ms);
      auto counts = bm.BucketCounts();
      for (const auto& b : grammar::BucketNames()) fmt::print("  {:<12} {}\n", b, counts[b]);
      return 0;
    }
    if (tab_val->parsed()) {
      auto bm = grammar::LoadBenchmarkFile(tab_in);
      auto issues = grammar::ValidateBenchmark(bm, common.Grammar());
      for (const auto& i : issues) fmt::print(stderr, "{}\n", i);
      fmt::print("{} records, {} issues\n", bm.records.size(), issues.size());
      return issues.empty() ? 0 : 1;
    }
    if (detect->parsed()) {
      auto d = common.Grammar().Detect(sentence);
      if (!d) {
        fmt::print(stderr, "no ambiguity template matches\n");
        return 1;
      }
      fmt::print("{}\n", grammar::TypeName(d->ambiguity_type));
      if (verbose) {
        fmt::print("template {}\n", d->template_id);
        for (const auto& [k, v] : d->bindings) fmt::print("  {} = {}\n", k, v);
        fmt::print("complexity {}  combination {}\n", grammar::ComplexityName(d->complexity),
                   d->is_combination ? "yes" : "no");
        auto rec = common.Grammar().MakeRecord(common.Grammar().Parse(sentence));
        for (const auto& in : rec.interpretations) {
          fmt::print("  [{}] {} | {} ({})\n", in.index, in.setup_text, in.question_text,
                     grammar::CsLabelName(in.cs_label));
        }
      }
      return 0;
    }
    if (clar->parsed()) {
      const auto mode = Mode(clar_mode);
      grammar::BenchmarkRecord record;
      clarify::ClarificationResult res;
      bool have_result = false;
      if (!record_id.empty()) {
        if (bm_path.empty()) throw Error(ErrorCode::kInvalidArgument, "--record needs --benchmark");
        auto bm = grammar::LoadBenchmarkFile(bm_path);
        const auto* r = bm.Find(record_id);
        if (!r) throw Error(ErrorCode::kNotFound, "no record " + record_id);
        record = *r;
      } else if (!sentence.empty()) {
        const auto& g = common.Grammar();
        if (clarifier == "oracle") {
          // a bare sentence has no record; the grammar supplies the ground truth
          res = clarify::FallbackClarify(g, grammar::AmbiguousPrompt{.text = sentence}, mode);
          have_result = true;
        } else {
          auto d = g.Detect(sentence);
          record.prompt = d ? g.Parse(sentence) : grammar::AmbiguousPrompt{.text = sentence};
        }
      } else {
        throw Error(ErrorCode::kInvalidArgument, "pass --sentence or --benchmark with --record");
      }
      if (!have_result) res = common.MakeClarifier(clarifier, shots_path)->ClarifyRecord(record, mode);
      if (as_json) {
        nlohmann::ordered_json j{{"prompt_id", res.prompt_id},
                                 {"mode", clarify::ModeName(res.mode)},
                                 {"source", clarify::SourceName(res.source)},
                                 {"items", res.items},
                                 {"raw_continuation", res.raw_continuation}};
        fmt::print("{}\n", j.dump());
        return 0;
      }
      for (const auto& item : res.items) fmt::print("{}\n", item);
      if (res.items.empty()) fmt::print(stderr, "no items parsed from: {}\n", res.raw_continuation);
      return 0;
    }
    if (sess_run->parsed()) {
      auto bm = grammar::LoadBenchmarkFile(bm_path);
      if (limit > 0 && bm.records.size() > limit) bm.records.resize(limit);
      session::BatchOptions opts;
      opts.mode = Mode(clar_mode);
      opts.record_ids = record_ids;
      if (signal_style == "raw") opts.style = session::SignalStyle::kRaw;
      else if (signal_style != "declarative") {
        throw Error(ErrorCode::kInvalidArgument, "--signal-style must be declarative or raw");
      }
      auto c = common.MakeClarifier(clarifier, shots_path);
      std::unique_ptr<session::Answerer> answerer;
      std::ifstream answer_file;
      if (answers == "auto") {
        answerer = std::make_unique<session::AutoAnswerer>();
      } else if (answers == "interactive") {
        answerer = std::make_unique<session::LineAnswerer>(std::cin, &std::cout);
      } else {
        answer_file.open(answers);
        if (!answer_file) throw Error(ErrorCode::kIo, "cannot open answer file " + answers);
        answerer = std::make_unique<session::LineAnswerer>(answer_file);
      }
      std::unique_ptr<session::ParaphraseClient> para;
      if (paraphrase) {
        auto ep = common.Endpoint(common.para_url, "PROMPTLENS_PARA_URL");
        if (ep.url.empty()) {
          throw Error(ErrorCode::kFailedPrecondition,
                      "--paraphrase needs --para-url or PROMPTLENS_PARA_URL");
        }
        para = std::make_unique<session::HttpParaphraseClient>(ep);
      }
      std::ofstream log(sess_log, std::ios::binary | std::ios::trunc);
      if (!log) throw Error(ErrorCode::kIo, "cannot write " + sess_log);
      session::LogicalClock clock;
      auto sessions = session::RunBatch(bm, opts, *c, *answerer, clock, &log, para.get());
      auto st = session::Tally(sessions);
      fmt::print("sessions {}  answered {}  selected {}  skipped {}  success {:.1f}%\n", st.total,
                 st.answered, st.selected, st.skipped, 100.0 * st.SuccessRate());
      std::vector<const grammar::BenchmarkRecord*> recs;
      std::vector<clarify::ClarificationResult> results;
      for (const auto& s : sessions) {
        recs.push_back(&s.record);
        results.push_back(s.clarification);
      }
      if (!recs.empty()) PrintScore(eval::ScoreResults(recs, results, opts.mode));
      fmt::print("log written to {}\n", sess_log);
      return 0;
    }
    if (abl_shots->parsed()) {
      auto bm = grammar::LoadBenchmarkFile(bm_path);
      auto shots = clarify::LoadAblationShots(shots_path.empty() ? clarify::AblationShotsPath()
                                                                 : shots_path);
      std::vector<grammar::AmbiguityType> sources, targets;
      for (const auto& t : shot_types) sources.push_back(Type(t));
      for (const auto& t : eval_types) targets.push_back(Type(t));
      if (sources.empty()) sources = MainTypes();
      if (targets.empty()) targets = MainTypes();
      auto lm = common.Lm();
      for (auto src : sources) {
        auto table = eval::RunShotAblation(bm, shots, src, targets, *lm, {}, max_shots,
                                           parallelism);
        fmt::print("{}\n", eval::FormatShotAblation(table));
      }
      return 0;
    }
    if (abl_cx->parsed()) {
      auto bm = grammar::LoadBenchmarkFile(bm_path);
      std::vector<clarify::FewShotMode> ms;
      for (const auto& m : modes) ms.push_back(Mode(m));
      if (ms.empty()) ms.assign(std::begin(clarify::kAllModes), std::end(clarify::kAllModes));
      auto c = common.MakeClarifier(clarifier, shots_path);
      auto table = eval::RunComplexityAblation(bm, common.Grammar(), *c, ms, parallelism);
      fmt::print("{}", eval::FormatComplexityAblation(table));
      return 0;
    }
    if (ev->parsed()) {
      auto sessions = session::LoadSessionsFile(sessions_in);
      eval::ExperimentConfig cfg;
      cfg.conditions.clear();
      for (const auto& c : conditions) {
        auto cond = eval::ParseCondition(c);
        if (!cond) throw Error(ErrorCode::kInvalidArgument, "unknown condition " + c);
        cfg.conditions.push_back(*cond);
      }
      cfg.n_images = n_images;
      cfg.parallelism = parallelism;
      auto qs = eval::ParseQuestionSource(question_source);
      if (!qs) throw Error(ErrorCode::kInvalidArgument, "--question-source: intention|generated");
      cfg.question_source = *qs;
      auto t2i_ep = common.Endpoint(common.t2i_url, "PROMPTLENS_T2I_URL");
      auto vqa_ep = common.Endpoint(common.vqa_url, "PROMPTLENS_VQA_URL");
      if (t2i_ep.url.empty() || vqa_ep.url.empty()) {
        throw Error(ErrorCode::kFailedPrecondition, "eval needs image and vqa endpoints");
      }
      eval::HttpT2iClient t2i(t2i_ep);
      eval::HttpVqaClient vqa(vqa_ep);
      eval::ImageStore store(store_dir);
      auto report = eval::RunExperiment(sessions, cfg, t2i, vqa, store);
      if (!labels_in.empty()) {
        report.correlation = eval::CorrelateWithHuman(
            report, eval::ParseHumanLabels(ReadFile(labels_in)), eval::MetricErrors::kRecord);
      }
      WriteFile(report_out, eval::ReportJson(report));
      if (!tsv_out.empty()) WriteFile(tsv_out, eval::ReportTsv(report));
      fmt::print("{}", eval::ReportText(report));
      fmt::print("generation requests {}  vqa requests {}\nreport written to {}\n",
                 report.generation_requests, report.vqa_requests, report_out);
      return 0;
    }
    if (rep->parsed()) {
      auto report = eval::ParseReportJson(ReadFile(report_out));
      if (!labels_in.empty()) {
        report.correlation = eval::CorrelateWithHuman(
            report, eval::ParseHumanLabels(ReadFile(labels_in)), eval::MetricErrors::kRecord);
      }
      if (rep_format == "tsv") fmt::print("{}", eval::ReportTsv(report));
      else if (rep_format == "json") fmt::print("{}", eval::ReportJson(report));
      else if (rep_format == "text") fmt::print("{}", eval::ReportText(report));
      else throw Error(ErrorCode::kInvalidArgument, "--format must be text, tsv or json");
      return 0;
    }
    if (srv->parsed()) {
      service::ApiConfig cfg;
      if (!srv_config.empty()) cfg = service::LoadApiConfig(srv_config);
      service::ApplyEnvironment(cfg);
      if (!host.empty()) cfg.host = host;
      if (port >= 0) cfg.port = port;
      if (!state_dir.empty()) cfg.data_dir = state_dir;
      if (cfg.data_dir.empty()) cfg.data_dir = "promptlens-state";
      service::Service svc(cfg, std::make_shared<const grammar::Grammar>(
                                    std::make_shared<const grammar::Lexicon>(
                                        grammar::LoadLexiconFile(common.lexicon.empty()
                                                                     ? grammar::DefaultLexiconPath()
                                                                     : common.lexicon))));
      svc.Start();
      fmt::print("listening on {}\n", svc.BaseUrl());
      std::fflush(stdout);
      WaitForSignal();
      svc.Stop();
      return 0;
    }
    if (mk->parsed()) {
      mock::MockConfig cfg;
      auto lm = mock::ParseLmMode(lm_mode);
      auto vqa = mock::ParseVqaMode(vqa_mode);
      auto para = mock::ParseParaphraseMode(para_mode);
      if (!lm || !vqa || !para) throw Error(ErrorCode::kInvalidArgument, "unknown mock mode");
      cfg.lm = *lm;
      cfg.vqa = *vqa;
      cfg.paraphrase = *para;
      cfg.seed = mk_seed;
      common.Grammar();
      mock::MockServer server(cfg, common.grammar);
      server.Start(mk_host, mk_port);
      fmt::print("PROMPTLENS_LM_URL={}\nPROMPTLENS_T2I_URL={}\nPROMPTLENS_VQA_URL={}\n"
                 "PROMPTLENS_PARA_URL={}\n",
                 server.LmUrl(), server.T2iUrl(), server.VqaUrl(), server.ParaphraseUrl());
      std::fflush(stdout);
      WaitForSignal();
      server.Stop();
      return 0;
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error [{}]: {}\n", CodeName(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
