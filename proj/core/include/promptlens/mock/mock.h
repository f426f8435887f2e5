#ifndef PROMPTLENS_MOCK_MOCK_H_
#define PROMPTLENS_MOCK_MOCK_H_

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "promptlens/clarify/engine.h"
#include "promptlens/eval/eval.h"
#include "promptlens/grammar/grammar.h"
#include "promptlens/session/session.h"

namespace promptlens::mock {

// oracle: answers with the grammar's ground truth for the target.
// echo: repeats the target as a question.
// noise: cue-free filler.
enum class LmMode { kOracle, kEcho, kNoise };
// intent: "yes" iff a sentence of the image's prompt states what the
// question asks. hash: pseudo-random per (image, question, seed).
// yes / no: constant.
enum class VqaMode { kIntent, kHash, kYes, kNo };
// identity, or the prompt's sentences in reverse order.
enum class ParaphraseMode { kIdentity, kSentenceSwap };

std::string_view LmModeName(LmMode m);
std::optional<LmMode> ParseLmMode(std::string_view name);
std::string_view VqaModeName(VqaMode m);
std::optional<VqaMode> ParseVqaMode(std::string_view name);
std::string_view ParaphraseModeName(ParaphraseMode m);
std::optional<ParaphraseMode> ParseParaphraseMode(std::string_view name);

struct MockConfig {
  LmMode lm = LmMode::kOracle;
  VqaMode vqa = VqaMode::kIntent;
  ParaphraseMode paraphrase = ParaphraseMode::kIdentity;
  uint64_t seed = 0;
};

// Small SVG that carries the prompt and index in a <desc> element.
std::string MockImage(std::string_view prompt, int index);
// The prompt embedded by MockImage, or nullopt for foreign bytes.
std::optional<std::string> ImagePrompt(std::string_view image);

// Splits on '.', '?' and '!' followed by whitespace or the end.
std::vector<std::string> Sentences(std::string_view text);

// Continuation for a few-shot prompt built by clarify::BuildFewShotPrompt.
std::string MockCompletion(const grammar::Grammar& grammar, LmMode mode, std::string_view prompt);
std::string MockVqa(const grammar::Lexicon& lexicon, VqaMode mode, std::string_view image,
                    std::string_view question, uint64_t seed);
std::string MockParaphrase(ParaphraseMode mode, std::string_view text);

class MockLmClient : public clarify::LmClient {
 public:
  MockLmClient(std::shared_ptr<const grammar::Grammar> grammar, LmMode mode);
  std::string Complete(const std::string& prompt, const clarify::DecodeParams& params) override;

 private:
  std::shared_ptr<const grammar::Grammar> grammar_;
  LmMode mode_;
};

class MockT2iClient : public eval::T2iClient {
 public:
  std::vector<std::string> Generate(const std::string& prompt, int n) override;
  size_t calls() const { return calls_.load(); }

 private:
  std::atomic<size_t> calls_{0};
};

class MockVqaClient : public eval::VqaClient {
 public:
  MockVqaClient(std::shared_ptr<const grammar::Lexicon> lexicon, VqaMode mode, uint64_t seed = 0);
  std::string Ask(const std::string& image, const std::string& question) override;

 private:
  std::shared_ptr<const grammar::Lexicon> lexicon_;
  VqaMode mode_;
  uint64_t seed_;
};

class MockParaphraseClient : public session::ParaphraseClient {
 public:
  explicit MockParaphraseClient(ParaphraseMode mode) : mode_(mode) {}
  std::string Paraphrase(const std::string& text) override;

 private:
  ParaphraseMode mode_;
};

// One HTTP server hosting every stub endpoint:
//   POST /v1/completions  {prompt, ...} -> {continuation, choices: [{text}]}
//   POST /generate        {prompt, n} -> {images: [{b64, mime}]}
//   POST /vqa             {image, question} -> {answer, score}
//   POST /paraphrase      {text} -> {paraphrase}
//   POST /admin/fail      {count, status, retry_after?}: fail the next
//                         `count` endpoint requests
//   GET  /stats           request counters per route
//   GET  /health
class MockServer {
 public:
  MockServer(MockConfig config, std::shared_ptr<const grammar::Grammar> grammar);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port; Error(kIo) when binding fails.
  int Start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks until Stop() is called from elsewhere.
  void Wait();
  void Stop();

  std::string BaseUrl() const;
  std::string LmUrl() const { return BaseUrl() + "/v1/completions"; }
  std::string T2iUrl() const { return BaseUrl() + "/generate"; }
  std::string VqaUrl() const { return BaseUrl() + "/vqa"; }
  std::string ParaphraseUrl() const { return BaseUrl() + "/paraphrase"; }

  // Requests served per route path.
  std::map<std::string, size_t> Counters() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace promptlens::mock

#endif  // PROMPTLENS_MOCK_MOCK_H_
