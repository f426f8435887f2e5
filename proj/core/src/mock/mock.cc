#include "promptlens/mock/mock.h"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <mutex>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "promptlens/common/error.h"
#include "promptlens/common/hash.h"
#include "promptlens/common/text.h"

namespace promptlens::mock {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kDescOpen = "<desc>";
constexpr std::string_view kDescClose = "</desc>";

std::string XmlEscape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string XmlUnescape(std::string_view s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    static constexpr std::pair<std::string_view, char> kEntities[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}};
    bool matched = false;
    for (const auto& [entity, ch] : kEntities) {
      if (s.substr(i, entity.size()) == entity) {
        out += ch;
        i += entity.size() - 1;
        matched = true;
        break;
      }
    }
    if (!matched) out += '&';
  }
  return out;
}

std::string LastLine(std::string_view text) {
  size_t nl = text.rfind('\n');
  return text::Trim(nl == std::string_view::npos ? text : text.substr(nl + 1));
}

// Whether any shot in the prompt lists more than one question.
bool HasMultiOutputShots(std::string_view prompt, std::string_view cue) {
  int run = 0;
  for (const auto& line : text::SplitLines(prompt)) {
    if (text::StartsWith(line, cue) && line.size() > cue.size()) {
      if (++run > 1) return true;
    } else {
      run = 0;
    }
  }
  return false;
}

std::string FormatContinuation(const std::vector<std::string>& items, std::string_view cue) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    out += i == 0 ? " " : "\n" + std::string(cue) + " ";
    out += items[i];
  }
  return out + "\n###\n";
}

}  // namespace

std::string_view LmModeName(LmMode m) {
  switch (m) {
    case LmMode::kOracle: return "oracle";
    case LmMode::kEcho: return "echo";
    case LmMode::kNoise: return "noise";
  }
  return "oracle";
}

std::optional<LmMode> ParseLmMode(std::string_view name) {
  for (auto m : {LmMode::kOracle, LmMode::kEcho, LmMode::kNoise}) {
    if (LmModeName(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view VqaModeName(VqaMode m) {
  switch (m) {
    case VqaMode::kIntent: return "intent";
    case VqaMode::kHash: return "hash";
    case VqaMode::kYes: return "yes";
    case VqaMode::kNo: return "no";
  }
  return "intent";
}

std::optional<VqaMode> ParseVqaMode(std::string_view name) {
  for (auto m : {VqaMode::kIntent, VqaMode::kHash, VqaMode::kYes, VqaMode::kNo}) {
    if (VqaModeName(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view ParaphraseModeName(ParaphraseMode m) {
  return m == ParaphraseMode::kIdentity ? "identity" : "sentence-swap";
}

std::optional<ParaphraseMode> ParseParaphraseMode(std::string_view name) {
  if (name == "identity") return ParaphraseMode::kIdentity;
  if (name == "sentence-swap") return ParaphraseMode::kSentenceSwap;
  return std::nullopt;
}

std::string MockImage(std::string_view prompt, int index) {
  const std::string digest = Sha256Hex(std::string(prompt) + "#" + std::to_string(index));
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"256\" height=\"256\" "
      "viewBox=\"0 0 256 256\">";
  svg += std::string(kDescOpen) + XmlEscape(prompt) + std::string(kDescClose);
  svg += "<rect width=\"256\" height=\"256\" fill=\"#" + digest.substr(0, 6) + "\"/>";
  svg += "<circle cx=\"" + std::to_string(64 + std::stoi(digest.substr(6, 2), nullptr, 16) / 2) +
         "\" cy=\"128\" r=\"48\" fill=\"#" + digest.substr(8, 6) + "\"/>";
  svg += "<text x=\"8\" y=\"248\" font-size=\"12\" fill=\"#000\">#" + std::to_string(index) +
         "</text></svg>";
  return svg;
}

std::optional<std::string> ImagePrompt(std::string_view image) {
  size_t open = image.find(kDescOpen);
  if (open == std::string_view::npos) return std::nullopt;
  size_t start = open + kDescOpen.size();
  size_t close = image.find(kDescClose, start);
  if (close == std::string_view::npos) return std::nullopt;
  return XmlUnescape(image.substr(start, close - start));
}

std::vector<std::string> Sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (size_t i = 0; i < text.size(); ++i) {
    cur += text[i];
    const bool end = text[i] == '.' || text[i] == '?' || text[i] == '!';
    if (end && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
      if (auto t = text::Trim(cur); !t.empty()) out.push_back(t);
      cur.clear();
    }
  }
  if (auto t = text::Trim(cur); !t.empty()) out.push_back(t);
  return out;
}

std::string MockCompletion(const grammar::Grammar& grammar, LmMode mode,
                           std::string_view prompt) {
  const std::string cue = LastLine(prompt);
  size_t ctx = prompt.rfind("Context:");
  std::string target;
  if (ctx != std::string_view::npos) {
    std::string_view rest = prompt.substr(ctx + 8);
    target = text::Trim(rest.substr(0, rest.find('\n')));
  }
  switch (mode) {
    case LmMode::kEcho: {
      std::string q = text::StripTrailingPunct(target);
      return " " + q + "?\n###\n";
    }
    case LmMode::kNoise: {
      static constexpr std::string_view kWords[] = {"window", "seven", "blue", "river",
                                                    "quietly", "stone", "under", "paper"};
      uint64_t h = Fnv1a64(prompt);
      std::string out;
      for (int i = 0; i < 6; ++i, h >>= 3) out += " " + std::string(kWords[h % 8]);
      return out + "\n";
    }
    case LmMode::kOracle: break;
  }
  std::optional<clarify::FewShotMode> fmode;
  if (cue == "Setup:") fmode = clarify::FewShotMode::kMultiSetup;
  if (cue == "Question:") {
    fmode = HasMultiOutputShots(prompt, "Question:") ? clarify::FewShotMode::kMultiQuestion
                                                      : clarify::FewShotMode::kOneQuestion;
  }
  if (!fmode) return "\n###\n";
  try {
    auto record = grammar.MakeRecord(grammar.Parse(target));
    auto items = clarify::GroundTruthItems(record, *fmode);
    // Setups are written as sentences, like the shots.
    if (*fmode == clarify::FewShotMode::kMultiSetup) {
      for (auto& item : items) item = text::StripTrailingPunct(item) + ".";
    }
    return FormatContinuation(items, cue);
  } catch (const Error&) {
    return "\n###\n";
  }
}

std::string MockVqa(const grammar::Lexicon& lexicon, VqaMode mode, std::string_view image,
                    std::string_view question, uint64_t seed) {
  switch (mode) {
    case VqaMode::kYes: return "yes";
    case VqaMode::kNo: return "no";
    case VqaMode::kHash: {
      uint64_t h = Fnv1a64(std::string(image) + "\x1f" + std::string(question) + "\x1f" +
                           std::to_string(seed));
      return (h >> 17) & 1 ? "Yes" : "no.";
    }
    case VqaMode::kIntent: break;
  }
  auto prompt = ImagePrompt(image);
  if (!prompt) return "no";
  const auto want = grammar::ContentWords(question, lexicon, true);
  for (const auto& sentence : Sentences(*prompt)) {
    if (grammar::ContentWords(sentence, lexicon, true) == want) return "yes";
  }
  return "no";
}

std::string MockParaphrase(ParaphraseMode mode, std::string_view text) {
  if (mode == ParaphraseMode::kIdentity) return std::string(text);
  auto parts = Sentences(text);
  std::reverse(parts.begin(), parts.end());
  return text::Join(parts, " ");
}

MockLmClient::MockLmClient(std::shared_ptr<const grammar::Grammar> grammar, LmMode mode)
    : grammar_(std::move(grammar)), mode_(mode) {}

std::string MockLmClient::Complete(const std::string& prompt, const clarify::DecodeParams&) {
  return MockCompletion(*grammar_, mode_, prompt);
}

std::vector<std::string> MockT2iClient::Generate(const std::string& prompt, int n) {
  ++calls_;
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(MockImage(prompt, i));
  return out;
}

MockVqaClient::MockVqaClient(std::shared_ptr<const grammar::Lexicon> lexicon, VqaMode mode,
                             uint64_t seed)
    : lexicon_(std::move(lexicon)), mode_(mode), seed_(seed) {}

std::string MockVqaClient::Ask(const std::string& image, const std::string& question) {
  return MockVqa(*lexicon_, mode_, image, question, seed_);
}

std::string MockParaphraseClient::Paraphrase(const std::string& text) {
  return MockParaphrase(mode_, text);
}

struct MockServer::Impl {
  MockConfig config;
  std::shared_ptr<const grammar::Grammar> grammar;
  httplib::Server server;
  std::thread thread;
  std::string host;
  int port = 0;
  mutable std::mutex mu;
  std::map<std::string, size_t> counters;
  int fail_remaining = 0;
  int fail_status = 503;
  std::optional<int> fail_retry_after;

  void Count(const std::string& path) {
    std::lock_guard<std::mutex> lock(mu);
    ++counters[path];
  }

  // True when the request was answered with an injected failure.
  bool InjectFailure(httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mu);
    if (fail_remaining <= 0) return false;
    --fail_remaining;
    res.status = fail_status;
    if (fail_retry_after) res.set_header("Retry-After", std::to_string(*fail_retry_after));
    res.set_content(R"({"error":{"code":"injected","message":"injected failure"}})",
                    "application/json");
    return true;
  }

  using Handler = std::function<ordered_json(const ordered_json&)>;

  void Route(const std::string& path, Handler handler) {
    server.Post(path, [this, path, handler](const httplib::Request& req, httplib::Response& res) {
      Count(path);
      if (InjectFailure(res)) return;
      try {
        res.set_content(handler(ordered_json::parse(req.body)).dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(ordered_json{{"error", {{"code", "bad_request"}, {"message", e.what()}}}}
                            .dump(),
                        "application/json");
      }
    });
  }

  void Install() {
    auto complete = [this](const ordered_json& j) {
      std::string cont =
          MockCompletion(*grammar, config.lm, j.at("prompt").get<std::string>());
      return ordered_json{{"continuation", cont}, {"choices", {{{"text", cont}}}}};
    };
    Route("/v1/completions", complete);
    Route("/generate", [](const ordered_json& j) {
      const std::string prompt = j.at("prompt").get<std::string>();
      const int n = j.value("n", 1);
      if (n < 1 || n > 64) throw Error(ErrorCode::kInvalidArgument, "n out of range");
      ordered_json images = ordered_json::array();
      for (int i = 0; i < n; ++i) {
        images.push_back({{"b64", Base64Encode(MockImage(prompt, i))}, {"mime", "image/svg+xml"}});
      }
      return ordered_json{{"images", images}};
    });
    Route("/vqa", [this](const ordered_json& j) {
      const std::string image = Base64Decode(j.at("image").get<std::string>());
      const std::string answer = MockVqa(grammar->lexicon(), config.vqa, image,
                                         j.at("question").get<std::string>(), config.seed);
      return ordered_json{{"answer", answer}, {"score", 1.0}};
    });
    Route("/paraphrase", [this](const ordered_json& j) {
      return ordered_json{
          {"paraphrase", MockParaphrase(config.paraphrase, j.at("text").get<std::string>())}};
    });
    server.Post("/admin/fail", [this](const httplib::Request& req, httplib::Response& res) {
      auto j = ordered_json::parse(req.body, nullptr, false);
      if (j.is_discarded()) {
        res.status = 400;
        return;
      }
      std::lock_guard<std::mutex> lock(mu);
      fail_remaining = j.value("count", 1);
      fail_status = j.value("status", 503);
      fail_retry_after.reset();
      if (j.contains("retry_after")) fail_retry_after = j.at("retry_after").get<int>();
      res.set_content("{}", "application/json");
    });
    server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard<std::mutex> lock(mu);
      res.set_content(ordered_json(counters).dump(), "application/json");
    });
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"ok":true})", "application/json");
    });
  }
};

MockServer::MockServer(MockConfig config, std::shared_ptr<const grammar::Grammar> grammar)
    : impl_(std::make_unique<Impl>()) {
  if (!grammar) throw Error(ErrorCode::kInvalidArgument, "mock server needs a grammar");
  impl_->config = config;
  impl_->grammar = std::move(grammar);
  impl_->Install();
}

MockServer::~MockServer() { Stop(); }

int MockServer::Start(const std::string& host, int port) {
  impl_->host = host;
  // no SO_REUSEPORT: a busy port must fail instead of being shared
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port <= 0) {
    throw Error(ErrorCode::kIo, "mock server cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  spdlog::debug("mock servers listening on {}", BaseUrl());
  return impl_->port;
}

void MockServer::Wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void MockServer::Stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockServer::BaseUrl() const {
  return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

std::map<std::string, size_t> MockServer::Counters() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->counters;
}

}  // namespace promptlens::mock
