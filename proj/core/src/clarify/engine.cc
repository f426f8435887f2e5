#include "promptlens/clarify/engine.h"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "promptlens/common/error.h"
#include "promptlens/common/text.h"
#include "promptlens/grammar/lexicon.h"

namespace promptlens::clarify {

using nlohmann::json;

namespace {

constexpr std::string_view kStopMarker = "###";
constexpr std::string_view kContextCue = "Context:";

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<ShotExample> ParseShotBlock(const json& block, std::string_view instruction,
                                        const std::string& name) {
  if (block.value("instruction", std::string()) != instruction) {
    throw Error(ErrorCode::kParse, "shot block '" + name + "' must use the instruction '" +
                                       std::string(instruction) + "'");
  }
  std::vector<ShotExample> shots;
  for (const auto& s : block.at("shots")) {
    ShotExample ex;
    ex.context = s.at("context").get<std::string>();
    for (const auto& o : s.at("outputs")) ex.outputs.push_back(o.get<std::string>());
    shots.push_back(std::move(ex));
  }
  return shots;
}

json ParseJson(std::string_view doc, const char* what) {
  try {
    return json::parse(doc);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::string_view ModeName(FewShotMode mode) {
  switch (mode) {
    case FewShotMode::kOneQuestion: return "one_question";
    case FewShotMode::kMultiQuestion: return "multi_question";
    case FewShotMode::kMultiSetup: return "multi_setup";
  }
  return "one_question";
}

std::optional<FewShotMode> ParseMode(std::string_view name) {
  for (FewShotMode m : kAllModes) {
    if (ModeName(m) == name) return m;
  }
  return std::nullopt;
}

bool IsQuestionMode(FewShotMode mode) { return mode != FewShotMode::kMultiSetup; }

std::string_view Instruction(FewShotMode mode) {
  return IsQuestionMode(mode) ? "Generate disambiguating question"
                              : "Generate possible visual setups";
}

std::string_view Cue(FewShotMode mode) { return IsQuestionMode(mode) ? "Question:" : "Setup:"; }

const std::vector<ShotExample>& ShotLibrary::For(FewShotMode mode) const {
  auto it = by_mode.find(mode);
  if (it == by_mode.end() || it->second.empty()) {
    throw Error(ErrorCode::kNotFound,
                "shot library has no shots for mode " + std::string(ModeName(mode)));
  }
  return it->second;
}

ShotLibrary ParseShotLibrary(std::string_view document) {
  json doc = ParseJson(document, "shot library");
  ShotLibrary lib;
  try {
    for (const auto& [key, block] : doc.items()) {
      auto mode = ParseMode(key);
      if (!mode) throw Error(ErrorCode::kParse, "unknown few-shot mode '" + key + "'");
      lib.by_mode[*mode] = ParseShotBlock(block, Instruction(*mode), key);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed shot library: ") + e.what());
  }
  return lib;
}

ShotLibrary LoadShotLibrary(const std::string& path) { return ParseShotLibrary(ReadFile(path)); }

AblationShots ParseAblationShots(std::string_view document) {
  json doc = ParseJson(document, "ablation shots");
  AblationShots out;
  try {
    for (const auto& [key, block] : doc.items()) {
      auto type = grammar::ParseType(key);
      if (!type) throw Error(ErrorCode::kParse, "unknown ambiguity type '" + key + "'");
      out.by_type[*type] = ParseShotBlock(block, Instruction(FewShotMode::kOneQuestion), key);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed ablation shots: ") + e.what());
  }
  return out;
}

AblationShots LoadAblationShots(const std::string& path) {
  return ParseAblationShots(ReadFile(path));
}

std::string DefaultShotsPath() { return grammar::DataDir() + "/shots/default.json"; }
std::string AblationShotsPath() { return grammar::DataDir() + "/shots/ablation.json"; }

std::string_view SourceName(Source source) {
  return source == Source::kModel ? "model" : "oracle";
}

std::optional<Source> ParseSource(std::string_view name) {
  if (name == "model") return Source::kModel;
  if (name == "oracle") return Source::kOracle;
  return std::nullopt;
}

std::string BuildFewShotPrompt(FewShotMode mode, const std::vector<ShotExample>& shots,
                               std::string_view target) {
  if (shots.empty()) throw Error(ErrorCode::kInvalidArgument, "few-shot prompt needs shots");
  const std::string cue(Cue(mode));
  std::string out(Instruction(mode));
  out += "\n\n";
  for (const auto& s : shots) {
    if (s.outputs.empty() || (mode == FewShotMode::kOneQuestion && s.outputs.size() != 1)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "shot '" + s.context + "' does not fit mode " + std::string(ModeName(mode)));
    }
    out += std::string(kContextCue) + " " + s.context + "\n";
    for (const auto& o : s.outputs) out += cue + " " + o + "\n";
    out += std::string(kStopMarker) + "\n";
  }
  std::string t = text::Trim(target);
  if (t.empty() || !text::IsTerminalPunct(t.back())) t += ".";
  out += std::string(kContextCue) + " " + t + "\n" + cue;
  return out;
}

std::vector<std::string> ParseGeneration(FewShotMode mode, std::string_view continuation) {
  std::string_view body = continuation;
  if (size_t stop = body.find(kStopMarker); stop != std::string_view::npos) {
    body = body.substr(0, stop);
  }
  const std::string cue(Cue(mode));
  const char terminal = IsQuestionMode(mode) ? '?' : '.';
  std::vector<std::string> items;
  bool first = true;
  for (const std::string& raw : text::SplitLines(body)) {
    const std::string line = text::Trim(raw);
    if (text::StartsWith(line, kContextCue)) break;
    if (text::StartsWith(line, cue)) {
      std::string item = text::Trim(std::string_view(line).substr(cue.size()));
      if (!item.empty()) items.push_back(std::move(item));
    } else if (first && !line.empty() && line.back() == terminal) {
      items.push_back(line);
    }
    first = false;
  }
  if (mode == FewShotMode::kOneQuestion && items.size() > 1) items.resize(1);
  return items;
}

HttpLmClient::HttpLmClient(http::EndpointConfig config) : client_(std::move(config)) {}

std::string HttpLmClient::Complete(const std::string& prompt, const DecodeParams& params) {
  json req = {{"prompt", prompt},
              {"max_tokens", params.max_tokens},
              {"temperature", params.temperature},
              {"stop", params.stop}};
  const std::string body = client_.Post(req.dump());
  try {
    json res = json::parse(body);
    if (res.contains("continuation")) return res.at("continuation").get<std::string>();
    if (res.contains("choices") && !res.at("choices").empty()) {
      return res.at("choices").at(0).at("text").get<std::string>();
    }
  } catch (const json::exception&) {
  }
  throw EndpointError("completion endpoint returned an unrecognized body", 200, 1, std::nullopt,
                      body);
}

ClarificationResult Clarify(const grammar::AmbiguousPrompt& prompt, FewShotMode mode,
                            const std::vector<ShotExample>& shots, LmClient& client,
                            const DecodeParams& params) {
  const std::string few_shot = BuildFewShotPrompt(mode, shots, prompt.text);
  ClarificationResult r;
  r.prompt_id = prompt.id;
  r.mode = mode;
  r.source = Source::kModel;
  r.raw_continuation = client.Complete(few_shot, params);
  r.items = ParseGeneration(mode, r.raw_continuation);
  return r;
}

std::vector<std::string> GroundTruthItems(const grammar::BenchmarkRecord& record,
                                          FewShotMode mode) {
  std::vector<std::string> items;
  for (const auto& in : record.interpretations) {
    items.push_back(IsQuestionMode(mode) ? in.question_text : in.setup_text);
    if (mode == FewShotMode::kOneQuestion) break;
  }
  return items;
}

ClarificationResult FallbackClarify(const grammar::Grammar& grammar,
                                    const grammar::AmbiguousPrompt& prompt, FewShotMode mode) {
  grammar::AmbiguousPrompt resolved = prompt;
  if (!grammar.FindTemplate(prompt.template_id)) {
    resolved = grammar.Parse(prompt.text, prompt.id);
  }
  ClarificationResult r;
  r.prompt_id = prompt.id;
  r.mode = mode;
  r.source = Source::kOracle;
  r.items = GroundTruthItems(grammar.MakeRecord(resolved), mode);
  if (r.items.empty()) {
    throw Error(ErrorCode::kUndefined, "prompt '" + prompt.text + "' has no interpretations");
  }
  return r;
}

ClarificationResult OracleClarifier::ClarifyRecord(const grammar::BenchmarkRecord& record,
                                                   FewShotMode mode) {
  ClarificationResult r;
  r.prompt_id = record.prompt.id;
  r.mode = mode;
  r.source = Source::kOracle;
  r.items = GroundTruthItems(record, mode);
  if (r.items.empty()) {
    throw Error(ErrorCode::kUndefined, "record " + record.prompt.id + " has no interpretations");
  }
  return r;
}

ModelClarifier::ModelClarifier(std::shared_ptr<LmClient> client, ShotLibrary shots,
                               DecodeParams params)
    : client_(std::move(client)), shots_(std::move(shots)), params_(std::move(params)) {
  if (!client_) throw Error(ErrorCode::kInvalidArgument, "model clarifier needs a client");
}

ClarificationResult ModelClarifier::ClarifyRecord(const grammar::BenchmarkRecord& record,
                                                  FewShotMode mode) {
  return Clarify(record.prompt, mode, shots_.For(mode), *client_, params_);
}

}  // namespace promptlens::clarify
