#include "promptlens/session/session.h"

#include <chrono>
#include <fstream>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "promptlens/common/error.h"
#include "promptlens/common/text.h"

namespace promptlens::session {

using nlohmann::ordered_json;
using grammar::BenchmarkRecord;

namespace {

bool IsYes(std::string_view s) { return text::Lower(text::StripTrailingPunct(text::Trim(s))) == "yes"; }
bool IsNo(std::string_view s) { return text::Lower(text::StripTrailingPunct(text::Trim(s))) == "no"; }

// "yes, ..." / "no, ..." -> the remainder; nullopt otherwise.
std::optional<std::string> StripLeadingYesNo(std::string_view answer) {
  std::string t = text::Trim(answer);
  std::string lower = text::Lower(t);
  for (std::string_view lead : {"yes,", "no,"}) {
    if (text::StartsWith(lower, lead)) {
      std::string rest = text::Trim(std::string_view(t).substr(lead.size()));
      if (!rest.empty()) return rest;
    }
  }
  return std::nullopt;
}

const grammar::Interpretation* FindByQuestion(const BenchmarkRecord& record,
                                              std::string_view question) {
  for (const auto& in : record.interpretations) {
    if (in.question_text == question) return &in;
  }
  return nullptr;
}

const grammar::Interpretation* FindBySetup(const BenchmarkRecord& record,
                                           std::string_view setup) {
  for (const auto& in : record.interpretations) {
    if (in.setup_text == setup) return &in;
  }
  return nullptr;
}

template <typename T>
ordered_json OptionalJson(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

template <typename T>
std::optional<T> OptionalFrom(const ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

void CheckInvariants(const Session& s) {
  const bool resolved = s.resolution.kind == ResolutionKind::kAnswered ||
                        s.resolution.kind == ResolutionKind::kSelected;
  if (resolved != s.disambiguated_prompt.has_value()) {
    throw Error(ErrorCode::kParse, "session " + s.session_id +
                                       ": disambiguated prompt must be present exactly when the "
                                       "session was answered or selected");
  }
  if (s.paraphrased_prompt && !s.disambiguated_prompt) {
    throw Error(ErrorCode::kParse, "session " + s.session_id + ": paraphrase without prompt");
  }
  if (s.resolution.kind == ResolutionKind::kSelected &&
      (!s.resolution.index || *s.resolution.index < 0 ||
       *s.resolution.index >= static_cast<int>(s.clarification.items.size()))) {
    throw Error(ErrorCode::kParse, "session " + s.session_id + ": selection out of range");
  }
  if (s.intention_index < 0 ||
      s.intention_index >= static_cast<int>(s.record.interpretations.size())) {
    throw Error(ErrorCode::kParse, "session " + s.session_id + ": intention out of range");
  }
}

}  // namespace

int64_t SystemClock::Now() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string_view ResolutionName(ResolutionKind kind) {
  switch (kind) {
    case ResolutionKind::kPending: return "pending";
    case ResolutionKind::kAnswered: return "answered";
    case ResolutionKind::kSelected: return "selected";
    case ResolutionKind::kSkipped: return "skipped";
  }
  return "pending";
}

std::optional<ResolutionKind> ParseResolution(std::string_view name) {
  for (auto k : {ResolutionKind::kPending, ResolutionKind::kAnswered, ResolutionKind::kSelected,
                 ResolutionKind::kSkipped}) {
    if (ResolutionName(k) == name) return k;
  }
  return std::nullopt;
}

const grammar::Interpretation& Session::intention() const {
  if (intention_index < 0 || intention_index >= static_cast<int>(record.interpretations.size())) {
    throw Error(ErrorCode::kOutOfRange, "session " + session_id + " has no intention");
  }
  return record.interpretations[intention_index];
}

Action Action::Answer(std::string text, int question_index) {
  return Action{Kind::kAnswer, std::move(text), question_index};
}
Action Action::Select(int index) { return Action{Kind::kSelect, {}, index}; }
Action Action::Skip() { return Action{Kind::kSkip, {}, 0}; }

std::optional<Action> ParseActionLine(std::string_view line) {
  std::string t = text::Trim(line);
  if (t.empty()) return std::nullopt;
  std::string lower = text::Lower(t);
  if (lower == "skip") return Action::Skip();
  if (text::StartsWith(lower, "select ")) {
    std::string n = text::Trim(std::string_view(t).substr(7));
    int value = 0;
    size_t used = 0;
    try {
      value = std::stoi(n, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == n.size() && value >= 1) return Action::Select(value - 1);
  }
  return Action::Answer(t);
}

Session OpenSession(std::string session_id, const BenchmarkRecord& record, int intention_index,
                    clarify::FewShotMode mode, clarify::Clarifier& clarifier, Clock& clock) {
  if (intention_index < 0 || intention_index >= static_cast<int>(record.interpretations.size())) {
    throw Error(ErrorCode::kOutOfRange,
                "intention index " + std::to_string(intention_index) + " is invalid for " +
                    record.prompt.id + " with " +
                    std::to_string(record.interpretations.size()) + " interpretations");
  }
  Session s;
  s.session_id = std::move(session_id);
  s.record = record;
  s.intention_index = intention_index;
  s.mode = mode;
  s.clarification = clarifier.ClarifyRecord(record, mode);
  s.opened_at = clock.Now();
  return s;
}

std::string ConcatenateSignal(std::string_view original, std::string_view signal) {
  std::string base = text::Trim(original);
  std::string sentence = text::CapitalizeFirst(text::StripTrailingPunct(text::Trim(signal)));
  sentence += '.';
  if (base.empty()) return sentence;
  base += text::IsTerminalPunct(base.back()) ? " " : ". ";
  return base + sentence;
}

std::string NormalizeAnswer(const BenchmarkRecord& record, std::string_view question,
                            std::string_view answer, SignalStyle style) {
  std::string t = text::Trim(answer);
  if (style == SignalStyle::kRaw) return t;
  const grammar::Interpretation* asked = FindByQuestion(record, question);
  if (IsYes(t) && asked) return asked->setup_text;
  if (IsNo(t) && asked && record.interpretations.size() == 2) {
    return record.interpretations[asked->index == 0 ? 1 : 0].setup_text;
  }
  if (auto rest = StripLeadingYesNo(t)) return *rest;
  return t;
}

Session Resolve(const Session& session, const Action& action, Clock& clock, SignalStyle style) {
  if (!session.pending()) {
    throw Error(ErrorCode::kConflict, "session " + session.session_id + " is already " +
                                          std::string(ResolutionName(session.resolution.kind)));
  }
  const auto& items = session.clarification.items;
  auto check_index = [&](int i) {
    if (i < 0 || i >= static_cast<int>(items.size())) {
      throw Error(ErrorCode::kOutOfRange, "item " + std::to_string(i) + " is out of range for " +
                                              std::to_string(items.size()) + " items");
    }
  };
  Session out = session;
  Resolution& r = out.resolution;
  switch (action.kind) {
    case Action::Kind::kSkip:
      r.kind = ResolutionKind::kSkipped;
      break;
    case Action::Kind::kAnswer: {
      if (text::Trim(action.text).empty()) {
        throw Error(ErrorCode::kInvalidArgument, "answer text is empty");
      }
      r.kind = ResolutionKind::kAnswered;
      r.answer = action.text;
      std::string question;
      if (!items.empty()) {
        check_index(action.index);
        r.index = action.index;
        if (clarify::IsQuestionMode(session.mode)) question = items[action.index];
      }
      r.signal = NormalizeAnswer(session.record, question, action.text, style);
      break;
    }
    case Action::Kind::kSelect: {
      check_index(action.index);
      r.kind = ResolutionKind::kSelected;
      r.index = action.index;
      const std::string& item = items[action.index];
      r.signal = clarify::IsQuestionMode(session.mode)
                     ? NormalizeAnswer(session.record, item, "yes", SignalStyle::kDeclarative)
                     : item;
      break;
    }
  }
  if (r.kind != ResolutionKind::kSkipped) {
    out.disambiguated_prompt = ConcatenateSignal(session.record.prompt.text, r.signal);
  }
  out.resolved_at = clock.Now();
  return out;
}

HttpParaphraseClient::HttpParaphraseClient(http::EndpointConfig config)
    : client_(std::move(config)) {}

std::string HttpParaphraseClient::Paraphrase(const std::string& input) {
  const std::string body = client_.Post(ordered_json{{"text", input}}.dump());
  try {
    auto res = ordered_json::parse(body);
    return res.at("paraphrase").get<std::string>();
  } catch (const ordered_json::exception&) {
    throw EndpointError("paraphrase endpoint returned an unrecognized body", 200, 1,
                        std::nullopt, body);
  }
}

Session Paraphrase(const Session& session, ParaphraseClient& client, Clock& clock) {
  if (!session.disambiguated_prompt) {
    throw Error(ErrorCode::kFailedPrecondition,
                "session " + session.session_id + " has no disambiguated prompt");
  }
  std::string paraphrase = client.Paraphrase(*session.disambiguated_prompt);
  Session out = session;
  out.paraphrased_prompt = std::move(paraphrase);
  out.paraphrased_at = clock.Now();
  return out;
}

std::string SessionJson(const Session& s) {
  ordered_json j;
  j["session_id"] = s.session_id;
  j["intention_index"] = s.intention_index;
  j["mode"] = clarify::ModeName(s.mode);
  j["record"] = ordered_json::parse(grammar::RecordJson(s.record));
  j["clarification"] = {{"prompt_id", s.clarification.prompt_id},
                        {"mode", clarify::ModeName(s.clarification.mode)},
                        {"items", s.clarification.items},
                        {"raw_continuation", s.clarification.raw_continuation},
                        {"source", clarify::SourceName(s.clarification.source)}};
  j["resolution"] = {{"kind", ResolutionName(s.resolution.kind)},
                     {"answer", s.resolution.answer},
                     {"index", OptionalJson(s.resolution.index)},
                     {"signal", s.resolution.signal}};
  j["disambiguated_prompt"] = OptionalJson(s.disambiguated_prompt);
  j["paraphrased_prompt"] = OptionalJson(s.paraphrased_prompt);
  j["opened_at"] = s.opened_at;
  j["resolved_at"] = OptionalJson(s.resolved_at);
  j["paraphrased_at"] = OptionalJson(s.paraphrased_at);
  return j.dump();
}

namespace {

Session SessionFromJson(const ordered_json& j) {
  Session s;
  s.session_id = j.at("session_id").get<std::string>();
  s.intention_index = j.at("intention_index").get<int>();
  auto mode = clarify::ParseMode(j.at("mode").get<std::string>());
  if (!mode) throw Error(ErrorCode::kParse, "unknown mode");
  s.mode = *mode;
  s.record = grammar::ParseRecordJson(j.at("record").dump());
  const auto& c = j.at("clarification");
  s.clarification.prompt_id = c.at("prompt_id").get<std::string>();
  auto cmode = clarify::ParseMode(c.at("mode").get<std::string>());
  auto source = clarify::ParseSource(c.at("source").get<std::string>());
  if (!cmode || !source) throw Error(ErrorCode::kParse, "bad clarification mode or source");
  s.clarification.mode = *cmode;
  s.clarification.source = *source;
  s.clarification.items = c.at("items").get<std::vector<std::string>>();
  s.clarification.raw_continuation = c.at("raw_continuation").get<std::string>();
  const auto& r = j.at("resolution");
  auto kind = ParseResolution(r.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::kParse, "unknown resolution kind");
  s.resolution.kind = *kind;
  s.resolution.answer = r.at("answer").get<std::string>();
  s.resolution.index = OptionalFrom<int>(r, "index");
  s.resolution.signal = r.at("signal").get<std::string>();
  s.disambiguated_prompt = OptionalFrom<std::string>(j, "disambiguated_prompt");
  s.paraphrased_prompt = OptionalFrom<std::string>(j, "paraphrased_prompt");
  s.opened_at = j.at("opened_at").get<int64_t>();
  s.resolved_at = OptionalFrom<int64_t>(j, "resolved_at");
  s.paraphrased_at = OptionalFrom<int64_t>(j, "paraphrased_at");
  CheckInvariants(s);
  return s;
}

}  // namespace

Session ParseSessionJson(std::string_view json) {
  try {
    return SessionFromJson(ordered_json::parse(json));
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed session: ") + e.what());
  }
}

std::string LogLine(std::string_view event, const Session& session) {
  ordered_json j;
  j["schema_version"] = kLogSchemaVersion;
  j["event"] = event;
  j["session"] = ordered_json::parse(SessionJson(session));
  return j.dump();
}

void Persist(const Session& session, std::string_view event, std::ostream& log) {
  log << LogLine(event, session) << '\n';
  log.flush();
  if (!log) throw Error(ErrorCode::kIo, "failed to append to session log");
}

void Persist(const Session& session, std::string_view event, const std::string& path) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open session log " + path);
  Persist(session, event, out);
}

std::vector<Session> LoadSessions(std::string_view log) {
  std::vector<Session> order;
  std::map<std::string, size_t> slot;
  size_t line_no = 0;
  size_t start = 0;
  while (start < log.size()) {
    size_t end = log.find('\n', start);
    const bool terminated = end != std::string_view::npos;
    std::string_view line = log.substr(start, terminated ? end - start : std::string_view::npos);
    start = terminated ? end + 1 : log.size();
    ++line_no;
    if (text::Trim(line).empty()) continue;
    auto fail = [&](const std::string& why) {
      return Error(ErrorCode::kParse,
                   "session log line " + std::to_string(line_no) + ": " + why);
    };
    Session s;
    std::string event;
    try {
      auto j = ordered_json::parse(line);
      if (j.at("schema_version").get<int>() != kLogSchemaVersion) {
        throw fail("unsupported schema_version");
      }
      event = j.at("event").get<std::string>();
      s = SessionFromJson(j.at("session"));
    } catch (const ordered_json::exception& e) {
      throw fail(e.what());
    } catch (const Error& e) {
      if (text::StartsWith(e.what(), "session log line")) throw;
      throw fail(e.what());
    }
    auto it = slot.find(s.session_id);
    if (event == "open") {
      if (it != slot.end()) throw fail("session " + s.session_id + " opened twice");
      if (!s.pending()) throw fail("open event for a finalized session");
      slot[s.session_id] = order.size();
      order.push_back(std::move(s));
      continue;
    }
    if (it == slot.end()) throw fail("event '" + event + "' before open");
    Session& prev = order[it->second];
    if (event == "resolve") {
      if (!prev.pending()) throw fail("session " + s.session_id + " resolved twice");
      if (s.pending()) throw fail("resolve event leaves the session pending");
    } else if (event == "paraphrase") {
      if (!prev.disambiguated_prompt || !s.paraphrased_prompt) {
        throw fail("paraphrase event without a disambiguated prompt");
      }
    } else {
      throw fail("unknown event '" + event + "'");
    }
    prev = std::move(s);
  }
  return order;
}

std::vector<Session> LoadSessionsFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open session log " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return LoadSessions(ss.str());
}

Session Load(std::string_view log, std::string_view session_id) {
  auto sessions = LoadSessions(log);
  if (sessions.empty()) throw Error(ErrorCode::kNotFound, "no session");
  if (session_id.empty()) return sessions.back();
  for (auto& s : sessions) {
    if (s.session_id == session_id) return s;
  }
  throw Error(ErrorCode::kNotFound, "no session " + std::string(session_id));
}

Action AutoAnswerer::Decide(const Session& session) {
  const auto& want = session.intention();
  const auto& items = session.clarification.items;
  if (clarify::IsQuestionMode(session.mode)) {
    for (size_t i = 0; i < items.size(); ++i) {
      if (items[i] == want.question_text) return Action::Answer("yes", static_cast<int>(i));
    }
    if (!items.empty() && session.record.interpretations.size() == 2) {
      const auto* other = FindByQuestion(session.record, items[0]);
      if (other && other->index != want.index) return Action::Answer("no", 0);
    }
  } else {
    for (size_t i = 0; i < items.size(); ++i) {
      if (items[i] == want.setup_text) return Action::Select(static_cast<int>(i));
      if (const auto* in = FindBySetup(session.record, items[i]); in && in->index == want.index) {
        return Action::Select(static_cast<int>(i));
      }
    }
  }
  return Action::Answer(want.setup_text);
}

LineAnswerer::LineAnswerer(std::istream& in, std::ostream* prompt) : in_(in), prompt_(prompt) {}

Action LineAnswerer::Decide(const Session& session) {
  if (prompt_) *prompt_ << DescribeSession(session) << std::flush;
  std::string line;
  while (std::getline(in_, line)) {
    if (auto action = ParseActionLine(line)) {
      const auto n = static_cast<int>(session.clarification.items.size());
      if (prompt_ && action->kind == Action::Kind::kSelect && action->index >= n) {
        *prompt_ << "choose 1-" << n << "\n> " << std::flush;
        continue;
      }
      return *action;
    }
    if (prompt_) *prompt_ << "> " << std::flush;
  }
  throw Error(ErrorCode::kExhausted, "answers ran out at session " + session.session_id);
}

std::string DescribeSession(const Session& session) {
  std::ostringstream out;
  out << "[" << session.session_id << "] " << session.record.prompt.text << "\n";
  out << "intention: " << session.intention().setup_text << "\n";
  const auto& items = session.clarification.items;
  for (size_t i = 0; i < items.size(); ++i) {
    out << "  " << (i + 1) << ". " << items[i] << "\n";
  }
  if (items.empty()) out << "  (no clarification items)\n";
  out << "answer (yes | no | select N | skip | text)\n> ";
  return out.str();
}

double BatchStats::SuccessRate() const {
  return total == 0 ? 0.0 : static_cast<double>(answered + selected) / static_cast<double>(total);
}

BatchStats Tally(const std::vector<Session>& sessions) {
  BatchStats st;
  st.total = sessions.size();
  for (const auto& s : sessions) {
    switch (s.resolution.kind) {
      case ResolutionKind::kAnswered: ++st.answered; break;
      case ResolutionKind::kSelected: ++st.selected; break;
      case ResolutionKind::kSkipped: ++st.skipped; break;
      case ResolutionKind::kPending: break;
    }
  }
  return st;
}

std::string BatchSessionId(std::string_view record_id, int intention_index) {
  return std::string(record_id) + "-i" + std::to_string(intention_index);
}

std::vector<Session> RunBatch(const grammar::Benchmark& benchmark, const BatchOptions& options,
                              clarify::Clarifier& clarifier, Answerer& answerer, Clock& clock,
                              std::ostream* log, ParaphraseClient* paraphraser) {
  std::vector<const BenchmarkRecord*> records;
  if (options.record_ids.empty()) {
    for (const auto& r : benchmark.records) records.push_back(&r);
  } else {
    for (const auto& id : options.record_ids) {
      const auto* r = benchmark.Find(id);
      if (!r) throw Error(ErrorCode::kNotFound, "no record " + id);
      records.push_back(r);
    }
  }
  std::vector<Session> out;
  for (const auto* record : records) {
    for (size_t i = 0; i < record->interpretations.size(); ++i) {
      const int idx = static_cast<int>(i);
      Session s = OpenSession(BatchSessionId(record->prompt.id, idx), *record, idx, options.mode,
                              clarifier, clock);
      if (log) Persist(s, "open", *log);
      s = Resolve(s, answerer.Decide(s), clock, options.style);
      if (log) Persist(s, "resolve", *log);
      if (paraphraser && s.disambiguated_prompt) {
        s = Paraphrase(s, *paraphraser, clock);
        if (log) Persist(s, "paraphrase", *log);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace promptlens::session
