#include "promptlens/grammar/lexicon.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "promptlens/common/error.h"
#include "promptlens/common/text.h"

#ifndef PROMPTLENS_DEFAULT_DATA_DIR
#define PROMPTLENS_DEFAULT_DATA_DIR "data"
#endif

namespace promptlens::grammar {

using nlohmann::json;

namespace {

std::string FirstWord(std::string_view s) {
  size_t sp = s.find(' ');
  return std::string(s.substr(0, sp));
}

void CheckLexeme(const std::string& category, const std::string& entry) {
  if (entry.empty()) {
    throw Error(ErrorCode::kParse, "lexicon category '" + category + "' has an empty entry");
  }
  if (text::Trim(entry) != entry) {
    throw Error(ErrorCode::kParse, "lexicon entry '" + entry + "' in '" + category +
                                       "' has leading or trailing whitespace");
  }
  for (char c : entry) {
    if (std::isupper(static_cast<unsigned char>(c))) {
      throw Error(ErrorCode::kParse,
                  "lexicon entry '" + entry + "' in '" + category + "' is not lowercase");
    }
  }
  if (entry.find("  ") != std::string::npos) {
    throw Error(ErrorCode::kParse, "lexicon entry '" + entry + "' has repeated spaces");
  }
}

void Warn(std::vector<std::string>* warnings, std::string msg) {
  spdlog::warn("{}", msg);
  if (warnings) warnings->push_back(std::move(msg));
}

const json& Require(const json& doc, const std::string& category, bool allow_empty) {
  auto it = doc.find(category);
  if (it == doc.end()) {
    throw Error(ErrorCode::kMissingCategory, "lexicon is missing category '" + category + "'");
  }
  if (!it->is_array()) {
    throw Error(ErrorCode::kParse, "lexicon category '" + category + "' must be an array");
  }
  if (!allow_empty && it->empty()) {
    throw Error(ErrorCode::kMissingCategory, "lexicon category '" + category + "' is empty");
  }
  return *it;
}

template <typename T, typename KeyFn>
std::vector<T> Dedupe(const std::string& category, std::vector<T> in, KeyFn key,
                      std::vector<std::string>* warnings) {
  std::vector<T> out;
  std::set<std::string> seen;
  for (auto& v : in) {
    std::string k = key(v);
    if (!seen.insert(k).second) {
      Warn(warnings, "duplicate entry '" + k + "' in lexicon category '" + category +
                         "' dropped");
      continue;
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::string> StringList(const json& doc, const std::string& category,
                                    bool allow_empty, std::vector<std::string>* warnings) {
  const json& arr = Require(doc, category, allow_empty);
  std::vector<std::string> out;
  for (const auto& e : arr) {
    if (!e.is_string()) {
      throw Error(ErrorCode::kParse, "lexicon category '" + category + "' must hold strings");
    }
    out.push_back(e.get<std::string>());
    CheckLexeme(category, out.back());
  }
  return Dedupe(category, std::move(out), [](const std::string& s) { return s; }, warnings);
}

std::vector<AdjectiveEntry> ParseAdjectives(const json& doc,
                                            std::vector<std::string>* warnings) {
  const json& arr = Require(doc, "adjectives", false);
  std::vector<AdjectiveEntry> out;
  for (const auto& e : arr) {
    AdjectiveEntry adj;
    if (e.is_string()) {
      adj.word = e.get<std::string>();
    } else if (e.is_object() && e.contains("word")) {
      adj.word = e.at("word").get<std::string>();
      if (e.contains("applies")) {
        adj.applies_person = adj.applies_animal = adj.applies_object = false;
        for (const auto& k : e.at("applies")) {
          const std::string kind = k.get<std::string>();
          if (kind == "person") adj.applies_person = true;
          else if (kind == "animal") adj.applies_animal = true;
          else if (kind == "object") adj.applies_object = true;
          else throw Error(ErrorCode::kParse, "unknown adjective kind '" + kind + "'");
        }
      }
    } else {
      throw Error(ErrorCode::kParse, "adjective entries must be strings or {word, applies}");
    }
    CheckLexeme("adjectives", adj.word);
    out.push_back(std::move(adj));
  }
  return Dedupe("adjectives", std::move(out), [](const AdjectiveEntry& a) { return a.word; },
                warnings);
}

std::vector<VerbEntry> ParseVerbs(const json& doc, std::vector<std::string>* warnings) {
  const json& arr = Require(doc, "transitive_verbs", false);
  std::vector<VerbEntry> out;
  for (const auto& e : arr) {
    if (!e.is_object() || !e.contains("base") || !e.contains("third") ||
        !e.contains("participle")) {
      throw Error(ErrorCode::kParse,
                  "transitive_verbs entries need base, third and participle forms");
    }
    VerbEntry v;
    v.base = e.at("base").get<std::string>();
    v.third = e.at("third").get<std::string>();
    v.participle = e.at("participle").get<std::string>();
    CheckLexeme("transitive_verbs", v.base);
    CheckLexeme("transitive_verbs", v.third);
    CheckLexeme("transitive_verbs", v.participle);
    if (e.contains("takes")) {
      v.takes_agent = v.takes_object = false;
      for (const auto& k : e.at("takes")) {
        const std::string kind = k.get<std::string>();
        if (kind == "agent") v.takes_agent = true;
        else if (kind == "object") v.takes_object = true;
        else throw Error(ErrorCode::kParse, "unknown verb object kind '" + kind + "'");
      }
    }
    out.push_back(std::move(v));
  }
  return Dedupe("transitive_verbs", std::move(out), [](const VerbEntry& v) { return v.base; },
                warnings);
}

}  // namespace

bool AdjectiveEntry::AppliesTo(NounKind kind) const {
  switch (kind) {
    case NounKind::kPerson:
    case NounKind::kOccupation: return applies_person;
    case NounKind::kAnimal: return applies_animal;
    case NounKind::kObject: return applies_object;
  }
  return false;
}

Lexicon::Lexicon(LexiconData data) : data_(std::move(data)) {
  auto require = [](const auto& v, const char* name) {
    if (v.empty()) {
      throw Error(ErrorCode::kMissingCategory,
                  std::string("lexicon category '") + name + "' is empty");
    }
  };
  require(data_.person_nouns, "person_nouns");
  require(data_.animal_nouns, "animal_nouns");
  require(data_.object_nouns, "object_nouns");
  require(data_.adjectives, "adjectives");
  require(data_.transitive_verbs, "transitive_verbs");
  require(data_.prepositions, "prepositions");
  require(data_.activities, "activities");
  require(data_.occupations, "occupations");

  auto add_nouns = [this](const std::vector<std::string>& nouns, NounKind kind) {
    for (const auto& n : nouns) noun_kind_.emplace(n, kind);
  };
  add_nouns(data_.person_nouns, NounKind::kPerson);
  add_nouns(data_.animal_nouns, NounKind::kAnimal);
  add_nouns(data_.object_nouns, NounKind::kObject);
  add_nouns(data_.occupations, NounKind::kOccupation);

  lemma_["has"] = "have";
  lemma_["have"] = "have";
  for (size_t i = 0; i < data_.transitive_verbs.size(); ++i) {
    const VerbEntry& v = data_.transitive_verbs[i];
    verb_by_form_.emplace(v.base, i);
    verb_by_form_.emplace(v.third, i);
    verb_by_form_.emplace(v.participle, i);
    lemma_.emplace(FirstWord(v.third), FirstWord(v.base));
    lemma_.emplace(FirstWord(v.base), FirstWord(v.base));
  }
  for (size_t i = 0; i < data_.adjectives.size(); ++i) {
    adjective_by_word_.emplace(data_.adjectives[i].word, i);
  }
  std::set<std::string> caps;
  for (const auto& [noun, list] : data_.capabilities) {
    for (const auto& c : list) caps.insert(c);
  }
  all_capabilities_.assign(caps.begin(), caps.end());
  for (const auto& [mod, head] : data_.compounds) {
    compound_phrases_.push_back(mod + " " + head);
  }
}

std::optional<NounKind> Lexicon::KindOf(std::string_view noun) const {
  auto it = noun_kind_.find(std::string(noun));
  if (it == noun_kind_.end()) return std::nullopt;
  return it->second;
}

bool Lexicon::IsPersonLike(std::string_view noun) const {
  auto k = KindOf(noun);
  return k && (*k == NounKind::kPerson || *k == NounKind::kOccupation);
}

const VerbEntry* Lexicon::FindVerb(std::string_view form) const {
  auto it = verb_by_form_.find(std::string(form));
  return it == verb_by_form_.end() ? nullptr : &data_.transitive_verbs[it->second];
}

const AdjectiveEntry* Lexicon::FindAdjective(std::string_view word) const {
  auto it = adjective_by_word_.find(std::string(word));
  return it == adjective_by_word_.end() ? nullptr : &data_.adjectives[it->second];
}

std::set<std::string> Lexicon::CapabilitiesOf(std::string_view noun) const {
  std::set<std::string> out;
  if (auto it = data_.capabilities.find(std::string(noun)); it != data_.capabilities.end()) {
    out.insert(it->second.begin(), it->second.end());
  }
  if (IsPersonLike(noun)) {
    if (auto it = data_.capabilities.find("person"); it != data_.capabilities.end()) {
      out.insert(it->second.begin(), it->second.end());
    }
  }
  return out;
}

bool Lexicon::IsKnownCapability(std::string_view phrase) const {
  return std::binary_search(all_capabilities_.begin(), all_capabilities_.end(),
                            std::string(phrase));
}

std::optional<std::pair<std::string, std::string>> Lexicon::SplitCompound(
    std::string_view compound) const {
  for (const auto& c : data_.compounds) {
    if (c.first.size() + 1 + c.second.size() == compound.size() &&
        compound == c.first + " " + c.second) {
      return c;
    }
  }
  return std::nullopt;
}

std::string Lexicon::LemmaOf(std::string_view word) const {
  auto it = lemma_.find(std::string(word));
  return it == lemma_.end() ? std::string(word) : it->second;
}

Lexicon LoadLexicon(std::string_view document, std::vector<std::string>* warnings) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed lexicon document: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "lexicon document must be an object");

  LexiconData data;
  try {
    data.person_nouns = StringList(doc, "person_nouns", false, warnings);
    data.animal_nouns = StringList(doc, "animal_nouns", false, warnings);
    data.object_nouns = StringList(doc, "object_nouns", false, warnings);
    data.adjectives = ParseAdjectives(doc, warnings);
    data.transitive_verbs = ParseVerbs(doc, warnings);
    data.prepositions = StringList(doc, "prepositions", false, warnings);
    data.activities = StringList(doc, "activities", false, warnings);
    data.occupations = StringList(doc, "occupations", false, warnings);
    data.decorations = StringList(doc, "decorations", true, warnings);

    if (doc.contains("capabilities")) {
      for (const auto& [noun, list] : doc.at("capabilities").items()) {
        auto& caps = data.capabilities[noun];
        for (const auto& c : list) {
          caps.push_back(c.get<std::string>());
          CheckLexeme("capabilities", caps.back());
        }
        caps = Dedupe("capabilities", std::move(caps), [](const std::string& s) { return s; },
                      warnings);
      }
    }
    if (doc.contains("materials")) {
      data.materials = StringList(doc, "materials", true, warnings);
    }
    if (doc.contains("compounds")) {
      for (const auto& c : doc.at("compounds")) {
        if (!c.is_array() || c.size() != 2) {
          throw Error(ErrorCode::kParse, "compounds entries must be [modifier, head] pairs");
        }
        data.compounds.emplace_back(c[0].get<std::string>(), c[1].get<std::string>());
        CheckLexeme("compounds", data.compounds.back().first);
        CheckLexeme("compounds", data.compounds.back().second);
      }
      data.compounds = Dedupe(
          "compounds", std::move(data.compounds),
          [](const std::pair<std::string, std::string>& p) { return p.first + " " + p.second; },
          warnings);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed lexicon document: ") + e.what());
  }

  std::map<std::string, std::string> owner;
  auto check_disjoint = [&](const std::vector<std::string>& v, const char* cat) {
    for (const auto& n : v) {
      auto [it, fresh] = owner.emplace(n, cat);
      if (!fresh) {
        Warn(warnings, "noun '" + n + "' appears in both '" + it->second + "' and '" + cat +
                           "'; the first category wins");
      }
    }
  };
  check_disjoint(data.person_nouns, "person_nouns");
  check_disjoint(data.animal_nouns, "animal_nouns");
  check_disjoint(data.object_nouns, "object_nouns");
  check_disjoint(data.occupations, "occupations");

  return Lexicon(std::move(data));
}

Lexicon LoadLexiconFile(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open lexicon file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return LoadLexicon(ss.str(), warnings);
}

std::string DataDir() {
  if (const char* env = std::getenv("PROMPTLENS_DATA_DIR"); env && *env) return env;
  return PROMPTLENS_DEFAULT_DATA_DIR;
}

std::string DefaultLexiconPath() { return DataDir() + "/lexicon/default.json"; }

}  // namespace promptlens::grammar
