#include "promptlens/grammar/grammar.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <functional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "promptlens/common/error.h"
#include "promptlens/common/rng.h"
#include "promptlens/common/text.h"

namespace promptlens::grammar {

namespace {

using Kind = PatternElement::Kind;

bool IsPunctChar(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '?' || c == '!';
}

bool IsPunctToken(const std::string& t) { return t.size() == 1 && IsPunctChar(t[0]); }

bool StartsWithVowel(const std::string& word) {
  if (word.empty()) return false;
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(word[0])));
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Joins rendered tokens: punctuation attaches to the previous token and "{a}"
// markers resolve against the following token.
std::string JoinRendered(std::vector<std::string> tokens) {
  static const std::string kArticleMarker = "\x01";
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != kArticleMarker) continue;
    const std::string next = i + 1 < tokens.size() ? tokens[i + 1] : std::string();
    tokens[i] = StartsWithVowel(next) ? "an" : "a";
  }
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty() && !IsPunctToken(t)) out += ' ';
    out += t;
  }
  return out;
}

void CollectGroupSlots(const std::vector<PatternElement>& elems, std::vector<std::string>& out) {
  for (const auto& e : elems) {
    if (e.kind == Kind::kSlot) out.push_back(e.text);
    if (e.kind == Kind::kGroup) CollectGroupSlots(e.children, out);
  }
}

// Flattened pattern: each optional group is either spliced in or dropped.
// Alternatives with more groups included come first.
std::vector<std::vector<PatternElement>> Expand(const std::vector<PatternElement>& pattern) {
  std::vector<std::vector<PatternElement>> alts(1);
  for (const auto& e : pattern) {
    if (e.kind != Kind::kGroup) {
      for (auto& a : alts) a.push_back(e);
      continue;
    }
    std::vector<std::vector<PatternElement>> next;
    for (const auto& inner : Expand(e.children)) {
      for (const auto& a : alts) {
        auto with = a;
        with.insert(with.end(), inner.begin(), inner.end());
        next.push_back(std::move(with));
      }
    }
    for (const auto& a : alts) next.push_back(a);
    alts = std::move(next);
  }
  return alts;
}

enum IndexKey {
  kIdxAgent,
  kIdxEntity,
  kIdxThing,
  kIdxVerbThird,
  kIdxVerbBase,
  kIdxVerbParticiple,
  kIdxAdjective,
  kIdxPreposition,
  kIdxActivity,
  kIdxOccupation,
  kIdxCapability,
  kIdxMaterial,
  kIdxCompound,
  kIdxCount,
};

IndexKey KeyFor(const SlotSpec& slot) {
  switch (slot.category) {
    case SlotCategory::kAgent: return kIdxAgent;
    case SlotCategory::kEntity: return kIdxEntity;
    case SlotCategory::kThing: return kIdxThing;
    case SlotCategory::kVerb:
      switch (slot.form) {
        case VerbForm::kThird: return kIdxVerbThird;
        case VerbForm::kBase: return kIdxVerbBase;
        case VerbForm::kParticiple: return kIdxVerbParticiple;
      }
      break;
    case SlotCategory::kAdjective: return kIdxAdjective;
    case SlotCategory::kPreposition: return kIdxPreposition;
    case SlotCategory::kActivity: return kIdxActivity;
    case SlotCategory::kOccupation: return kIdxOccupation;
    case SlotCategory::kCapability: return kIdxCapability;
    case SlotCategory::kMaterial: return kIdxMaterial;
    case SlotCategory::kCompound: return kIdxCompound;
  }
  return kIdxEntity;
}

bool IsNounSlot(const SlotSpec& s) {
  return s.category == SlotCategory::kAgent || s.category == SlotCategory::kEntity ||
         s.category == SlotCategory::kThing;
}

}  // namespace

struct Grammar::Index {
  struct Candidate {
    std::vector<std::string> tokens;
    std::string value;
  };
  // Candidates keyed by first token, longest first.
  using Table = std::unordered_map<std::string, std::vector<Candidate>>;
  std::array<Table, kIdxCount> tables;
  std::vector<std::vector<std::string>> decorations;
  std::unordered_map<std::string, std::string> decoration_by_tokens;
  std::unordered_set<std::string> prepositions, activities, occupations, materials;
  std::unordered_set<std::string> decoration_set;

  void Add(IndexKey key, const std::string& value) {
    Candidate c{SentenceTokens(value), value};
    if (c.tokens.empty()) return;
    auto& list = tables[key][c.tokens.front()];
    for (const auto& existing : list) {
      if (existing.value == value) return;
    }
    list.push_back(std::move(c));
  }

  void Finish() {
    for (auto& table : tables) {
      for (auto& [first, list] : table) {
        std::stable_sort(list.begin(), list.end(), [](const Candidate& a, const Candidate& b) {
          return a.tokens.size() > b.tokens.size();
        });
      }
    }
  }
};

std::vector<std::string> SentenceTokens(std::string_view sentence) {
  std::vector<std::string> out;
  for (const std::string& raw : text::SplitWhitespace(text::Lower(sentence))) {
    size_t b = 0, e = raw.size();
    std::vector<std::string> trailing;
    while (b < e && IsPunctChar(raw[b])) out.emplace_back(1, raw[b++]);
    while (e > b && IsPunctChar(raw[e - 1])) trailing.emplace_back(1, raw[--e]);
    if (e > b) out.push_back(raw.substr(b, e - b));
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  }
  return out;
}

std::vector<std::string> ContentWords(std::string_view text, const Lexicon& lexicon,
                                      bool keep_negation) {
  static const std::set<std::string> kStop = {"is", "are", "does", "do", "the", "a", "an"};
  std::vector<std::string> out;
  for (const auto& t : SentenceTokens(text)) {
    if (IsPunctToken(t) || kStop.count(t)) continue;
    if (t == "not" && !keep_negation) continue;
    out.push_back(lexicon.LemmaOf(t));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Grammar::Grammar(std::shared_ptr<const Lexicon> lexicon)
    : Grammar(std::move(lexicon), BuiltinTemplates()) {}

Grammar::Grammar(std::shared_ptr<const Lexicon> lexicon, std::vector<Template> templates)
    : lexicon_(std::move(lexicon)), templates_(std::move(templates)),
      index_(std::make_unique<Index>()) {
  if (!lexicon_) throw Error(ErrorCode::kInvalidArgument, "grammar needs a lexicon");
  const LexiconData& d = lexicon_->data();
  Index& ix = *index_;
  // Category membership follows Lexicon::KindOf so a noun listed twice lands
  // only where its first category puts it.
  auto add_noun = [&](const std::string& n) {
    auto kind = lexicon_->KindOf(n);
    if (!kind) return;
    ix.Add(kIdxEntity, n);
    if (*kind != NounKind::kObject) ix.Add(kIdxAgent, n);
    if (*kind == NounKind::kAnimal || *kind == NounKind::kObject) ix.Add(kIdxThing, n);
  };
  for (const auto* list : {&d.person_nouns, &d.animal_nouns, &d.object_nouns, &d.occupations}) {
    for (const auto& n : *list) add_noun(n);
  }
  for (const auto& v : d.transitive_verbs) {
    ix.Add(kIdxVerbThird, v.third);
    ix.Add(kIdxVerbBase, v.base);
    ix.Add(kIdxVerbParticiple, v.participle);
  }
  for (const auto& a : d.adjectives) ix.Add(kIdxAdjective, a.word);
  for (const auto& p : d.prepositions) {
    ix.Add(kIdxPreposition, p);
    ix.prepositions.insert(p);
  }
  for (const auto& a : d.activities) {
    ix.Add(kIdxActivity, a);
    ix.activities.insert(a);
  }
  for (const auto& o : d.occupations) {
    if (lexicon_->KindOf(o) == NounKind::kOccupation) ix.Add(kIdxOccupation, o);
    ix.occupations.insert(o);
  }
  for (const auto& c : lexicon_->AllCapabilities()) ix.Add(kIdxCapability, c);
  for (const auto& m : d.materials) {
    ix.Add(kIdxMaterial, m);
    ix.materials.insert(m);
  }
  for (const auto& c : lexicon_->CompoundPhrases()) ix.Add(kIdxCompound, c);
  for (const auto& dec : d.decorations) {
    auto toks = SentenceTokens(dec);
    ix.decoration_by_tokens.emplace(text::Join(toks, " "), dec);
    ix.decoration_set.insert(dec);
  }
  ix.Finish();
}

Grammar::~Grammar() = default;

const Template* Grammar::FindTemplate(std::string_view id) const {
  for (const auto& t : templates_) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

std::vector<const Template*> Grammar::TemplatesOf(AmbiguityType type) const {
  std::vector<const Template*> out;
  for (const auto& t : templates_) {
    if (t.ambiguity_type == type) out.push_back(&t);
  }
  return out;
}

bool Grammar::LexemeFits(const SlotSpec& slot, const std::string& value,
                         bool linguistic) const {
  const Lexicon& lx = *lexicon_;
  auto kind = lx.KindOf(value);
  switch (slot.category) {
    case SlotCategory::kAgent:
      return kind && (*kind == NounKind::kPerson || *kind == NounKind::kAnimal ||
                      (*kind == NounKind::kOccupation && linguistic));
    case SlotCategory::kEntity:
      return kind && (*kind != NounKind::kOccupation || linguistic);
    case SlotCategory::kThing:
      return kind && (*kind == NounKind::kAnimal || *kind == NounKind::kObject);
    case SlotCategory::kVerb: {
      const VerbEntry* v = lx.FindVerb(value);
      if (!v) return false;
      switch (slot.form) {
        case VerbForm::kThird: return v->third == value;
        case VerbForm::kBase: return v->base == value;
        case VerbForm::kParticiple: return v->participle == value;
      }
      return false;
    }
    case SlotCategory::kAdjective: return lx.FindAdjective(value) != nullptr;
    case SlotCategory::kPreposition: return index_->prepositions.count(value) > 0;
    case SlotCategory::kActivity: return index_->activities.count(value) > 0;
    case SlotCategory::kOccupation: return index_->occupations.count(value) > 0;
    case SlotCategory::kCapability: return lx.IsKnownCapability(value);
    case SlotCategory::kMaterial: return index_->materials.count(value) > 0;
    case SlotCategory::kCompound: return lx.SplitCompound(value).has_value();
  }
  return false;
}

void Grammar::CheckBindings(const Template& tmpl, const Bindings& bindings) const {
  const bool linguistic = IsLinguistic(tmpl.ambiguity_type);
  for (const auto& [slot, value] : bindings) {
    if (slot == kDecorationSlot) {
      if (!index_->decoration_set.count(value)) {
        throw Error(ErrorCode::kInvalidArgument, "unknown decoration '" + value + "'");
      }
      continue;
    }
    const SlotSpec* spec = tmpl.FindSlot(slot);
    if (!spec) {
      throw Error(ErrorCode::kInvalidArgument,
                  "template " + tmpl.id + " has no slot " + slot);
    }
    if (!LexemeFits(*spec, value, linguistic)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "'" + value + "' does not fit slot " + slot + " of template " + tmpl.id);
    }
  }
  for (const auto& spec : tmpl.slots) {
    if (!bindings.count(spec.name) && !tmpl.IsOptional(spec.name)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "missing binding for slot " + spec.name + " of template " + tmpl.id);
    }
  }
}

std::string Grammar::RenderForm(const Template& tmpl, const std::vector<PatternElement>& form,
                                const Bindings& bindings) const {
  std::vector<std::string> tokens;
  std::function<void(const std::vector<PatternElement>&)> emit =
      [&](const std::vector<PatternElement>& elems) {
        for (const auto& e : elems) {
          switch (e.kind) {
            case Kind::kLiteral: tokens.push_back(e.text); break;
            case Kind::kArticle: tokens.emplace_back("\x01"); break;
            case Kind::kGroup: {
              std::vector<std::string> inner;
              CollectGroupSlots(e.children, inner);
              const bool bound = std::all_of(inner.begin(), inner.end(), [&](const auto& s) {
                return bindings.count(s) > 0;
              });
              if (bound) emit(e.children);
              break;
            }
            case Kind::kSlot: {
              auto it = bindings.find(e.text);
              if (it == bindings.end()) {
                throw Error(ErrorCode::kInvalidArgument,
                            "template " + tmpl.id + ": unbound slot " + e.text);
              }
              const std::string& v = it->second;
              if (e.form.empty()) {
                tokens.push_back(v);
              } else if (e.form == "ing" || e.form == "base") {
                const VerbEntry* verb = lexicon_->FindVerb(v);
                if (!verb) throw Error(ErrorCode::kInvalidArgument, "'" + v + "' is not a verb");
                tokens.push_back(e.form == "ing" ? verb->participle : verb->base);
              } else if (e.form == "mod" || e.form == "head") {
                auto parts = lexicon_->SplitCompound(v);
                if (!parts) {
                  throw Error(ErrorCode::kInvalidArgument, "'" + v + "' is not a compound");
                }
                tokens.push_back(e.form == "mod" ? parts->first : parts->second);
              } else {
                throw Error(ErrorCode::kInvalidArgument, "unknown slot form '" + e.form + "'");
              }
              break;
            }
          }
        }
      };

  auto decor = bindings.find(std::string(kDecorationSlot));
  if (decor != bindings.end() && &form == &tmpl.pattern) {
    if (tmpl.HasClosingPeriod()) {
      std::vector<PatternElement> body(form.begin(), form.end() - 1);
      emit(body);
      tokens.push_back(decor->second);
      tokens.emplace_back(".");
    } else {
      emit(form);
      tokens.push_back(decor->second);
    }
  } else {
    emit(form);
  }
  return JoinRendered(std::move(tokens));
}

std::string Grammar::RenderSurface(const Template& tmpl, const Bindings& bindings) const {
  return text::CapitalizeFirst(RenderForm(tmpl, tmpl.pattern, bindings));
}

AmbiguousPrompt Grammar::Instantiate(const Template& tmpl, const Bindings& bindings) const {
  CheckBindings(tmpl, bindings);
  AmbiguousPrompt p;
  p.text = RenderSurface(tmpl, bindings);
  p.ambiguity_type = tmpl.ambiguity_type;
  p.template_id = tmpl.id;
  p.bindings = bindings;
  p.complexity = bindings.count(std::string(kDecorationSlot)) ? Complexity::kComplex
                                                              : Complexity::kSimple;
  if (IsLinguistic(tmpl.ambiguity_type)) {
    for (const auto& spec : tmpl.slots) {
      auto it = bindings.find(spec.name);
      if (it != bindings.end() && IsNounSlot(spec) &&
          lexicon_->KindOf(it->second) == NounKind::kOccupation) {
        p.is_combination = true;
      }
    }
  }
  return p;
}

AmbiguousPrompt Grammar::Instantiate(std::string_view template_id,
                                     const Bindings& bindings) const {
  const Template* t = FindTemplate(template_id);
  if (!t) throw Error(ErrorCode::kNotFound, "unknown template '" + std::string(template_id) + "'");
  return Instantiate(*t, bindings);
}

std::vector<Interpretation> Grammar::Enumerate(const AmbiguousPrompt& prompt) const {
  const Template* tmpl = FindTemplate(prompt.template_id);
  if (!tmpl) throw Error(ErrorCode::kNotFound, "unknown template '" + prompt.template_id + "'");

  std::vector<InterpretationRule> rules;
  for (const auto& r : tmpl->rules) {
    if (!r.when || r.when->Holds(prompt.bindings)) rules.push_back(r);
  }
  if (IsLinguistic(tmpl->ambiguity_type)) {
    std::set<std::string> seen;
    for (const auto& spec : tmpl->slots) {
      auto it = prompt.bindings.find(spec.name);
      if (it == prompt.bindings.end() || !IsNounSlot(spec) ||
          lexicon_->KindOf(it->second) != NounKind::kOccupation ||
          !seen.insert(it->second).second) {
        continue;
      }
      for (auto& r : FairnessRules("{" + spec.name + "}")) rules.push_back(std::move(r));
    }
  }

  std::vector<Interpretation> out;
  for (const auto& r : rules) {
    Interpretation in;
    in.index = static_cast<int>(out.size());
    in.setup_text = RenderForm(*tmpl, ParsePattern(r.setup_form), prompt.bindings);
    in.question_text = RenderForm(*tmpl, ParsePattern(r.question_form), prompt.bindings);
    in.cs_label = r.cs_hint == CsHint::kUCS ? CsLabel::kUCS : CsLabel::kCS;
    if (r.cs_hint == CsHint::kContextDependent) {
      auto subj = prompt.bindings.find(r.cs_subject_slot);
      auto cap = prompt.bindings.find(r.cs_capability_slot);
      if (subj != prompt.bindings.end() && cap != prompt.bindings.end() &&
          lexicon_->IsKnownCapability(cap->second) &&
          !lexicon_->CapabilitiesOf(subj->second).count(cap->second)) {
        in.cs_label = CsLabel::kUCS;
      }
    }
    out.push_back(std::move(in));
  }
  return out;
}

BenchmarkRecord Grammar::MakeRecord(const AmbiguousPrompt& prompt) const {
  return BenchmarkRecord{prompt, Enumerate(prompt)};
}

void Grammar::MatchTemplate(const Template& tmpl, const std::vector<std::string>& tokens,
                            std::vector<Detection>& out, bool first_only) const {
  std::vector<PatternElement> body = tmpl.pattern;
  if (tmpl.HasClosingPeriod()) body.pop_back();
  const bool linguistic = IsLinguistic(tmpl.ambiguity_type);
  const Index& ix = *index_;

  for (const auto& flat : Expand(body)) {
    Bindings bindings;
    bool done = false;
    std::function<void(size_t, size_t)> step = [&](size_t i, size_t pos) {
      if (done) return;
      if (i == flat.size()) {
        std::string decoration;
        if (pos < tokens.size()) {
          std::vector<std::string> rest(tokens.begin() + pos, tokens.end());
          auto it = ix.decoration_by_tokens.find(text::Join(rest, " "));
          if (it == ix.decoration_by_tokens.end()) return;
          decoration = it->second;
        }
        Detection d;
        d.ambiguity_type = tmpl.ambiguity_type;
        d.template_id = tmpl.id;
        d.bindings = bindings;
        if (!decoration.empty()) {
          d.bindings[std::string(kDecorationSlot)] = decoration;
          d.complexity = Complexity::kComplex;
        }
        if (linguistic) {
          for (const auto& spec : tmpl.slots) {
            auto b = d.bindings.find(spec.name);
            if (b != d.bindings.end() && IsNounSlot(spec) &&
                lexicon_->KindOf(b->second) == NounKind::kOccupation) {
              d.is_combination = true;
            }
          }
        }
        out.push_back(std::move(d));
        done = first_only;
        return;
      }
      if (pos >= tokens.size()) return;
      const PatternElement& e = flat[i];
      switch (e.kind) {
        case Kind::kLiteral:
          if (tokens[pos] == text::Lower(e.text)) step(i + 1, pos + 1);
          return;
        case Kind::kArticle:
          if (tokens[pos] == "a" || tokens[pos] == "an") step(i + 1, pos + 1);
          return;
        case Kind::kGroup:
          return;  // removed by Expand
        case Kind::kSlot: {
          const SlotSpec* spec = tmpl.FindSlot(e.text);
          if (!spec) return;
          const auto& table = ix.tables[KeyFor(*spec)];
          auto it = table.find(tokens[pos]);
          if (it == table.end()) return;
          for (const auto& cand : it->second) {
            if (pos + cand.tokens.size() > tokens.size()) continue;
            if (!std::equal(cand.tokens.begin(), cand.tokens.end(), tokens.begin() + pos)) {
              continue;
            }
            if (!LexemeFits(*spec, cand.value, linguistic)) continue;
            bindings[spec->name] = cand.value;
            step(i + 1, pos + cand.tokens.size());
            bindings.erase(spec->name);
            if (done) return;
          }
          return;
        }
      }
    };
    step(0, 0);
    if (done) return;
  }
}

std::vector<Detection> Grammar::DetectAll(std::string_view sentence) const {
  std::vector<std::string> tokens = SentenceTokens(sentence);
  if (!tokens.empty() && tokens.back() == ".") tokens.pop_back();
  std::vector<Detection> out;
  if (tokens.empty()) return out;
  for (const auto& t : templates_) {
    std::vector<Detection> found;
    MatchTemplate(t, tokens, found, true);
    for (auto& d : found) out.push_back(std::move(d));
  }
  return out;
}

std::optional<Detection> Grammar::Detect(std::string_view sentence) const {
  std::vector<std::string> tokens = SentenceTokens(sentence);
  if (!tokens.empty() && tokens.back() == ".") tokens.pop_back();
  if (tokens.empty()) return std::nullopt;
  for (const auto& t : templates_) {
    std::vector<Detection> found;
    MatchTemplate(t, tokens, found, true);
    if (!found.empty()) return std::move(found.front());
  }
  return std::nullopt;
}

AmbiguousPrompt Grammar::Parse(std::string_view sentence, std::string id) const {
  auto d = Detect(sentence);
  if (!d) {
    throw Error(ErrorCode::kUndefined,
                "no template matches '" + std::string(sentence) + "'");
  }
  AmbiguousPrompt p = Instantiate(d->template_id, d->bindings);
  p.id = std::move(id);
  return p;
}

AmbiguousPrompt Grammar::Complexify(const AmbiguousPrompt& prompt, uint64_t seed) const {
  if (prompt.complexity == Complexity::kComplex) {
    throw Error(ErrorCode::kFailedPrecondition, "prompt '" + prompt.text + "' is already complex");
  }
  const auto& decorations = lexicon_->data().decorations;
  if (decorations.empty()) {
    spdlog::warn("lexicon has no decorations; '{}' left simple", prompt.text);
    return prompt;
  }
  const Template* tmpl = FindTemplate(prompt.template_id);
  if (!tmpl) throw Error(ErrorCode::kNotFound, "unknown template '" + prompt.template_id + "'");
  Rng rng(seed, prompt.text);
  AmbiguousPrompt out = prompt;
  out.bindings[std::string(kDecorationSlot)] = decorations[rng.UniformIndex(decorations.size())];
  out.text = RenderSurface(*tmpl, out.bindings);
  out.complexity = Complexity::kComplex;
  return out;
}

std::vector<std::string> Grammar::PersonSlots(const AmbiguousPrompt& prompt) const {
  std::vector<std::string> out;
  const Template* tmpl = FindTemplate(prompt.template_id);
  if (!tmpl) return out;
  for (const auto& spec : tmpl->slots) {
    auto it = prompt.bindings.find(spec.name);
    if (it != prompt.bindings.end() && IsNounSlot(spec) &&
        lexicon_->KindOf(it->second) == NounKind::kPerson) {
      out.push_back(spec.name);
    }
  }
  return out;
}

AmbiguousPrompt Grammar::CombineFairness(const AmbiguousPrompt& prompt, uint64_t seed) const {
  if (!IsLinguistic(prompt.ambiguity_type)) {
    throw Error(ErrorCode::kFailedPrecondition,
                "only linguistic prompts can be combined with fairness");
  }
  if (prompt.is_combination) {
    throw Error(ErrorCode::kFailedPrecondition, "prompt '" + prompt.text +
                                                    "' is already a combination prompt");
  }
  const Template* tmpl = FindTemplate(prompt.template_id);
  if (!tmpl) throw Error(ErrorCode::kNotFound, "unknown template '" + prompt.template_id + "'");
  const std::vector<std::string> slots = PersonSlots(prompt);
  if (slots.empty()) {
    throw Error(ErrorCode::kFailedPrecondition,
                "prompt '" + prompt.text + "' has no person noun to replace");
  }

  std::set<std::string> used;
  for (const auto& [k, v] : prompt.bindings) used.insert(v);
  std::vector<std::string> pool;
  for (const auto& o : lexicon_->data().occupations) {
    if (lexicon_->KindOf(o) == NounKind::kOccupation && !used.count(o)) pool.push_back(o);
  }
  if (pool.size() < slots.size()) {
    throw Error(ErrorCode::kExhausted, "not enough occupations to combine '" + prompt.text + "'");
  }
  Rng rng(seed, prompt.text);
  AmbiguousPrompt out = prompt;
  for (const auto& slot : slots) {
    const size_t k = rng.UniformIndex(pool.size());
    out.bindings[slot] = pool[k];
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
  }
  out.text = RenderSurface(*tmpl, out.bindings);
  out.is_combination = true;
  return out;
}

}  // namespace promptlens::grammar
