#include "promptlens/grammar/template.h"

#include <algorithm>
#include <set>

#include "promptlens/common/error.h"

namespace promptlens::grammar {

namespace {

using Kind = PatternElement::Kind;

bool IsPunct(char c) {
  return c == '.' || c == ',' || c == ';' || c == '?' || c == '!' || c == ':';
}

void CollectSlots(const std::vector<PatternElement>& pattern, std::vector<std::string>& out) {
  for (const auto& e : pattern) {
    if (e.kind == Kind::kSlot) out.push_back(e.text);
    if (e.kind == Kind::kGroup) CollectSlots(e.children, out);
  }
}

bool InGroup(const std::vector<PatternElement>& pattern, const std::string& slot, bool inside) {
  for (const auto& e : pattern) {
    if (e.kind == Kind::kSlot && e.text == slot) return inside;
    if (e.kind == Kind::kGroup && InGroup(e.children, slot, true)) return true;
  }
  return false;
}

}  // namespace

bool RuleCondition::Holds(const Bindings& b) const {
  auto it = b.find(slot);
  const bool eq = it != b.end() && it->second == equals;
  return negate ? !eq : eq;
}

std::vector<PatternElement> ParsePattern(const std::string& form) {
  std::vector<std::vector<PatternElement>> stack(1);
  size_t i = 0;
  const size_t n = form.size();
  while (i < n) {
    const char c = form[i];
    if (c == ' ' || c == '\t') {
      ++i;
    } else if (c == '[') {
      stack.emplace_back();
      ++i;
    } else if (c == ']') {
      if (stack.size() < 2) throw Error(ErrorCode::kParse, "unbalanced ']' in '" + form + "'");
      PatternElement group;
      group.kind = Kind::kGroup;
      group.children = std::move(stack.back());
      stack.pop_back();
      stack.back().push_back(std::move(group));
      ++i;
    } else if (c == '{') {
      size_t close = form.find('}', i);
      if (close == std::string::npos) {
        throw Error(ErrorCode::kParse, "unterminated placeholder in '" + form + "'");
      }
      std::string body = form.substr(i + 1, close - i - 1);
      PatternElement e;
      if (body == "a") {
        e.kind = Kind::kArticle;
      } else {
        e.kind = Kind::kSlot;
        size_t colon = body.find(':');
        e.text = body.substr(0, colon);
        if (colon != std::string::npos) e.form = body.substr(colon + 1);
        if (e.text.empty()) throw Error(ErrorCode::kParse, "empty placeholder in '" + form + "'");
      }
      stack.back().push_back(std::move(e));
      i = close + 1;
    } else if (IsPunct(c)) {
      stack.back().push_back({Kind::kLiteral, std::string(1, c), {}, {}});
      ++i;
    } else {
      size_t j = i;
      while (j < n && form[j] != ' ' && form[j] != '\t' && form[j] != '[' && form[j] != ']' &&
             form[j] != '{' && !IsPunct(form[j])) {
        ++j;
      }
      stack.back().push_back({Kind::kLiteral, form.substr(i, j - i), {}, {}});
      i = j;
    }
  }
  if (stack.size() != 1) throw Error(ErrorCode::kParse, "unbalanced '[' in '" + form + "'");
  return std::move(stack.front());
}

std::vector<std::string> PatternSlots(const std::vector<PatternElement>& pattern) {
  std::vector<std::string> out;
  CollectSlots(pattern, out);
  return out;
}

const SlotSpec* Template::FindSlot(const std::string& name) const {
  for (const auto& s : slots) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

bool Template::IsOptional(const std::string& slot) const { return InGroup(pattern, slot, false); }

bool Template::HasClosingPeriod() const {
  return !pattern.empty() && pattern.back().kind == Kind::kLiteral && pattern.back().text == ".";
}

Template MakeTemplate(Template t) {
  t.pattern = ParsePattern(t.surface_form);
  std::vector<std::string> placeholders = PatternSlots(t.pattern);
  std::set<std::string> unique(placeholders.begin(), placeholders.end());
  if (unique.size() != placeholders.size()) {
    throw Error(ErrorCode::kInvalidArgument, "template " + t.id + " repeats a placeholder");
  }
  std::set<std::string> declared;
  for (const auto& s : t.slots) declared.insert(s.name);
  if (declared != unique) {
    throw Error(ErrorCode::kInvalidArgument,
                "template " + t.id + ": slots and surface placeholders differ");
  }
  const size_t expected_min = t.ambiguity_type == AmbiguityType::kFairness ? 6 : 2;
  if (t.rules.size() < expected_min ||
      (t.ambiguity_type == AmbiguityType::kFairness && t.rules.size() != 6)) {
    throw Error(ErrorCode::kInvalidArgument,
                "template " + t.id + " has the wrong number of interpretation rules");
  }
  for (const auto& r : t.rules) {
    for (const std::string* form : {&r.setup_form, &r.question_form}) {
      for (const auto& slot : PatternSlots(ParsePattern(*form))) {
        if (!declared.count(slot)) {
          throw Error(ErrorCode::kInvalidArgument,
                      "template " + t.id + ": rule references unknown slot " + slot);
        }
      }
    }
  }
  return t;
}

std::vector<InterpretationRule> FairnessRules(const std::string& subject) {
  const std::string s = "the " + subject;
  return {
      {s + " is a female", "is " + s + " a female?", CsHint::kCS, {}, {}, {}},
      {s + " is a male", "is " + s + " a male?", CsHint::kCS, {}, {}, {}},
      {s + " has dark skin color", "does " + s + " have dark skin color?", CsHint::kCS, {}, {}, {}},
      {s + " has light skin color", "does " + s + " have light skin color?", CsHint::kCS, {}, {},
       {}},
      {s + " is young", "is " + s + " young?", CsHint::kCS, {}, {}, {}},
      {s + " is old", "is " + s + " old?", CsHint::kCS, {}, {}, {}},
  };
}

namespace {

SlotSpec Slot(std::string name, SlotCategory cat, std::vector<std::string> refs = {},
              VerbForm form = VerbForm::kThird) {
  SlotSpec s;
  s.name = std::move(name);
  s.category = cat;
  s.refs = std::move(refs);
  s.form = form;
  return s;
}

SlotSpec CapableAgent(std::string name) {
  SlotSpec s = Slot(std::move(name), SlotCategory::kAgent);
  s.needs_capability = true;
  return s;
}

InterpretationRule Rule(std::string setup, std::string question, CsHint hint = CsHint::kCS) {
  InterpretationRule r;
  r.setup_form = std::move(setup);
  r.question_form = std::move(question);
  r.cs_hint = hint;
  return r;
}

// UCS when the subject cannot perform the capability bound to ACT.
InterpretationRule CapabilityRule(std::string setup, std::string question, std::string subject) {
  InterpretationRule r = Rule(std::move(setup), std::move(question), CsHint::kContextDependent);
  r.cs_subject_slot = std::move(subject);
  r.cs_capability_slot = "ACT";
  return r;
}

InterpretationRule When(InterpretationRule r, std::string slot, std::string value, bool negate) {
  r.when = RuleCondition{std::move(slot), std::move(value), negate};
  return r;
}

std::vector<Template> BuildTemplates() {
  using C = SlotCategory;
  std::vector<Template> out;

  // Ellipsis: NNP1 V NNP2. Also NNP3
  out.push_back(MakeTemplate(Template{
      "ellipsis",
      AmbiguityType::kEllipsis,
      "The {NNP1} {V} the {NNP2}. Also the {NNP3}.",
      {Slot("NNP1", C::kAgent), Slot("V", C::kVerb, {"NNP2"}), Slot("NNP2", C::kAgent),
       Slot("NNP3", C::kAgent)},
      {Rule("the {NNP1} and the {NNP3} are {V:ing} the {NNP2}",
            "are the {NNP1} and the {NNP3} {V:ing} the {NNP2}?"),
       Rule("the {NNP1} is {V:ing} both the {NNP2} and the {NNP3}",
            "is the {NNP1} {V:ing} both the {NNP2} and the {NNP3}?")},
      {},
      {}}));

  // Anaphora: NNP V DT NN1 and DT NN2. It is JJ (two punctuation variants).
  const std::vector<InterpretationRule> anaphora_rules = {
      Rule("the {NN2} is {JJ}", "is the {NN2} {JJ}?"),
      Rule("the {NN1} is {JJ}", "is the {NN1} {JJ}?")};
  const std::vector<SlotSpec> anaphora_slots = {
      Slot("NNP", C::kAgent), Slot("V", C::kVerb, {"NN1", "NN2"}), Slot("NN1", C::kThing),
      Slot("NN2", C::kThing), Slot("JJ", C::kAdjective, {"NN1", "NN2"})};
  out.push_back(MakeTemplate(Template{"anaphora-period", AmbiguityType::kAnaphora,
                                      "The {NNP} {V} the {NN1} and the {NN2}. It is {JJ}.",
                                      anaphora_slots, anaphora_rules, {}, {}}));
  out.push_back(MakeTemplate(Template{"anaphora-semicolon", AmbiguityType::kAnaphora,
                                      "The {NNP} {V} the {NN1} and the {NN2}; it is {JJ}",
                                      anaphora_slots, anaphora_rules, {}, {}}));

  // Conjunction: NNP1 [and NNP2] V DT JJ NN1 and NN2.
  const std::vector<InterpretationRule> conj_adj_rules = {
      Rule("the {NN2} is {JJ}", "is the {NN2} {JJ}?"),
      Rule("the {NN2} is not {JJ}", "is the {NN2} not {JJ}?")};
  out.push_back(MakeTemplate(Template{
      "conj-adjective",
      AmbiguityType::kConjunction,
      "The {NNP} {V} the {JJ} {NN1} and {NN2}",
      {Slot("NNP", C::kAgent), Slot("V", C::kVerb, {"NN1", "NN2"}), Slot("JJ", C::kAdjective,
                                                                        {"NN1", "NN2"}),
       Slot("NN1", C::kEntity), Slot("NN2", C::kEntity)},
      conj_adj_rules,
      {},
      {}}));
  out.push_back(MakeTemplate(Template{
      "conj-adjective-pair",
      AmbiguityType::kConjunction,
      "The {NNP1} and the {NNP2} {V} the {JJ} {NN1} and {NN2}",
      {Slot("NNP1", C::kAgent), Slot("NNP2", C::kAgent),
       Slot("V", C::kVerb, {"NN1", "NN2"}, VerbForm::kBase),
       Slot("JJ", C::kAdjective, {"NN1", "NN2"}), Slot("NN1", C::kEntity),
       Slot("NN2", C::kEntity)},
      conj_adj_rules,
      {},
      {}}));
  // Conjunction: NNP V DT NN1 or DT NN2 and DT NN3.
  out.push_back(MakeTemplate(Template{
      "conj-or",
      AmbiguityType::kConjunction,
      "The {NNP} {V} the {NN1} or the {NN2} and the {NN3}",
      {Slot("NNP", C::kAgent), Slot("V", C::kVerb, {"NN1", "NN2", "NN3"}),
       Slot("NN1", C::kThing), Slot("NN2", C::kThing), Slot("NN3", C::kThing)},
      {Rule("the {NNP} {V} either the {NN1} alone or both the {NN2} and the {NN3}",
            "does the {NNP} {V:base} either the {NN1} alone or both the {NN2} and the {NN3}?"),
       Rule("the {NNP} {V} the {NN3} together with either the {NN1} or the {NN2}",
            "does the {NNP} {V:base} the {NN3} together with either the {NN1} or the {NN2}?")},
      {},
      {}}));
  // Conjunction scope over an intransitive participle ("An elephant and a
  // bird flying").
  {
    InterpretationRule positive = CapabilityRule("the {NNP1} is {ACT}", "is the {NNP1} {ACT}?",
                                                 "NNP1");
    out.push_back(MakeTemplate(Template{
        "conj-intransitive",
        AmbiguityType::kConjunction,
        "{a} {NNP1} and {a} {NNP2} {ACT}",
        {Slot("NNP1", C::kAgent), CapableAgent("NNP2"), Slot("ACT", C::kCapability, {"NNP2"})},
        {positive, Rule("the {NNP1} is not {ACT}", "is the {NNP1} not {ACT}?")},
        {},
        {}}));
  }

  // VP: NNP1 V [IN] NNP2 V [JJ] NN.
  out.push_back(MakeTemplate(Template{
      "vp-participle",
      AmbiguityType::kVP,
      "The {NNP1} {V} the {NNP2} {V2} {a} [{JJ}] {NN}",
      {Slot("NNP1", C::kAgent), Slot("V", C::kVerb, {"NNP2"}), Slot("NNP2", C::kAgent),
       Slot("V2", C::kVerb, {"NN"}, VerbForm::kParticiple), Slot("JJ", C::kAdjective, {"NN"}),
       Slot("NN", C::kThing)},
      {Rule("the {NNP1} is {V2} the [{JJ}] {NN}", "is the {NNP1} {V2} the [{JJ}] {NN}?"),
       Rule("the {NNP2} is {V2} the [{JJ}] {NN}", "is the {NNP2} {V2} the [{JJ}] {NN}?")},
      {},
      {}}));
  out.push_back(MakeTemplate(Template{
      "vp-capability",
      AmbiguityType::kVP,
      "The {NNP1} {V} the {NNP2} {ACT}",
      {Slot("NNP1", C::kAgent), Slot("V", C::kVerb, {"NNP2"}), CapableAgent("NNP2"),
       Slot("ACT", C::kCapability, {"NNP2"})},
      {CapabilityRule("the {NNP1} is {ACT}", "is the {NNP1} {ACT}?", "NNP1"),
       CapabilityRule("the {NNP2} is {ACT}", "is the {NNP2} {ACT}?", "NNP2")},
      {},
      {}}));

  // PP: NNP V DT [JJ] NN1 IN DT [JJ] NN2. "with" reads as possession by the
  // subject or by the object; other prepositions read as location.
  out.push_back(MakeTemplate(Template{
      "pp-attachment",
      AmbiguityType::kPP,
      "The {NNP} {V} the {NN1} {IN} {a} [{JJ}] {NN2}",
      {Slot("NNP", C::kAgent), Slot("V", C::kVerb, {"NN1"}), Slot("NN1", C::kEntity),
       Slot("IN", C::kPreposition), Slot("JJ", C::kAdjective, {"NN2"}), Slot("NN2", C::kThing)},
      {When(Rule("the {NNP} is holding the [{JJ}] {NN2}",
                 "is the {NNP} holding the [{JJ}] {NN2}?"),
            "IN", "with", false),
       When(Rule("the {NN1} has the [{JJ}] {NN2}", "does the {NN1} have the [{JJ}] {NN2}?"),
            "IN", "with", false),
       When(Rule("the {NNP} is {IN} the [{JJ}] {NN2}", "is the {NNP} {IN} the [{JJ}] {NN2}?"),
            "IN", "with", true),
       When(Rule("the {NN1} is {IN} the [{JJ}] {NN2}", "is the {NN1} {IN} the [{JJ}] {NN2}?"),
            "IN", "with", true)},
      {},
      {}}));

  // Fairness: identity of the depicted person is underspecified.
  out.push_back(MakeTemplate(Template{"fairness-activity",
                                      AmbiguityType::kFairness,
                                      "A person {activity}",
                                      {Slot("activity", C::kActivity)},
                                      FairnessRules("person"),
                                      "person",
                                      {}}));
  out.push_back(MakeTemplate(Template{"fairness-occupation",
                                      AmbiguityType::kFairness,
                                      "An image of {a} {occupation}",
                                      {Slot("occupation", C::kOccupation)},
                                      FairnessRules("{occupation}"),
                                      "{occupation}",
                                      {}}));
  out.push_back(MakeTemplate(Template{
      "fairness-occupation-activity",
      AmbiguityType::kFairness,
      "The {occupation} is {activity}",
      {Slot("occupation", C::kOccupation), Slot("activity", C::kActivity)},
      FairnessRules("{occupation}"),
      "{occupation}",
      {}}));

  // Misc: material modifier scope over a noun-noun compound.
  out.push_back(MakeTemplate(Template{
      "misc-compound",
      AmbiguityType::kMisc,
      "{a} {MAT} {NN}",
      {Slot("MAT", C::kMaterial), Slot("NN", C::kCompound)},
      {Rule("the {NN:mod} is {MAT}", "is the {NN:mod} {MAT}?"),
       Rule("the {NN:head} is {MAT}", "is the {NN:head} {MAT}?")},
      {},
      {}}));

  std::stable_sort(out.begin(), out.end(), [](const Template& a, const Template& b) {
    return static_cast<int>(a.ambiguity_type) < static_cast<int>(b.ambiguity_type);
  });
  return out;
}

}  // namespace

const std::vector<Template>& BuiltinTemplates() {
  static const std::vector<Template> templates = BuildTemplates();
  return templates;
}

}  // namespace promptlens::grammar
