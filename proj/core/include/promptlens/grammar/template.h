#ifndef PROMPTLENS_GRAMMAR_TEMPLATE_H_
#define PROMPTLENS_GRAMMAR_TEMPLATE_H_

#include <optional>
#include <string>
#include <vector>

#include "promptlens/grammar/types.h"

namespace promptlens::grammar {

enum class SlotCategory {
  kAgent,       // person or animal (occupation in combination prompts)
  kEntity,      // person, animal or object (occupation in combination prompts)
  kThing,       // animal or object
  kVerb,
  kAdjective,
  kPreposition,
  kActivity,
  kOccupation,
  kCapability,  // participle phrase some noun can perform
  kMaterial,
  kCompound,
};

enum class VerbForm { kThird, kBase, kParticiple };

struct SlotSpec {
  std::string name;
  SlotCategory category = SlotCategory::kEntity;
  VerbForm form = VerbForm::kThird;
  // Slots this one depends on while sampling: the object of a verb, the
  // nouns an adjective modifies, or the actors of a capability.
  std::vector<std::string> refs;
  // Agent slots that a capability slot refers to are sampled only from nouns
  // that list at least one capability.
  bool needs_capability = false;
};

enum class CsHint { kCS, kUCS, kContextDependent };

struct RuleCondition {
  std::string slot;
  std::string equals;
  bool negate = false;

  bool Holds(const Bindings& b) const;
};

struct InterpretationRule {
  std::string setup_form;
  std::string question_form;
  CsHint cs_hint = CsHint::kCS;
  std::optional<RuleCondition> when;
  // For kContextDependent: the interpretation is UCS when the capability in
  // `cs_capability_slot` is known but not listed for the noun in
  // `cs_subject_slot`; CS otherwise.
  std::string cs_subject_slot;
  std::string cs_capability_slot;
};

// One element of a parsed surface or rule form.
struct PatternElement {
  enum class Kind { kLiteral, kSlot, kArticle, kGroup };
  Kind kind = Kind::kLiteral;
  std::string text;  // literal token, or slot name
  std::string form;  // slot modifier after ':' ("ing", "base", "mod", "head")
  std::vector<PatternElement> children;  // kGroup only
};

// Parses "The {NNP} {V} the {NN1} {IN} {a} [{JJ}] {NN2}". '{a}' is the
// indefinite article resolved against the next word; '[...]' is an optional
// group rendered only when every slot inside it is bound. Punctuation
// attached to a token becomes its own literal. Throws Error(kParse).
std::vector<PatternElement> ParsePattern(const std::string& form);

// Slot names referenced anywhere in the pattern.
std::vector<std::string> PatternSlots(const std::vector<PatternElement>& pattern);

struct Template {
  std::string id;
  AmbiguityType ambiguity_type = AmbiguityType::kPP;
  std::string surface_form;
  std::vector<SlotSpec> slots;
  std::vector<InterpretationRule> rules;
  // Subject of the six identity interpretations; either a literal noun or a
  // "{slot}" placeholder. Fairness templates only.
  std::string fairness_subject;

  std::vector<PatternElement> pattern;  // parsed surface_form

  const SlotSpec* FindSlot(const std::string& name) const;
  bool IsOptional(const std::string& slot) const;
  // Final literal "." that a decoration is inserted before.
  bool HasClosingPeriod() const;
};

// Builds pattern and validates the slot/placeholder bijection and rule
// placeholders. Throws Error(kInvalidArgument).
Template MakeTemplate(Template t);

// The six identity interpretations (female, male, dark, light, young, old)
// for a subject noun phrase without article, e.g. "person" or "{occupation}".
std::vector<InterpretationRule> FairnessRules(const std::string& subject);

// Shipped template set, ordered by detection priority.
const std::vector<Template>& BuiltinTemplates();

}  // namespace promptlens::grammar

#endif  // PROMPTLENS_GRAMMAR_TEMPLATE_H_
