#ifndef PROMPTLENS_GRAMMAR_GRAMMAR_H_
#define PROMPTLENS_GRAMMAR_GRAMMAR_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptlens/grammar/lexicon.h"
#include "promptlens/grammar/template.h"
#include "promptlens/grammar/types.h"

namespace promptlens::grammar {

struct Detection {
  AmbiguityType ambiguity_type = AmbiguityType::kPP;
  std::string template_id;
  Bindings bindings;
  Complexity complexity = Complexity::kSimple;
  bool is_combination = false;

  bool operator==(const Detection&) const = default;
};

// Lowercases, splits on whitespace and splits leading/trailing .,;:?! off each
// word as separate tokens.
std::vector<std::string> SentenceTokens(std::string_view sentence);

// Sorted content words of a setup or question: tokens without punctuation and
// {is, are, does, do, the, a, an}, with verbs reduced to their lemma so that
// "the cat has" and "does the cat have" agree. "not" is dropped unless
// keep_negation is set.
std::vector<std::string> ContentWords(std::string_view text, const Lexicon& lexicon,
                                      bool keep_negation = false);

// Template grammar over one lexicon. Immutable; safe to share across threads.
class Grammar {
 public:
  explicit Grammar(std::shared_ptr<const Lexicon> lexicon);
  Grammar(std::shared_ptr<const Lexicon> lexicon, std::vector<Template> templates);
  ~Grammar();

  Grammar(const Grammar&) = delete;
  Grammar& operator=(const Grammar&) = delete;

  const Lexicon& lexicon() const { return *lexicon_; }
  std::shared_ptr<const Lexicon> shared_lexicon() const { return lexicon_; }
  // Detection priority order.
  const std::vector<Template>& templates() const { return templates_; }
  const Template* FindTemplate(std::string_view id) const;
  std::vector<const Template*> TemplatesOf(AmbiguityType type) const;

  // Renders the surface form. Throws Error(kInvalidArgument) for a missing
  // required slot, an unknown slot, or a lexeme outside the slot's category.
  // Occupations are accepted in agent and entity slots of linguistic
  // templates and make the prompt a combination prompt. A DECOR binding makes
  // it complex. Throws Error(kNotFound) for an unknown template id.
  AmbiguousPrompt Instantiate(const Template& tmpl, const Bindings& bindings) const;
  AmbiguousPrompt Instantiate(std::string_view template_id, const Bindings& bindings) const;

  // Interpretations in rule order; combination prompts append the six
  // identity interpretations for each distinct occupation, in slot order.
  // Throws Error(kNotFound) for an unknown template.
  std::vector<Interpretation> Enumerate(const AmbiguousPrompt& prompt) const;
  BenchmarkRecord MakeRecord(const AmbiguousPrompt& prompt) const;

  // First template in priority order whose surface matches, allowing a known
  // decoration between the matched body and the closing period.
  std::optional<Detection> Detect(std::string_view sentence) const;
  // Every template that matches, in priority order.
  std::vector<Detection> DetectAll(std::string_view sentence) const;

  // Detects and instantiates. Throws Error(kUndefined) when nothing matches.
  AmbiguousPrompt Parse(std::string_view sentence, std::string id = {}) const;

  // Inserts a seeded decoration. Throws Error(kFailedPrecondition) for a
  // prompt that is already complex. With no decorations in the lexicon the
  // prompt is returned unchanged and a warning is logged.
  AmbiguousPrompt Complexify(const AmbiguousPrompt& prompt, uint64_t seed) const;

  // Replaces every person noun in agent/entity slots with distinct seeded
  // occupations. Throws Error(kFailedPrecondition) for non-linguistic,
  // already combined, or person-free prompts, and Error(kExhausted) when the
  // lexicon has too few occupations.
  AmbiguousPrompt CombineFairness(const AmbiguousPrompt& prompt, uint64_t seed) const;

  // Slot names bound to person nouns that CombineFairness would replace.
  std::vector<std::string> PersonSlots(const AmbiguousPrompt& prompt) const;

  // Renders a rule or surface form without sentence capitalization.
  std::string RenderForm(const Template& tmpl, const std::vector<PatternElement>& form,
                         const Bindings& bindings) const;

 private:
  struct Index;

  std::string RenderSurface(const Template& tmpl, const Bindings& bindings) const;
  void CheckBindings(const Template& tmpl, const Bindings& bindings) const;
  bool LexemeFits(const SlotSpec& slot, const std::string& value, bool linguistic) const;
  void MatchTemplate(const Template& tmpl, const std::vector<std::string>& tokens,
                     std::vector<Detection>& out, bool first_only) const;

  std::shared_ptr<const Lexicon> lexicon_;
  std::vector<Template> templates_;
  std::unique_ptr<Index> index_;
};

}  // namespace promptlens::grammar

#endif  // PROMPTLENS_GRAMMAR_GRAMMAR_H_
