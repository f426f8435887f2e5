#ifndef PROMPTLENS_GRAMMAR_LEXICON_H_
#define PROMPTLENS_GRAMMAR_LEXICON_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace promptlens::grammar {

enum class NounKind { kPerson, kAnimal, kObject, kOccupation };

struct VerbEntry {
  std::string base;        // "look at"
  std::string third;       // "looks at"
  std::string participle;  // "looking at"
  bool takes_agent = true;
  bool takes_object = true;

  bool operator==(const VerbEntry&) const = default;
};

struct AdjectiveEntry {
  std::string word;
  bool applies_person = true;
  bool applies_animal = true;
  bool applies_object = true;

  bool AppliesTo(NounKind kind) const;
  bool operator==(const AdjectiveEntry&) const = default;
};

// Raw category lists as read from a lexicon document. The first eight
// categories must be non-empty; decorations may be empty (complexify is then
// a no-op). capabilities, materials and compounds are optional: without them
// the capability-driven and misc templates cannot be instantiated.
struct LexiconData {
  std::vector<std::string> person_nouns;
  std::vector<std::string> animal_nouns;
  std::vector<std::string> object_nouns;
  std::vector<AdjectiveEntry> adjectives;
  std::vector<VerbEntry> transitive_verbs;
  std::vector<std::string> prepositions;
  std::vector<std::string> activities;
  std::vector<std::string> occupations;
  std::vector<std::string> decorations;
  // noun -> participle phrases it can plausibly perform ("bird" -> "flying").
  // The key "person" applies to every person and occupation noun.
  std::map<std::string, std::vector<std::string>> capabilities;
  std::vector<std::string> materials;
  std::vector<std::pair<std::string, std::string>> compounds;  // (modifier, head)
};

// Validated, indexed, immutable lexicon.
class Lexicon {
 public:
  explicit Lexicon(LexiconData data);

  const LexiconData& data() const { return data_; }

  std::optional<NounKind> KindOf(std::string_view noun) const;
  bool IsPersonLike(std::string_view noun) const;

  // Finds a verb by any of its three surface forms.
  const VerbEntry* FindVerb(std::string_view form) const;
  const AdjectiveEntry* FindAdjective(std::string_view word) const;

  // Capabilities of a noun, including the shared "person" entry for person
  // and occupation nouns.
  std::set<std::string> CapabilitiesOf(std::string_view noun) const;
  // True when some noun lists the phrase; otherwise CS/UCS is undecidable.
  bool IsKnownCapability(std::string_view phrase) const;
  const std::vector<std::string>& AllCapabilities() const { return all_capabilities_; }

  // Compound "egg container" -> ("egg", "container").
  std::optional<std::pair<std::string, std::string>> SplitCompound(
      std::string_view compound) const;
  const std::vector<std::string>& CompoundPhrases() const { return compound_phrases_; }

  // Maps the first word of a third-person or base verb form to the first word
  // of the base form ("looks" -> "look", "has" -> "have").
  std::string LemmaOf(std::string_view word) const;

 private:
  LexiconData data_;
  std::unordered_map<std::string, NounKind> noun_kind_;
  std::unordered_map<std::string, size_t> verb_by_form_;
  std::unordered_map<std::string, size_t> adjective_by_word_;
  std::unordered_map<std::string, std::string> lemma_;
  std::vector<std::string> all_capabilities_;
  std::vector<std::string> compound_phrases_;
};

// Parses a JSON lexicon document. Throws Error(kParse) for malformed
// documents and Error(kMissingCategory) naming the absent or empty category.
// Duplicate entries are dropped; one message per duplicate is appended to
// `warnings` when given and logged.
Lexicon LoadLexicon(std::string_view document,
                    std::vector<std::string>* warnings = nullptr);
Lexicon LoadLexiconFile(const std::string& path,
                        std::vector<std::string>* warnings = nullptr);

// Directory holding the shipped lexicon, shot libraries and configs. Honors
// PROMPTLENS_DATA_DIR, falling back to the build-time location.
std::string DataDir();
std::string DefaultLexiconPath();

}  // namespace promptlens::grammar

#endif  // PROMPTLENS_GRAMMAR_LEXICON_H_
