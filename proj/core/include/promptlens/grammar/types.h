#ifndef PROMPTLENS_GRAMMAR_TYPES_H_
#define PROMPTLENS_GRAMMAR_TYPES_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promptlens::grammar {

// Declaration order is the detection priority order used to break ties
// between templates (most specific surface cues first).
enum class AmbiguityType {
  kEllipsis,
  kAnaphora,
  kConjunction,
  kVP,
  kPP,
  kFairness,
  kMisc,
};

inline constexpr AmbiguityType kAllTypes[] = {
    AmbiguityType::kPP,        AmbiguityType::kVP,      AmbiguityType::kConjunction,
    AmbiguityType::kAnaphora,  AmbiguityType::kEllipsis, AmbiguityType::kFairness,
    AmbiguityType::kMisc,
};

std::string_view TypeName(AmbiguityType type);
std::optional<AmbiguityType> ParseType(std::string_view name);

// PP, VP, Conjunction, Anaphora and Ellipsis.
bool IsLinguistic(AmbiguityType type);

enum class CsLabel { kCS, kUCS };
std::string_view CsLabelName(CsLabel label);
std::optional<CsLabel> ParseCsLabel(std::string_view name);

enum class Complexity { kSimple, kComplex };
std::string_view ComplexityName(Complexity c);
std::optional<Complexity> ParseComplexity(std::string_view name);

// Slot name -> lexeme as it appears in the sentence (verbs carry the
// inflected surface form). A complexified prompt also binds kDecorationSlot.
using Bindings = std::map<std::string, std::string>;

inline constexpr std::string_view kDecorationSlot = "DECOR";

struct AmbiguousPrompt {
  std::string id;
  std::string text;
  AmbiguityType ambiguity_type = AmbiguityType::kPP;
  std::string template_id;
  Bindings bindings;
  Complexity complexity = Complexity::kSimple;
  bool is_combination = false;

  bool operator==(const AmbiguousPrompt&) const = default;
};

struct Interpretation {
  int index = 0;
  std::string setup_text;
  std::string question_text;
  CsLabel cs_label = CsLabel::kCS;

  bool operator==(const Interpretation&) const = default;
};

struct BenchmarkRecord {
  AmbiguousPrompt prompt;
  std::vector<Interpretation> interpretations;

  bool operator==(const BenchmarkRecord&) const = default;
};

}  // namespace promptlens::grammar

#endif  // PROMPTLENS_GRAMMAR_TYPES_H_
