#include "promptlens/grammar/types.h"

namespace promptlens::grammar {

std::string_view TypeName(AmbiguityType type) {
  switch (type) {
    case AmbiguityType::kPP: return "PP";
    case AmbiguityType::kVP: return "VP";
    case AmbiguityType::kConjunction: return "Conjunction";
    case AmbiguityType::kAnaphora: return "Anaphora";
    case AmbiguityType::kEllipsis: return "Ellipsis";
    case AmbiguityType::kFairness: return "Fairness";
    case AmbiguityType::kMisc: return "Misc";
  }
  return "?";
}

std::optional<AmbiguityType> ParseType(std::string_view name) {
  for (AmbiguityType t : kAllTypes) {
    if (TypeName(t) == name) return t;
  }
  return std::nullopt;
}

bool IsLinguistic(AmbiguityType type) {
  return type != AmbiguityType::kFairness && type != AmbiguityType::kMisc;
}

std::string_view CsLabelName(CsLabel label) {
  return label == CsLabel::kCS ? "CS" : "UCS";
}

std::optional<CsLabel> ParseCsLabel(std::string_view name) {
  if (name == "CS") return CsLabel::kCS;
  if (name == "UCS") return CsLabel::kUCS;
  return std::nullopt;
}

std::string_view ComplexityName(Complexity c) {
  return c == Complexity::kSimple ? "simple" : "complex";
}

std::optional<Complexity> ParseComplexity(std::string_view name) {
  if (name == "simple") return Complexity::kSimple;
  if (name == "complex") return Complexity::kComplex;
  return std::nullopt;
}

}  // namespace promptlens::grammar
