#include "promptlens/grammar/benchmark.h"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "promptlens/common/error.h"
#include "promptlens/common/hash.h"
#include "promptlens/common/rng.h"
#include "promptlens/common/text.h"

namespace promptlens::grammar {

using ojson = nlohmann::ordered_json;

namespace {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool IsNounSlot(const SlotSpec& s) {
  return s.category == SlotCategory::kAgent || s.category == SlotCategory::kEntity ||
         s.category == SlotCategory::kThing;
}

template <typename T>
const T& Pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.UniformIndex(v.size())];
}

class Sampler {
 public:
  Sampler(const Grammar& grammar, double optional_rate)
      : g_(grammar), lx_(grammar.lexicon()), optional_rate_(optional_rate) {
    const LexiconData& d = lx_.data();
    for (const auto* list : {&d.person_nouns, &d.animal_nouns, &d.object_nouns}) {
      for (const auto& n : *list) {
        auto k = lx_.KindOf(n);
        if (!k) continue;
        if (*k == NounKind::kPerson || *k == NounKind::kAnimal) agents_.push_back(n);
        if (*k == NounKind::kAnimal || *k == NounKind::kObject) things_.push_back(n);
        entities_.push_back(n);
      }
    }
    // Lists may repeat a noun across categories; keep first occurrences.
    for (auto* v : {&agents_, &things_, &entities_}) {
      std::unordered_set<std::string> seen;
      std::vector<std::string> out;
      for (auto& n : *v) {
        if (seen.insert(n).second) out.push_back(n);
      }
      *v = std::move(out);
    }
    for (const auto& n : agents_) {
      if (!lx_.CapabilitiesOf(n).empty()) capable_agents_.push_back(n);
    }
  }

  // One attempt at binding every slot of the template; nullopt when the
  // drawn nouns admit no compatible verb, adjective or capability.
  std::optional<Bindings> Sample(const Template& t, Rng& rng) const {
    Bindings b;
    std::set<std::string> used;
    for (const auto& s : t.slots) {
      if (!IsNounSlot(s)) continue;
      const std::vector<std::string>* pool = &entities_;
      if (s.category == SlotCategory::kAgent) pool = s.needs_capability ? &capable_agents_ : &agents_;
      if (s.category == SlotCategory::kThing) pool = &things_;
      if (pool->empty()) return std::nullopt;
      const std::string& n = Pick(rng, *pool);
      if (!used.insert(n).second) return std::nullopt;
      if (t.IsOptional(s.name) && !rng.Bernoulli(optional_rate_)) continue;
      b[s.name] = n;
    }
    for (const auto& s : t.slots) {
      if (IsNounSlot(s)) continue;
      const bool optional = t.IsOptional(s.name);
      if (optional && !rng.Bernoulli(optional_rate_)) continue;
      std::optional<std::string> v = SampleSlot(s, b, rng);
      if (!v) return std::nullopt;
      b[s.name] = *v;
    }
    return b;
  }

 private:
  std::vector<NounKind> RefKinds(const SlotSpec& s, const Bindings& b) const {
    std::vector<NounKind> out;
    for (const auto& r : s.refs) {
      auto it = b.find(r);
      if (it == b.end()) continue;
      if (auto k = lx_.KindOf(it->second)) out.push_back(*k);
    }
    return out;
  }

  std::optional<std::string> SampleSlot(const SlotSpec& s, const Bindings& b, Rng& rng) const {
    const LexiconData& d = lx_.data();
    switch (s.category) {
      case SlotCategory::kVerb: {
        const auto kinds = RefKinds(s, b);
        std::vector<const VerbEntry*> ok;
        for (const auto& v : d.transitive_verbs) {
          const bool fits = std::all_of(kinds.begin(), kinds.end(), [&](NounKind k) {
            return k == NounKind::kObject ? v.takes_object : v.takes_agent;
          });
          if (fits) ok.push_back(&v);
        }
        if (ok.empty()) return std::nullopt;
        const VerbEntry* v = Pick(rng, ok);
        switch (s.form) {
          case VerbForm::kThird: return v->third;
          case VerbForm::kBase: return v->base;
          case VerbForm::kParticiple: return v->participle;
        }
        return std::nullopt;
      }
      case SlotCategory::kAdjective: {
        const auto kinds = RefKinds(s, b);
        std::vector<std::string> ok;
        for (const auto& a : d.adjectives) {
          if (std::all_of(kinds.begin(), kinds.end(), [&](NounKind k) { return a.AppliesTo(k); })) {
            ok.push_back(a.word);
          }
        }
        if (ok.empty()) return std::nullopt;
        return Pick(rng, ok);
      }
      case SlotCategory::kCapability: {
        std::optional<std::set<std::string>> common;
        for (const auto& r : s.refs) {
          auto it = b.find(r);
          if (it == b.end()) continue;
          auto caps = lx_.CapabilitiesOf(it->second);
          if (!common) {
            common = std::move(caps);
          } else {
            std::set<std::string> inter;
            std::set_intersection(common->begin(), common->end(), caps.begin(), caps.end(),
                                  std::inserter(inter, inter.begin()));
            common = std::move(inter);
          }
        }
        if (!common || common->empty()) return std::nullopt;
        std::vector<std::string> v(common->begin(), common->end());
        return Pick(rng, v);
      }
      case SlotCategory::kPreposition: return Pick(rng, d.prepositions);
      case SlotCategory::kActivity: return Pick(rng, d.activities);
      case SlotCategory::kOccupation: return Pick(rng, d.occupations);
      case SlotCategory::kMaterial:
        if (d.materials.empty()) return std::nullopt;
        return Pick(rng, d.materials);
      case SlotCategory::kCompound:
        if (lx_.CompoundPhrases().empty()) return std::nullopt;
        return Pick(rng, lx_.CompoundPhrases());
      default: return std::nullopt;
    }
  }

  const Grammar& g_;
  const Lexicon& lx_;
  double optional_rate_;
  std::vector<std::string> agents_, things_, entities_, capable_agents_;
};

// True when detection recovers exactly this template and binding set.
bool RoundTrips(const Grammar& g, const AmbiguousPrompt& p) {
  auto d = g.Detect(p.text);
  return d && d->template_id == p.template_id && d->bindings == p.bindings &&
         d->is_combination == p.is_combination && d->complexity == p.complexity;
}

bool SetupsDistinct(const std::vector<Interpretation>& interps) {
  std::set<std::string> seen;
  for (const auto& i : interps) {
    if (!seen.insert(i.setup_text).second) return false;
  }
  return true;
}

class Builder {
 public:
  Builder(const Grammar& g, const GenerationConfig& c) : g_(g), config_(c) {}

  void Add(AmbiguousPrompt p, std::vector<Interpretation> interps) {
    texts_.insert(p.text);
    p.id = fmt::format("tab-{:04d}", records_.size() + 1);
    records_.push_back(BenchmarkRecord{std::move(p), std::move(interps)});
  }

  // Returns the record when it is new, round-trips and has distinct setups.
  std::optional<BenchmarkRecord> Accept(const AmbiguousPrompt& p) const {
    if (texts_.count(p.text) || !RoundTrips(g_, p)) return std::nullopt;
    auto interps = g_.Enumerate(p);
    if (!SetupsDistinct(interps)) return std::nullopt;
    return BenchmarkRecord{p, std::move(interps)};
  }

  void Exhausted(const std::string& bucket, int have, int want) const {
    throw Error(ErrorCode::kExhausted,
                fmt::format("lexicon exhausted for bucket {}: produced {} of {} distinct prompts",
                            bucket, have, want));
  }

  std::vector<BenchmarkRecord>& records() { return records_; }

 private:
  const Grammar& g_;
  const GenerationConfig& config_;
  std::unordered_set<std::string> texts_;
  std::vector<BenchmarkRecord> records_;
};

std::vector<const Template*> Usable(const Grammar& g, AmbiguityType type) {
  std::vector<const Template*> out = g.TemplatesOf(type);
  if (out.empty()) {
    throw Error(ErrorCode::kFailedPrecondition,
                "no template for type " + std::string(TypeName(type)));
  }
  return out;
}

}  // namespace

std::string BucketOf(const AmbiguousPrompt& prompt) {
  if (prompt.complexity == Complexity::kComplex) return std::string(kComplexBucket);
  if (prompt.is_combination) return std::string(kCombinationBucket);
  return std::string(TypeName(prompt.ambiguity_type));
}

std::vector<std::string> BucketNames() {
  std::vector<std::string> out;
  for (AmbiguityType t : kAllTypes) out.emplace_back(TypeName(t));
  out.emplace_back(kComplexBucket);
  out.emplace_back(kCombinationBucket);
  return out;
}

int GenerationConfig::Total() const {
  int n = 0;
  for (const auto& [k, v] : counts) n += v;
  return n;
}

int GenerationConfig::Count(std::string_view bucket) const {
  auto it = counts.find(std::string(bucket));
  return it == counts.end() ? 0 : it->second;
}

GenerationConfig ParseGenerationConfig(std::string_view document) {
  ojson doc;
  try {
    doc = ojson::parse(document);
  } catch (const ojson::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed generation config: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "generation config must be an object");
  const auto names = BucketNames();
  GenerationConfig c;
  for (const auto& [key, value] : doc.items()) {
    if (key == "optional_rate") {
      if (!value.is_number()) throw Error(ErrorCode::kParse, "optional_rate must be a number");
      c.optional_rate = value.get<double>();
      if (c.optional_rate < 0 || c.optional_rate > 1) {
        throw Error(ErrorCode::kParse, "optional_rate must lie in [0, 1]");
      }
    } else if (key == "max_misses") {
      if (!value.is_number_integer() || value.get<int>() < 1) {
        throw Error(ErrorCode::kParse, "max_misses must be a positive integer");
      }
      c.max_misses = value.get<int>();
    } else if (std::find(names.begin(), names.end(), key) != names.end()) {
      if (!value.is_number_integer() || value.get<int>() < 0) {
        throw Error(ErrorCode::kParse, "count for " + key + " must be a non-negative integer");
      }
      c.counts[key] = value.get<int>();
    } else {
      throw Error(ErrorCode::kParse, "unknown generation config key '" + key + "'");
    }
  }
  return c;
}

GenerationConfig LoadGenerationConfig(const std::string& path) {
  return ParseGenerationConfig(ReadFile(path));
}

namespace {

ojson ConfigToJson(const GenerationConfig& c) {
  ojson j = ojson::object();
  for (const auto& name : BucketNames()) j[name] = c.Count(name);
  j["optional_rate"] = c.optional_rate;
  j["max_misses"] = c.max_misses;
  return j;
}

}  // namespace

std::string GenerationConfigJson(const GenerationConfig& config) {
  return ConfigToJson(config).dump();
}

std::string GenerationConfigHash(const GenerationConfig& config) {
  return Fnv1a64Hex(GenerationConfigJson(config));
}

const BenchmarkRecord* Benchmark::Find(std::string_view id) const {
  for (const auto& r : records) {
    if (r.prompt.id == id) return &r;
  }
  return nullptr;
}

std::map<std::string, int> Benchmark::BucketCounts() const {
  std::map<std::string, int> out;
  for (const auto& r : records) ++out[BucketOf(r.prompt)];
  return out;
}

size_t Benchmark::TotalInterpretations() const {
  size_t n = 0;
  for (const auto& r : records) n += r.interpretations.size();
  return n;
}

Benchmark GenerateBenchmark(const Grammar& grammar, const GenerationConfig& config,
                            uint64_t seed) {
  Benchmark bm;
  bm.seed = seed;
  bm.config = config;
  bm.config_hash = GenerationConfigHash(config);
  Builder builder(grammar, config);
  Sampler sampler(grammar, config.optional_rate);

  auto fill = [&](const std::string& bucket, int want, auto&& make) {
    Rng rng(seed, bucket);
    int have = 0, misses = 0;
    while (have < want) {
      std::optional<AmbiguousPrompt> p = make(rng);
      std::optional<BenchmarkRecord> rec;
      if (p) rec = builder.Accept(*p);
      if (!rec) {
        if (++misses > config.max_misses) builder.Exhausted(bucket, have, want);
        continue;
      }
      misses = 0;
      builder.Add(std::move(rec->prompt), std::move(rec->interpretations));
      ++have;
    }
  };

  for (AmbiguityType type : kAllTypes) {
    const std::string bucket(TypeName(type));
    const int want = config.Count(bucket);
    if (want == 0) continue;
    const auto templates = Usable(grammar, type);
    fill(bucket, want, [&](Rng& rng) -> std::optional<AmbiguousPrompt> {
      const Template& t = *Pick(rng, templates);
      auto b = sampler.Sample(t, rng);
      if (!b) return std::nullopt;
      return grammar.Instantiate(t, *b);
    });
  }

  // Complex records decorate a seeded sample of the six main types; each
  // source prompt is used at most once.
  if (const int want = config.Count(kComplexBucket); want > 0) {
    std::vector<size_t> sources;
    for (size_t i = 0; i < builder.records().size(); ++i) {
      if (builder.records()[i].prompt.ambiguity_type != AmbiguityType::kMisc) sources.push_back(i);
    }
    Rng rng(seed, kComplexBucket);
    for (size_t i = sources.size(); i > 1; --i) {
      std::swap(sources[i - 1], sources[rng.UniformIndex(i)]);
    }
    int have = 0;
    for (size_t k = 0; k < sources.size() && have < want; ++k) {
      const AmbiguousPrompt source = builder.records()[sources[k]].prompt;
      for (int attempt = 0; attempt < 8; ++attempt) {
        AmbiguousPrompt p = grammar.Complexify(source, rng.Next());
        if (p.complexity != Complexity::kComplex) break;
        if (auto rec = builder.Accept(p)) {
          builder.Add(std::move(rec->prompt), std::move(rec->interpretations));
          ++have;
          break;
        }
      }
    }
    if (have < want) builder.Exhausted(std::string(kComplexBucket), have, want);
  }

  if (const int want = config.Count(kCombinationBucket); want > 0) {
    std::vector<const Template*> templates;
    for (const auto& t : grammar.templates()) {
      if (!IsLinguistic(t.ambiguity_type)) continue;
      const bool has_person_slot = std::any_of(t.slots.begin(), t.slots.end(), [](const auto& s) {
        return s.category == SlotCategory::kAgent || s.category == SlotCategory::kEntity;
      });
      if (has_person_slot) templates.push_back(&t);
    }
    fill(std::string(kCombinationBucket), want, [&](Rng& rng) -> std::optional<AmbiguousPrompt> {
      const Template& t = *Pick(rng, templates);
      auto b = sampler.Sample(t, rng);
      if (!b) return std::nullopt;
      AmbiguousPrompt p = grammar.Instantiate(t, *b);
      if (grammar.PersonSlots(p).empty()) return std::nullopt;
      try {
        return grammar.CombineFairness(p, rng.Next());
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kExhausted) return std::nullopt;
        throw;
      }
    });
  }

  bm.records = std::move(builder.records());
  return bm;
}

namespace {

ojson RecordToJson(const BenchmarkRecord& r) {
  ojson j = ojson::object();
  j["id"] = r.prompt.id;
  j["example"] = r.prompt.text;
  j["ambiguity_type"] = std::string(TypeName(r.prompt.ambiguity_type));
  j["template_id"] = r.prompt.template_id;
  ojson b = ojson::object();
  for (const auto& [k, v] : r.prompt.bindings) b[k] = v;
  j["bindings"] = std::move(b);
  j["complexity"] = std::string(ComplexityName(r.prompt.complexity));
  j["is_combination"] = r.prompt.is_combination;
  ojson setups = ojson::array(), labels = ojson::array(), questions = ojson::array();
  for (const auto& i : r.interpretations) {
    setups.push_back(i.setup_text);
    labels.push_back(std::string(CsLabelName(i.cs_label)));
    questions.push_back(i.question_text);
  }
  j["visual_setups"] = std::move(setups);
  j["cs_labels"] = std::move(labels);
  j["questions"] = std::move(questions);
  return j;
}

BenchmarkRecord RecordFromJson(const ojson& j) {
  BenchmarkRecord r;
  r.prompt.id = j.at("id").get<std::string>();
  r.prompt.text = j.at("example").get<std::string>();
  const auto type_name = j.at("ambiguity_type").get<std::string>();
  auto type = ParseType(type_name);
  if (!type) throw Error(ErrorCode::kParse, "unknown ambiguity_type '" + type_name + "'");
  r.prompt.ambiguity_type = *type;
  r.prompt.template_id = j.at("template_id").get<std::string>();
  for (const auto& [k, v] : j.at("bindings").items()) r.prompt.bindings[k] = v.get<std::string>();
  const auto cx_name = j.at("complexity").get<std::string>();
  auto cx = ParseComplexity(cx_name);
  if (!cx) throw Error(ErrorCode::kParse, "unknown complexity '" + cx_name + "'");
  r.prompt.complexity = *cx;
  r.prompt.is_combination = j.at("is_combination").get<bool>();
  const auto& setups = j.at("visual_setups");
  const auto& labels = j.at("cs_labels");
  const auto& questions = j.at("questions");
  if (setups.size() != labels.size() || setups.size() != questions.size()) {
    throw Error(ErrorCode::kParse, "record " + r.prompt.id +
                                       ": visual_setups, cs_labels and questions differ in length");
  }
  for (size_t i = 0; i < setups.size(); ++i) {
    Interpretation in;
    in.index = static_cast<int>(i);
    in.setup_text = setups[i].get<std::string>();
    in.question_text = questions[i].get<std::string>();
    const auto label = labels[i].get<std::string>();
    auto cs = ParseCsLabel(label);
    if (!cs) throw Error(ErrorCode::kParse, "unknown cs label '" + label + "'");
    in.cs_label = *cs;
    r.interpretations.push_back(std::move(in));
  }
  return r;
}

}  // namespace

std::string RecordJson(const BenchmarkRecord& record) { return RecordToJson(record).dump(); }

BenchmarkRecord ParseRecordJson(std::string_view line) {
  try {
    return RecordFromJson(ojson::parse(line));
  } catch (const ojson::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed record: ") + e.what());
  }
}

std::string SerializeBenchmark(const Benchmark& bm) {
  ojson header = ojson::object();
  header["schema_version"] = bm.schema_version;
  header["seed"] = bm.seed;
  header["config_hash"] = bm.config_hash;
  header["config"] = ConfigToJson(bm.config);
  header["n_records"] = bm.records.size();
  ojson wrapper = ojson::object();
  wrapper["_header"] = std::move(header);
  std::string out = wrapper.dump() + "\n";
  for (const auto& r : bm.records) out += RecordToJson(r).dump() + "\n";
  return out;
}

Benchmark ParseBenchmark(std::string_view document) {
  Benchmark bm;
  bool have_header = false;
  size_t line_no = 0;
  size_t expected = 0;
  for (const std::string& line : text::SplitLines(document)) {
    ++line_no;
    if (text::Trim(line).empty()) continue;
    try {
      ojson j = ojson::parse(line);
      if (!have_header) {
        const ojson& h = j.at("_header");
        bm.schema_version = h.at("schema_version").get<int>();
        bm.seed = h.at("seed").get<uint64_t>();
        bm.config_hash = h.at("config_hash").get<std::string>();
        bm.config = ParseGenerationConfig(h.at("config").dump());
        expected = h.at("n_records").get<size_t>();
        have_header = true;
        continue;
      }
      bm.records.push_back(RecordFromJson(j));
    } catch (const ojson::exception& e) {
      throw Error(ErrorCode::kParse, fmt::format("benchmark line {}: {}", line_no, e.what()));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, fmt::format("benchmark line {}: {}", line_no, e.what()));
    }
  }
  if (!have_header) throw Error(ErrorCode::kParse, "benchmark has no header line");
  if (bm.records.size() != expected) {
    throw Error(ErrorCode::kParse, fmt::format("benchmark header announces {} records, found {}",
                                               expected, bm.records.size()));
  }
  return bm;
}

Benchmark LoadBenchmarkFile(const std::string& path) { return ParseBenchmark(ReadFile(path)); }

void WriteBenchmarkFile(const Benchmark& benchmark, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << SerializeBenchmark(benchmark);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

std::vector<std::string> ValidateBenchmark(const Benchmark& bm, const Grammar& grammar) {
  std::vector<std::string> issues;
  if (bm.config_hash != GenerationConfigHash(bm.config)) {
    issues.push_back("config_hash does not match the embedded config");
  }
  const auto counts = bm.BucketCounts();
  for (const auto& bucket : BucketNames()) {
    auto it = counts.find(bucket);
    const int have = it == counts.end() ? 0 : it->second;
    if (have != bm.config.Count(bucket)) {
      issues.push_back(fmt::format("bucket {}: {} records, config asks for {}", bucket, have,
                                   bm.config.Count(bucket)));
    }
  }
  std::unordered_set<std::string> texts, ids;
  for (const auto& r : bm.records) {
    const auto& p = r.prompt;
    const std::string where = "record " + p.id;
    if (!ids.insert(p.id).second) issues.push_back(where + ": duplicate id");
    if (!texts.insert(p.text).second) issues.push_back(where + ": duplicate prompt text");
    const Template* t = grammar.FindTemplate(p.template_id);
    if (!t) {
      issues.push_back(where + ": unknown template " + p.template_id);
      continue;
    }
    if (t->ambiguity_type != p.ambiguity_type) {
      issues.push_back(where + ": ambiguity_type differs from its template");
    }
    try {
      AmbiguousPrompt again = grammar.Instantiate(*t, p.bindings);
      if (again.text != p.text) issues.push_back(where + ": text does not re-render");
      if (again.is_combination != p.is_combination || again.complexity != p.complexity) {
        issues.push_back(where + ": flags disagree with bindings");
      }
      if (grammar.Enumerate(again) != r.interpretations) {
        issues.push_back(where + ": interpretations differ from the grammar's enumeration");
      }
    } catch (const Error& e) {
      issues.push_back(where + ": " + e.what());
    }
    auto d = grammar.Detect(p.text);
    if (!d || d->template_id != p.template_id || d->bindings != p.bindings) {
      issues.push_back(where + ": detection does not recover template and bindings");
    }
    size_t occupations = 0;
    std::set<std::string> seen_occ;
    for (const auto& s : t->slots) {
      auto b = p.bindings.find(s.name);
      if (b != p.bindings.end() && IsNounSlot(s) &&
          grammar.lexicon().KindOf(b->second) == NounKind::kOccupation &&
          seen_occ.insert(b->second).second) {
        ++occupations;
      }
    }
    size_t want = IsLinguistic(p.ambiguity_type) ? 2 + 6 * occupations
                  : p.ambiguity_type == AmbiguityType::kFairness ? 6
                                                                 : 2;
    if (r.interpretations.size() != want) {
      issues.push_back(fmt::format("{}: {} interpretations, expected {}", where,
                                   r.interpretations.size(), want));
    }
    std::set<std::string> setups;
    for (const auto& in : r.interpretations) {
      if (in.setup_text.empty() || in.question_text.empty()) {
        issues.push_back(where + ": empty setup or question");
      }
      if (!setups.insert(in.setup_text).second) issues.push_back(where + ": repeated setup");
      if (ContentWords(in.setup_text, grammar.lexicon()) !=
          ContentWords(in.question_text, grammar.lexicon())) {
        issues.push_back(where + ": question '" + in.question_text +
                         "' does not match setup '" + in.setup_text + "'");
      }
    }
  }
  return issues;
}

}  // namespace promptlens::grammar
