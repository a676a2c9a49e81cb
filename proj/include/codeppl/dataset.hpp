// Copyright 2026 The codeppl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Labeled corpora: puzzle filtering, difficulty/scale bucketing, seeded
// paired sampling and the JSONL corpus format.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codeppl/error.hpp"
#include "codeppl/rng.hpp"
#include "json.hpp"

namespace codeppl {

enum class Language { kC, kCSharp, kCpp, kGo, kJava, kPython, kRuby, kRust };

inline constexpr std::array<Language, 8> kAllLanguages{
    Language::kC,    Language::kCSharp, Language::kCpp,  Language::kGo,
    Language::kJava, Language::kPython, Language::kRuby, Language::kRust};

inline std::string_view to_string(Language l) {
  switch (l) {
    case Language::kC: return "C";
    case Language::kCSharp: return "C#";
    case Language::kCpp: return "C++";
    case Language::kGo: return "Go";
    case Language::kJava: return "Java";
    case Language::kPython: return "Python";
    case Language::kRuby: return "Ruby";
    case Language::kRust: return "Rust";
  }
  return "unknown";
}

inline std::optional<Language> parse_language(std::string_view s) {
  for (Language l : kAllLanguages) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

enum class Author { kHuman, kLlm };

inline std::string_view to_string(Author a) {
  return a == Author::kHuman ? "human" : "llm";
}

enum class Difficulty { kEasy, kMedium, kHard };
enum class Scale { kSmall, kMedium, kLarge };

inline std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kMedium: return "medium";
    case Difficulty::kHard: return "hard";
  }
  return "unknown";
}

inline std::string_view to_string(Scale s) {
  switch (s) {
    case Scale::kSmall: return "small";
    case Scale::kMedium: return "medium";
    case Scale::kLarge: return "large";
  }
  return "unknown";
}

// easy <= 200 < medium <= 500 < hard
inline Difficulty bucket_difficulty(std::int64_t score) {
  if (score < 0) fail(ErrorKind::kInvalidInput, "difficulty score is negative");
  if (score <= 200) return Difficulty::kEasy;
  if (score <= 500) return Difficulty::kMedium;
  return Difficulty::kHard;
}

// small <= 20 < medium <= 50 < large
inline Scale bucket_scale(std::size_t loc) {
  if (loc <= 20) return Scale::kSmall;
  if (loc <= 50) return Scale::kMedium;
  return Scale::kLarge;
}

// Lines with at least one non-whitespace character.
inline std::size_t count_loc(std::string_view code) {
  std::size_t loc = 0;
  bool content = false;
  for (char c : code) {
    if (c == '\n') {
      loc += content;
      content = false;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      content = true;
    }
  }
  return loc + content;
}

struct CodeSample {
  std::string id;
  std::string puzzle_id;
  Language language = Language::kC;
  Author author = Author::kHuman;
  std::optional<std::string> generator_model;  // set iff author is llm
  std::int64_t difficulty_score = 0;
  std::string code;
  // Derived once at load time and never recomputed on perturbed variants.
  std::size_t loc = 0;
  Difficulty difficulty = Difficulty::kEasy;
  Scale scale = Scale::kSmall;
};

inline CodeSample make_sample(std::string id, std::string puzzle_id,
                              Language language, Author author,
                              std::optional<std::string> generator_model,
                              std::int64_t difficulty_score, std::string code) {
  if (id.empty()) fail(ErrorKind::kInvalidInput, "sample id is empty");
  if ((author == Author::kLlm) != generator_model.has_value()) {
    fail(ErrorKind::kInvalidInput,
         "sample " + id + ": generator_model is required iff author is llm");
  }
  CodeSample s{std::move(id),     std::move(puzzle_id), language, author,
               std::move(generator_model), difficulty_score, std::move(code)};
  s.loc = count_loc(s.code);
  s.difficulty = bucket_difficulty(s.difficulty_score);
  s.scale = bucket_scale(s.loc);
  return s;
}

struct PuzzleElements {
  bool statement = false;
  bool input = false;
  bool output = false;
  bool constraints = false;
  bool difficulty = false;
  std::int64_t samples_count = 0;
};

struct Puzzle {
  std::string id;
  std::int64_t difficulty_score = 0;
  std::string statement_language;
  bool has_images_or_tables = false;
  PuzzleElements elements;
};

struct SolutionInfo {
  Language language = Language::kC;
  std::size_t loc = 0;
};

using SolutionIndex = std::map<std::string, std::vector<SolutionInfo>>;

// Human solutions grouped by puzzle.
inline SolutionIndex build_solution_index(std::span<const CodeSample> corpus) {
  SolutionIndex index;
  for (const auto& s : corpus) {
    if (s.author == Author::kHuman)
      index[s.puzzle_id].push_back({s.language, s.loc});
  }
  return index;
}

inline constexpr std::size_t kMinSolutionLoc = 30;

namespace detail {

inline bool is_english(std::string_view lang) {
  std::string lower;
  for (char c : lang) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower == "english" || lower == "en";
}

}  // namespace detail

// Empty when the puzzle is kept, otherwise the first exclusion reason.
inline std::optional<std::string> puzzle_exclusion(const Puzzle& p,
                                                   const SolutionIndex& index) {
  if (!detail::is_english(p.statement_language)) return "statement not English";
  if (p.has_images_or_tables) return "statement has images or tables";
  static const std::vector<SolutionInfo> kNone;
  const auto it = index.find(p.id);
  const auto& sols = it == index.end() ? kNone : it->second;
  if (std::none_of(sols.begin(), sols.end(),
                   [](const auto& s) { return s.loc >= kMinSolutionLoc; })) {
    return "all solutions shorter than 30 LOC";
  }
  std::set<Language> langs;
  for (const auto& s : sols) langs.insert(s.language);
  if (langs.size() < kAllLanguages.size()) return "solutions missing a language";
  const auto& e = p.elements;
  if (!(e.statement && e.input && e.output && e.constraints && e.difficulty &&
        e.samples_count >= 2)) {
    return "incomplete structure";
  }
  return std::nullopt;
}

inline std::vector<Puzzle> filter_puzzles(std::span<const Puzzle> puzzles,
                                          const SolutionIndex& index) {
  std::vector<Puzzle> kept;
  for (const auto& p : puzzles) {
    if (!puzzle_exclusion(p, index)) kept.push_back(p);
  }
  return kept;
}

struct FilteredDataset {
  std::vector<Puzzle> puzzles;
  std::vector<CodeSample> samples;
};

// Filters puzzles against the human solutions in `corpus`, then keeps the
// samples (human and llm) of retained puzzles, in input order.
inline FilteredDataset build_dataset(std::span<const Puzzle> puzzles,
                                     std::span<const CodeSample> corpus) {
  FilteredDataset out;
  out.puzzles = filter_puzzles(puzzles, build_solution_index(corpus));
  std::set<std::string> kept;
  for (const auto& p : out.puzzles) kept.insert(p.id);
  for (const auto& s : corpus) {
    if (kept.count(s.puzzle_id)) out.samples.push_back(s);
  }
  return out;
}

enum class AspectKind { kLanguage, kDifficulty, kScale, kGenerator };

inline std::string_view to_string(AspectKind a) {
  switch (a) {
    case AspectKind::kLanguage: return "language";
    case AspectKind::kDifficulty: return "difficulty";
    case AspectKind::kScale: return "scale";
    case AspectKind::kGenerator: return "generator";
  }
  return "unknown";
}

inline std::optional<AspectKind> parse_aspect(std::string_view s) {
  for (auto a : {AspectKind::kLanguage, AspectKind::kDifficulty,
                 AspectKind::kScale, AspectKind::kGenerator}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

// One group of an aspect, e.g. language=C++ or difficulty=hard.
struct Aspect {
  AspectKind kind = AspectKind::kLanguage;
  std::string value;

  std::string label() const {
    return std::string(to_string(kind)) + "=" + value;
  }

  // Human samples carry no generator, so every human sample belongs to
  // every generator group.
  bool matches(const CodeSample& s) const {
    switch (kind) {
      case AspectKind::kLanguage: return to_string(s.language) == value;
      case AspectKind::kDifficulty: return to_string(s.difficulty) == value;
      case AspectKind::kScale: return to_string(s.scale) == value;
      case AspectKind::kGenerator:
        return s.author == Author::kHuman || s.generator_model == value;
    }
    return false;
  }
};

// Group values of an aspect. Generators are taken from the corpus, sorted.
inline std::vector<Aspect> aspect_groups(AspectKind kind,
                                         std::span<const CodeSample> corpus) {
  std::vector<Aspect> out;
  switch (kind) {
    case AspectKind::kLanguage:
      for (Language l : kAllLanguages) out.push_back({kind, std::string(to_string(l))});
      break;
    case AspectKind::kDifficulty:
      for (auto d : {Difficulty::kEasy, Difficulty::kMedium, Difficulty::kHard})
        out.push_back({kind, std::string(to_string(d))});
      break;
    case AspectKind::kScale:
      for (auto s : {Scale::kSmall, Scale::kMedium, Scale::kLarge})
        out.push_back({kind, std::string(to_string(s))});
      break;
    case AspectKind::kGenerator: {
      std::set<std::string> gens;
      for (const auto& s : corpus)
        if (s.generator_model) gens.insert(*s.generator_model);
      for (const auto& g : gens) out.push_back({kind, g});
      break;
    }
  }
  return out;
}

struct PairedSampleSet {
  std::vector<std::pair<CodeSample, CodeSample>> pairs;  // (human, llm)
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

namespace detail {

// Uniform n-subset via partial Fisher-Yates over a pool sorted by id, then
// returned in id order.
inline std::vector<const CodeSample*> choose(std::vector<const CodeSample*> pool,
                                             std::size_t n, Rng& rng) {
  std::sort(pool.begin(), pool.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });
  return pool;
}

}  // namespace detail

inline PairedSampleSet sample_pairs(std::span<const CodeSample> corpus,
                                    const Aspect& aspect, std::size_t n,
                                    std::uint64_t seed) {
  std::vector<const CodeSample*> humans, llms;
  for (const auto& s : corpus) {
    if (!aspect.matches(s)) continue;
    (s.author == Author::kHuman ? humans : llms).push_back(&s);
  }
  for (auto [pool, who] : {std::pair{&humans, "human"}, std::pair{&llms, "llm"}}) {
    if (pool->size() < n) {
      fail(ErrorKind::kInsufficientSamples,
           "group " + aspect.label() + ": need " + std::to_string(n) + " " +
               who + " samples, have " + std::to_string(pool->size()) +
               " (short by " + std::to_string(n - pool->size()) + ")");
    }
  }
  Rng human_rng(mix_seed(seed, 0));
  Rng llm_rng(mix_seed(seed, 1));
  const auto h = detail::choose(std::move(humans), n, human_rng);
  const auto l = detail::choose(std::move(llms), n, llm_rng);
  PairedSampleSet out{{}, n, seed};
  out.pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.pairs.emplace_back(*h[i], *l[i]);
  return out;
}

// ---- JSONL ----------------------------------------------------------------

inline nlohmann::json to_json(const CodeSample& s) {
  return {{"id", s.id},
          {"puzzle_id", s.puzzle_id},
          {"language", to_string(s.language)},
          {"author", to_string(s.author)},
          {"generator_model", s.generator_model
                                  ? nlohmann::json(*s.generator_model)
                                  : nlohmann::json(nullptr)},
          {"difficulty_score", s.difficulty_score},
          {"code", s.code}};
}

inline CodeSample sample_from_json(const nlohmann::json& j) {
  try {
    const auto lang_name = j.at("language").get<std::string>();
    const auto lang = parse_language(lang_name);
    if (!lang) fail(ErrorKind::kInvalidInput, "unknown language " + lang_name);
    const auto author_name = j.at("author").get<std::string>();
    if (author_name != "human" && author_name != "llm")
      fail(ErrorKind::kInvalidInput, "unknown author " + author_name);
    std::optional<std::string> gen;
    if (j.contains("generator_model") && !j["generator_model"].is_null())
      gen = j["generator_model"].get<std::string>();
    return make_sample(j.at("id").get<std::string>(),
                       j.at("puzzle_id").get<std::string>(), *lang,
                       author_name == "human" ? Author::kHuman : Author::kLlm,
                       std::move(gen), j.at("difficulty_score").get<std::int64_t>(),
                       j.at("code").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidInput, std::string("malformed sample: ") + e.what());
  }
}

inline nlohmann::json to_json(const Puzzle& p) {
  const auto& e = p.elements;
  return {{"id", p.id},
          {"difficulty_score", p.difficulty_score},
          {"statement_language", p.statement_language},
          {"has_images_or_tables", p.has_images_or_tables},
          {"elements",
           {{"statement", e.statement},
            {"input", e.input},
            {"output", e.output},
            {"constraints", e.constraints},
            {"difficulty", e.difficulty},
            {"samples", e.samples_count}}}};
}

inline Puzzle puzzle_from_json(const nlohmann::json& j) {
  try {
    Puzzle p;
    p.id = j.at("id").get<std::string>();
    p.difficulty_score = j.at("difficulty_score").get<std::int64_t>();
    p.statement_language = j.at("statement_language").get<std::string>();
    p.has_images_or_tables = j.at("has_images_or_tables").get<bool>();
    const auto& e = j.at("elements");
    auto flag = [&](const char* key) { return e.value(key, false); };
    p.elements = {flag("statement"), flag("input"),      flag("output"),
                  flag("constraints"), flag("difficulty"),
                  e.value("samples", std::int64_t{0})};
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidInput, std::string("malformed puzzle: ") + e.what());
  }
}

template <typename T, typename Parse>
std::vector<T> read_jsonl(std::istream& in, Parse parse) {
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::kInvalidInput,
           "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::kInvalidInput,
           "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<CodeSample> load_corpus(std::istream& in) {
  return read_jsonl<CodeSample>(in, sample_from_json);
}

inline std::vector<Puzzle> load_puzzles(std::istream& in) {
  return read_jsonl<Puzzle>(in, puzzle_from_json);
}

// One compact JSON object per line, keys sorted.
inline void save_corpus(std::ostream& out, std::span<const CodeSample> corpus) {
  for (const auto& s : corpus) out << to_json(s).dump() << '\n';
}

inline void save_puzzles(std::ostream& out, std::span<const Puzzle> puzzles) {
  for (const auto& p : puzzles) out << to_json(p).dump() << '\n';
}

}  // namespace codeppl
