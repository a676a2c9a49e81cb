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

// Synthetic labeled corpora for tests. "llm" samples reuse a small set of
// canonical lines; "human" samples are the same lines with random character
// edits, so they are measurably less predictable.

#include <cstdint>
#include <string>
#include <vector>

#include "codeppl/dataset.hpp"
#include "codeppl/rng.hpp"

namespace codeppl::testing {

inline const std::vector<std::string>& canonical_lines() {
  static const std::vector<std::string> lines{
      "for (int i = 0; i < n; ++i) {",
      "  sum += values[i];",
      "}",
      "return sum;",
      "int n = read_int();",
      "if (left > right) return left;",
      "std::vector<int> values(n);",
      "while (queue.size() > 0) {",
      "  auto node = queue.front();",
      "  queue.pop();",
  };
  return lines;
}

inline std::string llm_code(Rng& rng, std::size_t lines) {
  std::string out;
  for (std::size_t i = 0; i < lines; ++i) {
    out += canonical_lines()[rng.below(canonical_lines().size())];
    out += '\n';
  }
  return out;
}

inline std::string human_code(Rng& rng, std::size_t lines) {
  static const std::string noise = "abcdefghijklmnopqrstuvwxyzQXZ0123456789_$@~";
  std::string out;
  for (std::size_t i = 0; i < lines; ++i) {
    std::string line = canonical_lines()[rng.below(canonical_lines().size())];
    for (char& c : line) {
      if (c != ' ' && rng.bernoulli(0.35)) c = noise[rng.below(noise.size())];
    }
    out += line;
    out += '\n';
  }
  return out;
}

// Every (language, difficulty, scale, author) cell gets `per_cell` samples.
// LLM samples alternate between two generator models.
inline std::vector<CodeSample> synthetic_corpus(std::size_t per_cell, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CodeSample> out;
  const std::int64_t difficulty_scores[] = {150, 350, 800};
  const std::size_t line_counts[] = {12, 35, 60};
  std::size_t serial = 0;
  for (Language lang : kAllLanguages) {
    for (std::int64_t diff : difficulty_scores) {
      for (std::size_t lines : line_counts) {
        for (std::size_t i = 0; i < per_cell; ++i) {
          const std::string puzzle = "p" + std::to_string(diff) + "_" + std::to_string(i);
          const std::string tag = std::to_string(serial++);
          out.push_back(make_sample("h" + tag, puzzle, lang, Author::kHuman, std::nullopt,
                                    diff, human_code(rng, lines)));
          out.push_back(make_sample("m" + tag, puzzle, lang, Author::kLlm,
                                    serial % 2 ? "gpt-3.5" : "gpt-4o", diff,
                                    llm_code(rng, lines)));
        }
      }
    }
  }
  return out;
}

inline std::string lines_of(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += "stmt();\n";
  return s;
}

inline Puzzle compliant_puzzle(const std::string& id) {
  return {id, 300, "English", false, {true, true, true, true, true, 2}};
}

// Human solutions in all eight languages, one of them `loc` lines long.
inline std::vector<CodeSample> human_solutions(const std::string& puzzle, std::size_t loc,
                                  std::size_t languages = 8) {
  std::vector<CodeSample> out;
  for (std::size_t i = 0; i < languages; ++i) {
    out.push_back(make_sample(puzzle + "-" + std::to_string(i), puzzle, kAllLanguages[i],
                              Author::kHuman, std::nullopt, 300, lines_of(i == 0 ? loc : 10)));
  }
  return out;
}

struct FilterFixture {
  std::vector<Puzzle> puzzles;
  std::vector<CodeSample> corpus;
};

// Six puzzles, each violating exactly one exclusion criterion.
inline FilterFixture violation_fixture() {
  FilterFixture f;
  auto add = [&](Puzzle p, std::vector<CodeSample> sols) {
    f.puzzles.push_back(std::move(p));
    f.corpus.insert(f.corpus.end(), sols.begin(), sols.end());
  };
  auto p1 = compliant_puzzle("non-english");
  p1.statement_language = "Japanese";
  add(p1, human_solutions("non-english", 35));
  auto p2 = compliant_puzzle("images");
  p2.has_images_or_tables = true;
  add(p2, human_solutions("images", 35));
  add(compliant_puzzle("short"), human_solutions("short", 29));
  add(compliant_puzzle("seven-langs"), human_solutions("seven-langs", 35, 7));
  auto p5 = compliant_puzzle("no-constraints");
  p5.elements.constraints = false;
  add(p5, human_solutions("no-constraints", 35));
  auto p6 = compliant_puzzle("one-sample");
  p6.elements.samples_count = 1;
  add(p6, human_solutions("one-sample", 35));
  return f;
}

// All compliant: every puzzle has a 40-LOC solution in all eight languages.
inline FilterFixture compliant_fixture(std::size_t puzzles) {
  FilterFixture f;
  for (std::size_t i = 0; i < puzzles; ++i) {
    const std::string id = "ok" + std::to_string(i);
    f.puzzles.push_back(compliant_puzzle(id));
    auto sols = human_solutions(id, 40);
    f.corpus.insert(f.corpus.end(), sols.begin(), sols.end());
  }
  return f;
}

}  // namespace codeppl::testing
