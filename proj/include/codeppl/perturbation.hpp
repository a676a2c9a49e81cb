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

// Perturbed-variant generation for DetectGPT, NPR and DetectCodeGPT. All
// perturbations work on whitespace-delimited textual tokens so they are
// independent of whichever tokenizer the scorer uses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codeppl/error.hpp"
#include "codeppl/rng.hpp"

namespace codeppl {

enum class PerturbationKind { kWhitespaceNewline, kMaskFill, kIdentity };

inline std::string_view to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::kWhitespaceNewline: return "whitespace-newline";
    case PerturbationKind::kMaskFill: return "mask-fill";
    case PerturbationKind::kIdentity: return "identity";
  }
  return "unknown";
}

struct PerturbationConfig {
  PerturbationKind kind = PerturbationKind::kWhitespaceNewline;
  std::size_t k = 50;
  std::uint64_t seed = 0;
  double space_insert_prob = 0.05;    // per existing gap between tokens
  double newline_insert_prob = 0.10;  // per line boundary
  std::size_t max_inserted_spaces = 3;
  std::size_t max_inserted_lines = 2;
  double mask_span_fraction = 0.15;
  std::size_t mask_span_len = 2;

  void validate() const {
    auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (k < 1) fail(ErrorKind::kInvalidInput, "k must be >= 1");
    if (!prob_ok(space_insert_prob) || !prob_ok(newline_insert_prob))
      fail(ErrorKind::kInvalidInput, "insertion probability outside [0, 1]");
    if (max_inserted_spaces < 1 || max_inserted_lines < 1)
      fail(ErrorKind::kInvalidInput, "insertion caps must be >= 1");
    if (!(mask_span_fraction > 0.0 && mask_span_fraction < 1.0))
      fail(ErrorKind::kInvalidInput, "mask_span_fraction outside (0, 1)");
    if (mask_span_len < 1)
      fail(ErrorKind::kInvalidInput, "mask_span_len must be >= 1");
  }
};

struct PerturbedSet {
  std::string original;
  std::vector<std::string> variants;
  PerturbationConfig config;
};

// Half-open range [start, end) of whitespace-delimited token indices.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

// Byte ranges of the whitespace-delimited tokens of `text`.
struct WordRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline std::vector<WordRange> word_ranges(std::string_view text) {
  std::vector<WordRange> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    const std::size_t b = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    out.push_back({b, i});
  }
  return out;
}

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& r : word_ranges(text))
    out.emplace_back(text.substr(r.begin, r.end - r.begin));
  return out;
}

// Fills masked token spans of a text. Implementations must be deterministic
// in (text, spans, seed) and safe for concurrent use.
class FillModel {
 public:
  virtual ~FillModel() = default;
  virtual std::string fill(std::string_view text,
                           std::span<const TokenSpan> spans,
                           std::uint64_t seed) const = 0;
};

// Rebuilds `text` with every token inside `spans` replaced by the next entry
// of `replacements`; inter-token whitespace is kept as is.
inline std::string replace_tokens(std::string_view text,
                                  std::span<const TokenSpan> spans,
                                  std::span<const std::string> replacements) {
  const auto words = word_ranges(text);
  std::string out;
  out.reserve(text.size());
  std::size_t cursor = 0;
  std::size_t next_replacement = 0;
  std::size_t span_idx = 0;
  for (std::size_t w = 0; w < words.size(); ++w) {
    while (span_idx < spans.size() && spans[span_idx].end <= w) ++span_idx;
    const bool masked = span_idx < spans.size() && spans[span_idx].start <= w &&
                        w < spans[span_idx].end;
    out.append(text.substr(cursor, words[w].begin - cursor));
    if (masked && next_replacement < replacements.size()) {
      out += replacements[next_replacement++];
    } else {
      out.append(text.substr(words[w].begin, words[w].end - words[w].begin));
    }
    cursor = words[w].end;
  }
  out.append(text.substr(cursor));
  return out;
}

// Replaces every masked token by one word drawn from the unigram word
// distribution of a training corpus.
class ToyFillModel final : public FillModel {
 public:
  explicit ToyFillModel(std::span<const std::string> corpus) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& doc : corpus) {
      for (auto& w : split_words(doc)) ++counts[std::move(w)];
    }
    if (counts.empty()) {
      fail(ErrorKind::kInvalidInput, "fill corpus has no tokens");
    }
    std::uint64_t acc = 0;
    for (auto& [word, c] : counts) {
      acc += c;
      words_.push_back(word);
      cumulative_.push_back(acc);
    }
  }

  std::string fill(std::string_view text, std::span<const TokenSpan> spans,
                   std::uint64_t seed) const override {
    Rng rng(seed);
    std::vector<std::string> repl;
    for (const auto& s : spans) {
      for (std::size_t i = s.start; i < s.end; ++i) repl.push_back(draw(rng));
    }
    return replace_tokens(text, spans, repl);
  }

 private:
  const std::string& draw(Rng& rng) const {
    const std::uint64_t r = rng.below(cumulative_.back());
    const auto it =
        std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    return words_[static_cast<std::size_t>(it - cumulative_.begin())];
  }

  std::vector<std::string> words_;
  std::vector<std::uint64_t> cumulative_;
};

inline PerturbedSet perturb_identity(std::string_view text, std::size_t k) {
  PerturbedSet out;
  out.original = std::string(text);
  out.variants.assign(k, out.original);
  out.config.kind = PerturbationKind::kIdentity;
  out.config.k = k;
  return out;
}

// Inserts extra spaces into existing within-line gaps between tokens and
// extra empty lines after line breaks. The non-whitespace character sequence
// and every non-empty line's content are left untouched.
inline PerturbedSet perturb_whitespace(std::string_view text,
                                       const PerturbationConfig& config) {
  if (text.empty()) fail(ErrorKind::kInvalidInput, "text is empty");
  config.validate();
  PerturbedSet out{std::string(text), {}, config};
  out.config.kind = PerturbationKind::kWhitespaceNewline;
  Rng rng(config.seed);
  auto horizontal = [](char c) { return is_space(c) && c != '\n'; };

  for (std::size_t v = 0; v < config.k; ++v) {
    std::string variant;
    variant.reserve(text.size() + text.size() / 8);
    std::size_t i = 0;
    while (i < text.size()) {
      const char c = text[i];
      if (c == '\n') {
        variant += '\n';
        ++i;
        if (rng.bernoulli(config.newline_insert_prob)) {
          variant.append(1 + rng.below(config.max_inserted_lines), '\n');
        }
        continue;
      }
      if (horizontal(c)) {
        const std::size_t run_begin = i;
        while (i < text.size() && horizontal(text[i])) ++i;
        variant.append(text.substr(run_begin, i - run_begin));
        const bool inner = run_begin > 0 && !is_space(text[run_begin - 1]) &&
                           i < text.size() && !is_space(text[i]);
        if (inner && rng.bernoulli(config.space_insert_prob)) {
          variant.append(1 + rng.below(config.max_inserted_spaces), ' ');
        }
        continue;
      }
      variant += c;
      ++i;
    }
    out.variants.push_back(std::move(variant));
  }
  return out;
}

// Picks non-overlapping, non-adjacent spans of `span_len` tokens covering
// roughly `fraction` of `n_tokens`. Always returns at least one span.
inline std::vector<TokenSpan> select_mask_spans(std::size_t n_tokens,
                                                double fraction,
                                                std::size_t span_len, Rng& rng) {
  if (n_tokens == 0) return {};
  span_len = std::min(span_len, n_tokens);
  const auto target = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(
             fraction * static_cast<double>(n_tokens) /
             static_cast<double>(span_len))));
  const std::size_t starts = n_tokens - span_len + 1;
  std::vector<TokenSpan> spans;
  for (std::size_t attempt = 0; spans.size() < target && attempt < 20 * target;
       ++attempt) {
    const std::size_t s = rng.below(starts);
    const TokenSpan cand{s, s + span_len};
    const bool clash = std::any_of(spans.begin(), spans.end(), [&](const auto& o) {
      return cand.start <= o.end && o.start <= cand.end;
    });
    if (!clash) spans.push_back(cand);
  }
  std::sort(spans.begin(), spans.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  return spans;
}

inline PerturbedSet perturb_mask_fill(std::string_view text,
                                      const PerturbationConfig& config,
                                      const FillModel& fill_model) {
  if (text.empty()) fail(ErrorKind::kInvalidInput, "text is empty");
  config.validate();
  const std::size_t n_tokens = word_ranges(text).size();
  if (n_tokens == 0) {
    fail(ErrorKind::kInvalidInput, "text has no tokens to mask");
  }
  PerturbedSet out{std::string(text), {}, config};
  out.config.kind = PerturbationKind::kMaskFill;
  for (std::size_t v = 0; v < config.k; ++v) {
    Rng rng(mix_seed(config.seed, v));
    const auto spans = select_mask_spans(n_tokens, config.mask_span_fraction,
                                         config.mask_span_len, rng);
    try {
      out.variants.push_back(
          fill_model.fill(text, spans, mix_seed(config.seed ^ 0xf111ULL, v)));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kPerturbationUnavailable) throw;
      throw Error(ErrorKind::kPerturbationUnavailable, e.what(), e.retriable());
    } catch (const std::exception& e) {
      throw Error(ErrorKind::kPerturbationUnavailable, e.what(), true);
    }
  }
  return out;
}

// Dispatches on config.kind. `fill_model` is required for mask-fill only.
inline PerturbedSet perturb(std::string_view text,
                            const PerturbationConfig& config,
                            const FillModel* fill_model = nullptr) {
  switch (config.kind) {
    case PerturbationKind::kWhitespaceNewline:
      return perturb_whitespace(text, config);
    case PerturbationKind::kMaskFill:
      if (!fill_model) {
        fail(ErrorKind::kPerturbationUnavailable, "no fill model configured");
      }
      return perturb_mask_fill(text, config, *fill_model);
    case PerturbationKind::kIdentity: {
      if (text.empty()) fail(ErrorKind::kInvalidInput, "text is empty");
      auto set = perturb_identity(text, config.k);
      set.config = config;
      return set;
    }
  }
  fail(ErrorKind::kInvalidInput, "unknown perturbation kind");
}

}  // namespace codeppl
