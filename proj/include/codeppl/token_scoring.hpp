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

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codeppl/error.hpp"
#include "json.hpp"

namespace codeppl {

// One ground-truth token as seen by a scoring model.
struct TokenScore {
  std::string token_text;
  std::size_t position = 0;
  double gt_prob = 1.0;   // in (0, 1]
  double logprob = 0.0;   // ln(gt_prob)
  std::int64_t rank = 1;  // 1 = most probable token at this position
  std::optional<double> dist_entropy;  // full next-token entropy, nats
};

inline TokenScore token_from_prob(std::string text, std::size_t position,
                                  double prob, std::int64_t rank,
                                  std::optional<double> entropy = {}) {
  return {std::move(text), position, prob, std::log(prob), rank, entropy};
}

inline TokenScore token_from_logprob(std::string text, std::size_t position,
                                     double logprob, std::int64_t rank,
                                     std::optional<double> entropy = {}) {
  return {std::move(text), position, std::exp(logprob), logprob, rank,
          entropy};
}

struct ScoredSequence {
  std::string sample_id;
  std::string model_id;
  std::vector<TokenScore> scores;
  // Set when the text had more tokens than ScorerConfig::max_tokens and only
  // the leading max_tokens were scored.
  bool truncated = false;

  std::size_t size() const noexcept { return scores.size(); }
  bool empty() const noexcept { return scores.empty(); }
};

enum class ContextMode { kCodeOnly, kPromptPlusCode };

struct ScorerConfig {
  std::string model_id = "toy-ngram";
  ContextMode context_mode = ContextMode::kCodeOnly;
  std::size_t max_tokens = 2048;
  std::uint64_t seed = 0;
};

// A scoring backend. Implementations must be safe for concurrent calls.
class Scorer {
 public:
  virtual ~Scorer() = default;

  // Scores every model token of `text`. `context` is only consulted in
  // prompt-plus-code mode, where it conditions the first tokens of `text`
  // without being scored itself.
  virtual ScoredSequence score(std::string_view text,
                               std::optional<std::string_view> context,
                               const ScorerConfig& config) const = 0;
};

// Throws `kind` when a sequence breaks the TokenScore/ScoredSequence
// invariants. Remote responses use kProtocolError, local ones kInvalidInput.
inline void validate_sequence(const ScoredSequence& seq,
                              ErrorKind kind = ErrorKind::kInvalidInput) {
  if (seq.scores.empty()) fail(kind, "scored sequence has no tokens");
  for (std::size_t i = 0; i < seq.scores.size(); ++i) {
    const TokenScore& s = seq.scores[i];
    const std::string at = "token " + std::to_string(i) + ": ";
    if (s.position != i) fail(kind, at + "position gap");
    if (!(s.gt_prob > 0.0 && s.gt_prob <= 1.0))
      fail(kind, at + "gt_prob outside (0, 1]");
    if (!(s.logprob <= 0.0)) fail(kind, at + "logprob must be <= 0");
    if (std::abs(std::exp(s.logprob) - s.gt_prob) > 1e-9)
      fail(kind, at + "logprob inconsistent with gt_prob");
    if (s.rank < 1) fail(kind, at + "rank must be >= 1");
    if (s.dist_entropy && !(*s.dist_entropy >= 0.0))
      fail(kind, at + "entropy must be >= 0");
  }
}

inline ScoredSequence score_sequence(const Scorer& scorer,
                                     std::string_view text,
                                     std::optional<std::string_view> context,
                                     const ScorerConfig& config,
                                     std::string sample_id = {}) {
  if (text.empty()) fail(ErrorKind::kInvalidInput, "text is empty");
  if (config.max_tokens < 1)
    fail(ErrorKind::kInvalidInput, "max_tokens must be >= 1");
  ScoredSequence seq;
  try {
    seq = scorer.score(text, context, config);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kScorerUnavailable, e.what(), true);
  }
  validate_sequence(seq);
  seq.sample_id = std::move(sample_id);
  return seq;
}

// Decorator that counts backend calls; used for cost audits.
class CountingScorer final : public Scorer {
 public:
  explicit CountingScorer(const Scorer& inner) : inner_(inner) {}

  ScoredSequence score(std::string_view text,
                       std::optional<std::string_view> context,
                       const ScorerConfig& config) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.score(text, context, config);
  }

  std::uint64_t calls() const noexcept {
    return calls_.load(std::memory_order_relaxed);
  }
  void reset() noexcept { calls_.store(0, std::memory_order_relaxed); }

 private:
  const Scorer& inner_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

inline nlohmann::json to_json(const TokenScore& s) {
  return {{"token", s.token_text},
          {"position", s.position},
          {"gt_prob", s.gt_prob},
          {"logprob", s.logprob},
          {"rank", s.rank},
          {"entropy", s.dist_entropy ? nlohmann::json(*s.dist_entropy)
                                     : nlohmann::json(nullptr)}};
}

inline nlohmann::json to_json(const ScoredSequence& seq) {
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& s : seq.scores) tokens.push_back(to_json(s));
  return {{"sample_id", seq.sample_id},
          {"model_id", seq.model_id},
          {"t", seq.size()},
          {"truncated", seq.truncated},
          {"tokens", std::move(tokens)}};
}

// Compact single-line form; invalid UTF-8 in token text is replaced rather
// than thrown on, since byte-level tokens may split code points.
inline std::string dump_line(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace codeppl
