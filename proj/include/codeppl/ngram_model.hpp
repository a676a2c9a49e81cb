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

// Character-level n-gram model with add-k smoothing. This is the offline,
// deterministic stand-in for a code LLM: it yields the same per-token
// probability, rank and entropy records a real model would.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codeppl/error.hpp"
#include "codeppl/rng.hpp"
#include "codeppl/token_scoring.hpp"

namespace codeppl {

inline constexpr std::string_view kUnknownToken = "<unk>";

// Splits text into UTF-8 code points. A malformed lead or continuation byte
// becomes a one-byte token of its own.
inline std::vector<std::string> tokenize_chars(std::string_view text) {
  std::vector<std::string> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead < 0xF8) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    if (lead >= 0xF8 || (lead >= 0x80 && lead < 0xC0)) len = 1;
    if (i + len > text.size()) len = 1;
    for (std::size_t j = 1; j < len; ++j) {
      if ((static_cast<unsigned char>(text[i + j]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

class NgramModel {
 public:
  using TokenId = std::int32_t;
  static constexpr TokenId kBos = -1;

  // `order` counts the predicted token: order 1 is a unigram model, order 3
  // conditions on the two previous tokens.
  static NgramModel train(std::span<const std::string> corpus, int order,
                          double smoothing) {
    if (corpus.empty()) fail(ErrorKind::kInvalidInput, "corpus is empty");
    if (order < 1) fail(ErrorKind::kInvalidInput, "order must be >= 1");
    if (!(smoothing > 0.0) || !std::isfinite(smoothing))
      fail(ErrorKind::kInvalidInput, "smoothing constant must be > 0");

    NgramModel m;
    m.order_ = order;
    m.smoothing_ = smoothing;

    std::vector<std::vector<std::string>> docs;
    docs.reserve(corpus.size());
    std::vector<std::string> vocab{std::string(kUnknownToken)};
    for (const auto& text : corpus) {
      docs.push_back(tokenize_chars(text));
      vocab.insert(vocab.end(), docs.back().begin(), docs.back().end());
    }
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    m.vocab_ = std::move(vocab);

    for (const auto& doc : docs) {
      std::vector<TokenId> ids(static_cast<std::size_t>(order - 1), kBos);
      for (const auto& tok : doc) ids.push_back(m.id_of(tok));
      for (std::size_t i = static_cast<std::size_t>(order - 1); i < ids.size();
           ++i) {
        std::vector<TokenId> key(ids.begin() + static_cast<long>(i) - (order - 1),
                                 ids.begin() + static_cast<long>(i));
        auto& row = m.counts_[std::move(key)];
        if (row.counts.empty()) row.counts.assign(m.vocab_.size(), 0);
        ++row.counts[static_cast<std::size_t>(ids[i])];
        ++row.total;
      }
    }
    return m;
  }

  int order() const noexcept { return order_; }
  double smoothing() const noexcept { return smoothing_; }
  // Sorted lexicographically; the id of a token is its index here.
  const std::vector<std::string>& vocab() const noexcept { return vocab_; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }

  TokenId id_of(std::string_view token) const {
    auto it = std::lower_bound(vocab_.begin(), vocab_.end(), token);
    if (it == vocab_.end() || *it != token) return unknown_id();
    return static_cast<TokenId>(it - vocab_.begin());
  }
  TokenId unknown_id() const {
    auto it = std::lower_bound(vocab_.begin(), vocab_.end(), kUnknownToken);
    return static_cast<TokenId>(it - vocab_.begin());
  }

  std::vector<TokenId> encode(std::string_view text) const {
    std::vector<TokenId> ids;
    for (const auto& tok : tokenize_chars(text)) ids.push_back(id_of(tok));
    return ids;
  }

  // Next-token view for the context formed by the last order-1 ids of
  // `history` (left-padded with BOS).
  class Step {
   public:
    double prob(TokenId v) const {
      const double c = counts_ ? (*counts_)[static_cast<std::size_t>(v)] : 0;
      return (c + k_) / denom_;
    }

    // 1 + #{strictly more probable} + #{equally probable, lexicographically
    // earlier}. Compared on integer counts, so no float ties are missed.
    std::int64_t rank(TokenId v) const {
      if (!counts_) return static_cast<std::int64_t>(v) + 1;
      const auto& c = *counts_;
      const std::uint32_t cv = c[static_cast<std::size_t>(v)];
      std::int64_t r = 1;
      for (std::size_t u = 0; u < c.size(); ++u) {
        if (c[u] > cv || (c[u] == cv && u < static_cast<std::size_t>(v))) ++r;
      }
      return r;
    }

    double entropy() const {
      double h = 0.0;
      for (std::size_t v = 0; v < vocab_size_; ++v) {
        const double p = prob(static_cast<TokenId>(v));
        h -= p * std::log(p);
      }
      return std::max(h, 0.0);
    }

    TokenId argmax() const {
      if (!counts_) return 0;
      const auto& c = *counts_;
      return static_cast<TokenId>(std::max_element(c.begin(), c.end()) -
                                  c.begin());
    }

    TokenId sample(Rng& rng) const {
      double u = rng.uniform();
      for (std::size_t v = 0; v + 1 < vocab_size_; ++v) {
        u -= prob(static_cast<TokenId>(v));
        if (u < 0.0) return static_cast<TokenId>(v);
      }
      return static_cast<TokenId>(vocab_size_ - 1);
    }

   private:
    friend class NgramModel;
    const std::vector<std::uint32_t>* counts_ = nullptr;
    std::size_t vocab_size_ = 0;
    double k_ = 0.0;
    double denom_ = 1.0;
  };

  Step step(std::span<const TokenId> history) const {
    std::vector<TokenId> key(static_cast<std::size_t>(order_ - 1), kBos);
    const std::size_t take =
        std::min(history.size(), static_cast<std::size_t>(order_ - 1));
    std::copy(history.end() - static_cast<long>(take), history.end(),
              key.end() - static_cast<long>(take));
    Step s;
    s.vocab_size_ = vocab_.size();
    s.k_ = smoothing_;
    const double kv = smoothing_ * static_cast<double>(vocab_.size());
    if (auto it = counts_.find(key); it != counts_.end()) {
      s.counts_ = &it->second.counts;
      s.denom_ = static_cast<double>(it->second.total) + kv;
    } else {
      s.denom_ = kv;
    }
    return s;
  }

  // Full next-token distribution, most probable first; equal probabilities
  // ordered lexicographically by token.
  std::vector<std::pair<std::string, double>> next_distribution(
      std::span<const std::string> context) const {
    std::vector<TokenId> ids;
    for (const auto& tok : context) ids.push_back(id_of(tok));
    const Step s = step(ids);
    std::vector<std::pair<std::string, double>> out;
    out.reserve(vocab_.size());
    for (std::size_t v = 0; v < vocab_.size(); ++v) {
      out.emplace_back(vocab_[v], s.prob(static_cast<TokenId>(v)));
    }
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
      return a.second > b.second;
    });
    return out;
  }

  // Extends `history` by `n` tokens. With rng == nullptr each step takes the
  // most probable token; otherwise tokens are sampled from the model.
  std::vector<TokenId> continue_sequence(std::vector<TokenId> history,
                                         std::size_t n,
                                         Rng* rng = nullptr) const {
    for (std::size_t i = 0; i < n; ++i) {
      const Step s = step(history);
      history.push_back(rng ? s.sample(*rng) : s.argmax());
    }
    return history;
  }

  std::string decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) out += vocab_[static_cast<std::size_t>(id)];
    return out;
  }

 private:
  struct Row {
    std::vector<std::uint32_t> counts;
    std::uint64_t total = 0;
  };

  int order_ = 1;
  double smoothing_ = 1.0;
  std::vector<std::string> vocab_;
  std::map<std::vector<TokenId>, Row> counts_;
};

inline std::vector<std::pair<std::string, double>> toy_next_distribution(
    const NgramModel& model, std::span<const std::string> context) {
  return model.next_distribution(context);
}

// Scorer backed by a trained NgramModel. Immutable, so concurrent calls are
// safe.
class ToyScorer final : public Scorer {
 public:
  explicit ToyScorer(std::shared_ptr<const NgramModel> model)
      : model_(std::move(model)) {}

  const NgramModel& model() const { return *model_; }

  ScoredSequence score(std::string_view text,
                       std::optional<std::string_view> context,
                       const ScorerConfig& config) const override {
    const auto tokens = tokenize_chars(text);
    std::vector<NgramModel::TokenId> history;
    if (config.context_mode == ContextMode::kPromptPlusCode && context) {
      history = model_->encode(*context);
    }
    ScoredSequence seq;
    seq.model_id = config.model_id;
    const std::size_t n = std::min(tokens.size(), config.max_tokens);
    seq.truncated = tokens.size() > config.max_tokens;
    seq.scores.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto step = model_->step(history);
      const auto id = model_->id_of(tokens[i]);
      seq.scores.push_back(token_from_prob(tokens[i], i, step.prob(id),
                                           step.rank(id), step.entropy()));
      history.push_back(id);
    }
    return seq;
  }

 private:
  std::shared_ptr<const NgramModel> model_;
};

}  // namespace codeppl
