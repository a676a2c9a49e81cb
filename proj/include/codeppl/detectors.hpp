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

// The eight perplexity-based detectors. Each takes scored sequences and
// returns a raw statistic; orient() maps it onto a common axis where higher
// means "more likely LLM-generated".

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codeppl/error.hpp"
#include "codeppl/token_scoring.hpp"
#include "json.hpp"

namespace codeppl {

enum class DetectorKind {
  kLogP,
  kEntropy,
  kRankMean,
  kLogRankMean,
  kLrr,
  kDetectGpt,
  kNpr,
  kDetectCodeGpt,
};

inline constexpr std::array<DetectorKind, 8> kAllDetectors{
    DetectorKind::kLogP,      DetectorKind::kEntropy,
    DetectorKind::kRankMean,  DetectorKind::kLogRankMean,
    DetectorKind::kLrr,       DetectorKind::kDetectGpt,
    DetectorKind::kNpr,       DetectorKind::kDetectCodeGpt};

inline constexpr bool needs_perturbation(DetectorKind kind) {
  return kind == DetectorKind::kDetectGpt || kind == DetectorKind::kNpr ||
         kind == DetectorKind::kDetectCodeGpt;
}

// Smallest number of perturbed variants the detector is defined for.
inline constexpr std::size_t min_variants(DetectorKind kind) {
  if (kind == DetectorKind::kDetectGpt) return 2;
  return needs_perturbation(kind) ? 1 : 0;
}

inline std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kLogP: return "logp";
    case DetectorKind::kEntropy: return "entropy";
    case DetectorKind::kRankMean: return "rank";
    case DetectorKind::kLogRankMean: return "logrank";
    case DetectorKind::kLrr: return "lrr";
    case DetectorKind::kDetectGpt: return "detectgpt";
    case DetectorKind::kNpr: return "npr";
    case DetectorKind::kDetectCodeGpt: return "detectcodegpt";
  }
  return "unknown";
}

inline std::optional<DetectorKind> parse_detector(std::string_view name) {
  for (DetectorKind k : kAllDetectors) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

struct DetectorScore {
  DetectorKind kind = DetectorKind::kLogP;
  double raw = 0.0;
  double oriented = 0.0;
  int orientation_sign = 1;
};

namespace detail {

inline void require_tokens(const ScoredSequence& seq) {
  if (seq.empty()) fail(ErrorKind::kInvalidInput, "empty scored sequence");
}

// Mean computed around the first element: identical inputs give back that
// exact value, which keeps the identity-perturbation invariants exact.
inline double shifted_mean(std::span<const double> xs) {
  const double base = xs.front();
  double acc = 0.0;
  for (double x : xs) acc += x - base;
  return base + acc / static_cast<double>(xs.size());
}

inline double sum_logprob(const ScoredSequence& seq) {
  double s = 0.0;
  for (const auto& t : seq.scores) s += t.logprob;
  return s;
}

inline double sum_log_rank(const ScoredSequence& seq) {
  double s = 0.0;
  for (const auto& t : seq.scores) s += std::log(static_cast<double>(t.rank));
  return s;
}

inline void require_variants(std::span<const ScoredSequence> perturbed,
                             std::size_t min_k) {
  if (perturbed.size() < min_k) {
    fail(ErrorKind::kInvalidInput,
         "need at least " + std::to_string(min_k) + " perturbed sequences, got " +
             std::to_string(perturbed.size()));
  }
  for (const auto& p : perturbed) require_tokens(p);
}

}  // namespace detail

inline double log_p(const ScoredSequence& seq) {
  detail::require_tokens(seq);
  return detail::sum_logprob(seq) / static_cast<double>(seq.size());
}

// Averages -p ln p over the ground-truth tokens only; the full-distribution
// entropy is carried separately in TokenScore::dist_entropy.
inline double entropy(const ScoredSequence& seq) {
  detail::require_tokens(seq);
  double s = 0.0;
  for (const auto& t : seq.scores) s += t.gt_prob * t.logprob;
  return -s / static_cast<double>(seq.size());
}

inline double rank_mean(const ScoredSequence& seq) {
  detail::require_tokens(seq);
  double s = 0.0;
  for (const auto& t : seq.scores) s += static_cast<double>(t.rank);
  return s / static_cast<double>(seq.size());
}

inline double log_rank_mean(const ScoredSequence& seq) {
  detail::require_tokens(seq);
  return detail::sum_log_rank(seq) / static_cast<double>(seq.size());
}

inline double lrr(const ScoredSequence& seq) {
  detail::require_tokens(seq);
  const double denom = detail::sum_log_rank(seq);
  if (denom <= 0.0) {
    fail(ErrorKind::kDegenerateDenominator,
         "LRR undefined: every token has rank 1");
  }
  return -detail::sum_logprob(seq) / denom;
}

// Discrepancy normalized by the sample (k-1) standard deviation. Takes the
// per-token mean log-probability of each sequence.
inline double detect_gpt_from_means(double original,
                                    std::span<const double> perturbed) {
  if (perturbed.size() < 2) {
    fail(ErrorKind::kInvalidInput, "DetectGPT needs k >= 2 perturbations");
  }
  const auto [lo, hi] = std::minmax_element(perturbed.begin(), perturbed.end());
  if (*lo == *hi) {
    fail(ErrorKind::kDegenerateVariance,
         "perturbed log-probabilities have zero spread");
  }
  const double mean = detail::shifted_mean(perturbed);
  double ss = 0.0;
  for (double x : perturbed) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(perturbed.size() - 1));
  if (!(sd > 0.0)) {
    fail(ErrorKind::kDegenerateVariance,
         "perturbed log-probabilities have zero spread");
  }
  return (original - mean) / sd;
}

inline double detect_gpt(const ScoredSequence& original,
                         std::span<const ScoredSequence> perturbed) {
  detail::require_variants(perturbed, 2);
  std::vector<double> means;
  means.reserve(perturbed.size());
  for (const auto& p : perturbed) means.push_back(log_p(p));
  return detect_gpt_from_means(log_p(original), means);
}

inline double npr_from_means(double original, std::span<const double> perturbed) {
  if (perturbed.empty()) {
    fail(ErrorKind::kInvalidInput, "NPR needs k >= 1 perturbations");
  }
  if (original == 0.0) {
    fail(ErrorKind::kDegenerateDenominator,
         "NPR undefined: original log-rank mean is 0");
  }
  return detail::shifted_mean(perturbed) / original;
}

inline double npr(const ScoredSequence& original,
                  std::span<const ScoredSequence> perturbed) {
  detail::require_variants(perturbed, 1);
  std::vector<double> means;
  means.reserve(perturbed.size());
  for (const auto& p : perturbed) means.push_back(log_rank_mean(p));
  return npr_from_means(log_rank_mean(original), means);
}

// M / L(x) - mean_i(M / L(x~_i)) with M = mean_p L(x~_p) held fixed, where L
// is the per-token mean log-rank.
inline double detect_code_gpt_from_means(double original,
                                         std::span<const double> perturbed) {
  if (perturbed.empty()) {
    fail(ErrorKind::kInvalidInput, "DetectCodeGPT needs k >= 1 perturbations");
  }
  if (original == 0.0) {
    fail(ErrorKind::kDegenerateDenominator,
         "DetectCodeGPT undefined: original log-rank mean is 0");
  }
  std::vector<double> ratios;
  ratios.reserve(perturbed.size());
  const double m = detail::shifted_mean(perturbed);
  for (double x : perturbed) {
    if (x == 0.0) {
      fail(ErrorKind::kDegenerateDenominator,
           "DetectCodeGPT undefined: a perturbed log-rank mean is 0");
    }
    ratios.push_back(m / x);
  }
  return m / original - detail::shifted_mean(ratios);
}

inline double detect_code_gpt(const ScoredSequence& original,
                              std::span<const ScoredSequence> perturbed) {
  detail::require_variants(perturbed, 1);
  std::vector<double> means;
  means.reserve(perturbed.size());
  for (const auto& p : perturbed) means.push_back(log_rank_mean(p));
  return detect_code_gpt_from_means(log_rank_mean(original), means);
}

// +1 where the detector's own hypothesis says LLM code scores higher, -1 for
// rank and log-rank, which LLM code is expected to score lower on.
inline constexpr int orientation_sign(DetectorKind kind) {
  return kind == DetectorKind::kRankMean || kind == DetectorKind::kLogRankMean
             ? -1
             : 1;
}

inline DetectorScore orient(DetectorKind kind, double raw) {
  if (!std::isfinite(raw)) {
    fail(ErrorKind::kInvalidInput, "detector value is not finite");
  }
  const int sign = orientation_sign(kind);
  return {kind, raw, sign * raw, sign};
}

// Dispatches on kind. Perturbation-free detectors ignore `perturbed`.
inline DetectorScore compute_detector(DetectorKind kind,
                                      const ScoredSequence& original,
                                      std::span<const ScoredSequence> perturbed) {
  double raw = 0.0;
  switch (kind) {
    case DetectorKind::kLogP: raw = log_p(original); break;
    case DetectorKind::kEntropy: raw = entropy(original); break;
    case DetectorKind::kRankMean: raw = rank_mean(original); break;
    case DetectorKind::kLogRankMean: raw = log_rank_mean(original); break;
    case DetectorKind::kLrr: raw = lrr(original); break;
    case DetectorKind::kDetectGpt: raw = detect_gpt(original, perturbed); break;
    case DetectorKind::kNpr: raw = npr(original, perturbed); break;
    case DetectorKind::kDetectCodeGpt:
      raw = detect_code_gpt(original, perturbed);
      break;
  }
  return orient(kind, raw);
}

// {sample_id, detector, raw, oriented, error}; raw/oriented are null when
// the detector failed for this sample.
inline nlohmann::json detector_record(std::string_view sample_id,
                                      DetectorKind kind,
                                      const std::optional<DetectorScore>& score,
                                      const std::optional<std::string>& error) {
  nlohmann::json j;
  j["sample_id"] = sample_id;
  j["detector"] = to_string(kind);
  j["raw"] = score ? nlohmann::json(score->raw) : nlohmann::json(nullptr);
  j["oriented"] =
      score ? nlohmann::json(score->oriented) : nlohmann::json(nullptr);
  j["error"] = error ? nlohmann::json(*error) : nlohmann::json(nullptr);
  return j;
}

}  // namespace codeppl
