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

// ROC/AUC over oriented detector scores, per-group evaluation and detection
// speed measurement.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "codeppl/dataset.hpp"
#include "codeppl/detectors.hpp"
#include "codeppl/error.hpp"
#include "codeppl/perturbation.hpp"
#include "codeppl/rng.hpp"
#include "codeppl/token_scoring.hpp"
#include "json.hpp"

namespace codeppl {

struct LabeledScore {
  std::string sample_id;
  double score = 0.0;
  bool positive = false;  // llm = positive, human = negative
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // samples with score >= threshold are flagged
};

namespace detail {

struct RocCounts {
  std::uint64_t fp = 0;
  std::uint64_t tp = 0;
  double threshold = 0.0;
};

// Cumulative (fp, tp) after admitting each distinct score, highest first,
// preceded by the (0, 0) sentinel at +inf.
inline std::vector<RocCounts> roc_counts(std::span<const LabeledScore> scores,
                                         std::uint64_t& n_pos,
                                         std::uint64_t& n_neg) {
  n_pos = n_neg = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score))
      fail(ErrorKind::kInvalidInput, "score for " + s.sample_id + " is not finite");
    (s.positive ? n_pos : n_neg) += 1;
  }
  if (n_pos == 0 || n_neg == 0) {
    fail(ErrorKind::kSingleClass, "ROC needs both positive and negative labels");
  }
  std::vector<const LabeledScore*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->score > b->score; });

  std::vector<RocCounts> out{{0, 0, std::numeric_limits<double>::infinity()}};
  RocCounts cur;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (order[i]->positive ? cur.tp : cur.fp) += 1;
    if (i + 1 == order.size() || order[i + 1]->score != order[i]->score) {
      cur.threshold = order[i]->score;
      out.push_back(cur);
    }
  }
  return out;
}

}  // namespace detail

inline std::vector<RocPoint> roc_curve(std::span<const LabeledScore> scores) {
  std::uint64_t n_pos = 0, n_neg = 0;
  const auto counts = detail::roc_counts(scores, n_pos, n_neg);
  std::vector<RocPoint> out;
  out.reserve(counts.size());
  for (const auto& c : counts) {
    out.push_back({static_cast<double>(c.fp) / static_cast<double>(n_neg),
                   static_cast<double>(c.tp) / static_cast<double>(n_pos),
                   c.threshold});
  }
  return out;
}

// Trapezoidal area under the ROC curve, accumulated on integer counts so a
// single division produces the result. Ties form diagonal segments, which is
// the half-credit convention.
struct AucFraction {
  std::uint64_t twice_area = 0;  // 2 * area in count units
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;
  double value() const {
    return static_cast<double>(twice_area) /
           (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
  }
};

inline AucFraction auc_fraction(std::span<const LabeledScore> scores) {
  AucFraction f;
  const auto counts = detail::roc_counts(scores, f.n_pos, f.n_neg);
  for (std::size_t i = 1; i < counts.size(); ++i) {
    f.twice_area +=
        (counts[i].fp - counts[i - 1].fp) * (counts[i].tp + counts[i - 1].tp);
  }
  return f;
}

inline double auc(std::span<const LabeledScore> scores) {
  return auc_fraction(scores).value();
}

// ---- detection pipeline -----------------------------------------------------

inline PerturbationKind default_perturbation(DetectorKind kind) {
  return kind == DetectorKind::kDetectGpt ? PerturbationKind::kMaskFill
                                          : PerturbationKind::kWhitespaceNewline;
}

// Scores one sample end to end: score the original, and for perturbation
// detectors generate k variants and score each of them too.
struct DetectionPipeline {
  DetectorKind kind = DetectorKind::kLogRankMean;
  const Scorer* scorer = nullptr;
  ScorerConfig scorer_config;
  PerturbationConfig perturbation;
  const FillModel* fill = nullptr;

  void validate() const {
    if (!scorer) fail(ErrorKind::kInvalidInput, "pipeline has no scorer");
    if (needs_perturbation(kind)) {
      perturbation.validate();
      if (perturbation.k < min_variants(kind)) {
        fail(ErrorKind::kInvalidInput,
             std::string(to_string(kind)) + " requires k >= " +
                 std::to_string(min_variants(kind)));
      }
      if (perturbation.kind == PerturbationKind::kMaskFill && !fill) {
        fail(ErrorKind::kInvalidInput, "mask-fill perturbation needs a fill model");
      }
    }
  }

  DetectorScore run(const std::string& sample_id, std::string_view code) const {
    const ScoredSequence original =
        score_sequence(*scorer, code, std::nullopt, scorer_config, sample_id);
    if (!needs_perturbation(kind)) return compute_detector(kind, original, {});

    PerturbationConfig cfg = perturbation;
    cfg.seed = mix_seed(perturbation.seed, fnv1a(sample_id));
    const PerturbedSet set = perturb(code, cfg, fill);
    std::vector<ScoredSequence> variants;
    variants.reserve(set.variants.size());
    for (const auto& v : set.variants) {
      variants.push_back(
          score_sequence(*scorer, v, std::nullopt, scorer_config, sample_id));
    }
    return compute_detector(kind, original, variants);
  }

  // Same pipeline, different backend; used to interpose a CountingScorer.
  DetectionPipeline with_scorer(const Scorer& s) const {
    DetectionPipeline p = *this;
    p.scorer = &s;
    return p;
  }
};

namespace detail {

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// thrown is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !stop; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
            stop = true;
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

struct EvalReport {
  std::string group;  // e.g. "language=C++"
  DetectorKind detector = DetectorKind::kLogP;
  std::optional<double> auc;  // absent unless both classes survived
  std::size_t n_pairs = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t skipped = 0;  // samples whose detector input was degenerate
  double seconds_per_sample = 0.0;
  std::uint64_t scorer_calls_per_sample = 0;
  std::vector<RocPoint> roc;
};

struct EvalOptions {
  std::size_t n = 500;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
};

namespace detail {

inline double elapsed_seconds(std::chrono::steady_clock::time_point since) {
  const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now() - since)
                      .count();
  return static_cast<double>(std::max<std::int64_t>(ns, 1)) * 1e-9;
}

}  // namespace detail

// Evaluates one detector on a single group of paired samples.
inline EvalReport evaluate_group(std::span<const CodeSample> corpus,
                                 const DetectionPipeline& pipeline,
                                 const Aspect& group, const EvalOptions& opts) {
  pipeline.validate();
  const PairedSampleSet pairs = sample_pairs(corpus, group, opts.n, opts.seed);
  std::vector<const CodeSample*> samples;
  for (const auto& [h, l] : pairs.pairs) {
    samples.push_back(&h);
    samples.push_back(&l);
  }

  CountingScorer counter(*pipeline.scorer);
  const DetectionPipeline counted = pipeline.with_scorer(counter);
  std::vector<std::optional<double>> results(samples.size());
  const auto start = std::chrono::steady_clock::now();
  detail::parallel_for(samples.size(), opts.parallelism, [&](std::size_t i) {
    try {
      results[i] = counted.run(samples[i]->id, samples[i]->code).oriented;
    } catch (const Error& e) {
      if (!e.degenerate()) throw;
    }
  });
  const double seconds = detail::elapsed_seconds(start);

  EvalReport r;
  r.group = group.label();
  r.detector = pipeline.kind;
  r.n_pairs = opts.n;
  std::vector<LabeledScore> labeled;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!results[i]) {
      ++r.skipped;
      continue;
    }
    const bool pos = samples[i]->author == Author::kLlm;
    (pos ? r.n_pos : r.n_neg) += 1;
    labeled.push_back({samples[i]->id, *results[i], pos});
  }
  if (r.n_pos > 0 && r.n_neg > 0) {
    r.auc = auc(labeled);
    r.roc = roc_curve(labeled);
  }
  const double count = std::max<double>(1.0, static_cast<double>(samples.size()));
  r.seconds_per_sample = seconds / count;
  r.scorer_calls_per_sample =
      samples.empty() ? 0 : counter.calls() / samples.size();
  return r;
}

// One report per group value of `aspect`. Every group is sampled before any
// scoring starts, so an undersized group fails fast.
inline std::vector<EvalReport> evaluate_groups(std::span<const CodeSample> corpus,
                                               const DetectionPipeline& pipeline,
                                               AspectKind aspect,
                                               const EvalOptions& opts) {
  const auto groups = aspect_groups(aspect, corpus);
  for (const auto& g : groups) sample_pairs(corpus, g, opts.n, opts.seed);
  std::vector<EvalReport> out;
  for (const auto& g : groups) out.push_back(evaluate_group(corpus, pipeline, g, opts));
  return out;
}

struct BenchResult {
  double seconds_per_sample = 0.0;
  std::uint64_t scorer_calls_per_sample = 0;
  double total_seconds = 0.0;
  std::size_t skipped = 0;  // degenerate runs, still timed
};

// Serial by construction so per-sample wall-clock time is honest.
inline BenchResult bench_speed(const DetectionPipeline& pipeline,
                               std::span<const CodeSample> samples,
                               std::size_t repetitions) {
  if (samples.empty()) fail(ErrorKind::kInvalidInput, "no samples to benchmark");
  if (repetitions < 1) fail(ErrorKind::kInvalidInput, "repetitions must be >= 1");
  pipeline.validate();
  CountingScorer counter(*pipeline.scorer);
  const DetectionPipeline counted = pipeline.with_scorer(counter);
  BenchResult r;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (const auto& s : samples) {
      try {
        counted.run(s.id, s.code);
      } catch (const Error& e) {
        if (!e.degenerate()) throw;
        ++r.skipped;
      }
    }
  }
  r.total_seconds = detail::elapsed_seconds(start);
  const auto runs = samples.size() * repetitions;
  r.seconds_per_sample = r.total_seconds / static_cast<double>(runs);
  r.scorer_calls_per_sample = counter.calls() / runs;
  return r;
}

// ---- report output ----------------------------------------------------------

// Timing lives in its own section so the rest can be compared byte for byte
// across runs.
inline nlohmann::json reports_to_json(std::span<const EvalReport> reports) {
  nlohmann::json results = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json roc = nlohmann::json::array();
    for (const auto& p : r.roc) {
      roc.push_back({p.fpr, p.tpr,
                     std::isinf(p.threshold) ? nlohmann::json("inf")
                                             : nlohmann::json(p.threshold)});
    }
    results.push_back({{"group", r.group},
                       {"detector", to_string(r.detector)},
                       {"auc", r.auc ? nlohmann::json(*r.auc) : nlohmann::json(nullptr)},
                       {"n", r.n_pairs},
                       {"n_pos", r.n_pos},
                       {"n_neg", r.n_neg},
                       {"skipped", r.skipped},
                       {"scorer_calls_per_sample", r.scorer_calls_per_sample},
                       {"roc", std::move(roc)}});
    timing.push_back({{"group", r.group},
                      {"detector", to_string(r.detector)},
                      {"seconds_per_sample", r.seconds_per_sample}});
  }
  return {{"results", std::move(results)}, {"timing", std::move(timing)}};
}

inline void write_reports_csv(std::ostream& out,
                              std::span<const EvalReport> reports) {
  out << "group,detector,auc,n,skipped,seconds_per_sample,scorer_calls\n";
  for (const auto& r : reports) {
    out << r.group << ',' << to_string(r.detector) << ',';
    if (r.auc) out << nlohmann::json(*r.auc).dump();
    out << ',' << r.n_pairs << ',' << r.skipped << ','
        << nlohmann::json(r.seconds_per_sample).dump() << ','
        << r.scorer_calls_per_sample << '\n';
  }
}

inline void write_roc_csv(std::ostream& out, std::span<const RocPoint> roc) {
  out << "fpr,tpr,threshold\n";
  for (const auto& p : roc) {
    out << nlohmann::json(p.fpr).dump() << ',' << nlohmann::json(p.tpr).dump()
        << ',' << (std::isinf(p.threshold) ? std::string("inf")
                                           : nlohmann::json(p.threshold).dump())
        << '\n';
  }
}

}  // namespace codeppl
