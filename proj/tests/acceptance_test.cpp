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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "codeppl/cli.hpp"
#include "codeppl/codeppl.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace codeppl {
namespace {

// Collects failed checks for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ |= !ok;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream msg;
    msg.precision(17);
    msg << what << ": got " << got << ", want " << want << " +/- " << tol;
    expect(std::abs(got - want) <= tol, msg.str());
  }
  template <typename Fn>
  void raises(ErrorKind kind, Fn&& fn, const std::string& what) {
    try {
      fn();
      expect(false, what + ": no error raised");
    } catch (const Error& e) {
      expect(e.kind() == kind, what + ": raised " + std::string(to_string(e.kind())));
    }
  }
  bool failed() const { return failed_; }
  const std::vector<std::string>& failures() const { return failures_; }

 private:
  bool failed_ = false;
  std::vector<std::string> failures_;
};

ScoredSequence from_probs(const std::vector<double>& probs,
                          const std::vector<std::int64_t>& ranks) {
  ScoredSequence s;
  for (std::size_t i = 0; i < probs.size(); ++i)
    s.scores.push_back(token_from_prob("t", i, probs[i], ranks[i]));
  return s;
}

ScoredSequence from_ranks(const std::vector<std::int64_t>& ranks) {
  return from_probs(std::vector<double>(ranks.size(), 0.5), ranks);
}

ScoredSequence with_mean_logprob(double m) {
  ScoredSequence s;
  s.scores.push_back(token_from_logprob("t", 0, m, 2));
  return s;
}

oracle::Seq to_oracle(const ScoredSequence& s) {
  oracle::Seq out;
  for (const auto& t : s.scores) out.push_back({t.gt_prob, t.rank});
  return out;
}

void formula_fidelity(Check& c) {
  const double tol = 1e-12;
  c.near(log_p(from_probs({1.0}, {1})), 0.0, tol, "logp [1.0]");
  c.near(log_p(from_probs({0.5, 0.25}, {1, 1})), (std::log(0.5) + std::log(0.25)) / 2, tol,
         "logp [0.5,0.25]");
  c.near(log_p(from_probs({0.31}, {1})), std::log(0.31), tol, "logp [0.31]");
  c.near(entropy(from_probs({1.0, 1.0}, {1, 1})), 0.0, tol, "entropy [1,1]");
  c.near(entropy(from_probs({std::exp(-1.0)}, {1})), std::exp(-1.0), tol, "entropy [1/e]");
  c.near(entropy(from_probs({0.5}, {1})), -0.5 * std::log(0.5), tol, "entropy [0.5]");
  c.near(rank_mean(from_ranks({1, 1, 1})), 1.0, tol, "rank [1,1,1]");
  c.near(log_rank_mean(from_ranks({1, 1, 1})), 0.0, tol, "logrank [1,1,1]");
  c.near(rank_mean(from_ranks({1, 3, 5})), 3.0, tol, "rank [1,3,5]");
  c.near(log_rank_mean(from_ranks({1, 2, 4})), (std::log(2.0) + std::log(4.0)) / 3, tol,
         "logrank [1,2,4]");
  c.near(lrr(from_probs({0.5, 0.25}, {2, 4})), 1.0, tol, "lrr");
  c.raises(ErrorKind::kDegenerateDenominator, [] { lrr(from_ranks({1, 1})); }, "lrr ranks 1");
  c.near(lrr(from_probs({1.0}, {2})), 0.0, tol, "lrr zero numerator");
  const std::vector<ScoredSequence> dg{with_mean_logprob(-1.5), with_mean_logprob(-2.0),
                                       with_mean_logprob(-2.5)};
  c.near(detect_gpt(with_mean_logprob(-1.0), dg), 2.0, tol, "detectgpt");
  const std::vector<ScoredSequence> fours(2, from_ranks({4, 4}));
  c.near(npr(from_ranks({2, 2}), fours), 2.0, tol, "npr");
  const std::vector<double> twos{2.0, 2.0}, spread{1.0, 3.0};
  c.near(detect_code_gpt_from_means(1.0, twos), 1.0, tol, "detectcodegpt [2,2]");
  c.near(detect_code_gpt_from_means(1.0, spread), 2.0 - 0.5 * (2.0 + 2.0 / 3.0), tol,
         "detectcodegpt [1,3]");

  Rng rng(20240601);
  auto random_seq = [&] {
    ScoredSequence s;
    const auto t = 1 + rng.below(10);
    for (std::uint64_t i = 0; i < t; ++i)
      s.scores.push_back(token_from_prob("t", i, 1e-4 + (1 - 1e-4) * rng.uniform(),
                                         1 + static_cast<std::int64_t>(rng.below(50))));
    s.scores[0].rank = 2 + static_cast<std::int64_t>(rng.below(20));
    return s;
  };
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = random_seq();
    std::vector<ScoredSequence> xt;
    const auto k = 2 + rng.below(9);
    for (std::uint64_t i = 0; i < k; ++i) xt.push_back(random_seq());
    std::vector<oracle::Seq> oxt;
    for (const auto& s : xt) oxt.push_back(to_oracle(s));
    const auto ox = to_oracle(x);
    const std::string at = " (trial " + std::to_string(trial) + ")";
    c.near(log_p(x), oracle::logp(ox), tol, "logp" + at);
    c.near(entropy(x), oracle::entropy(ox), tol, "entropy" + at);
    c.near(rank_mean(x), oracle::rank(ox), tol, "rank" + at);
    c.near(log_rank_mean(x), oracle::log_rank(ox), tol, "logrank" + at);
    c.near(lrr(x), oracle::lrr(ox), tol, "lrr" + at);
    c.near(detect_gpt(x, xt), oracle::detect_gpt(ox, oxt), tol, "detectgpt" + at);
    c.near(npr(x, xt), oracle::npr(ox, oxt), tol, "npr" + at);
    c.near(detect_code_gpt(x, xt), oracle::detect_code_gpt(ox, oxt), tol, "detectcodegpt" + at);
  }
}

std::vector<LabeledScore> labeled(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<LabeledScore> out;
  for (double p : pos) out.push_back({"p", p, true});
  for (double n : neg) out.push_back({"n", n, false});
  return out;
}

void auc_oracle(Check& c) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pos, neg;
    const bool ties = trial % 2 == 0;
    auto draw = [&] { return ties ? static_cast<double>(rng.below(6)) : rng.uniform(); };
    const auto np = 2 + rng.below(49), nn = 2 + rng.below(49);
    for (std::uint64_t i = 0; i < np; ++i) pos.push_back(draw());
    for (std::uint64_t i = 0; i < nn; ++i) neg.push_back(draw());
    c.near(auc(labeled(pos, neg)), oracle::pair_auc(pos, neg), 1e-9,
           "instance " + std::to_string(trial));
  }
  c.expect(auc(labeled({2.0, 3.0}, {0.0, 1.0})) == 1.0, "perfect separation");
  c.expect(auc(labeled({1.0, 1.0}, {1.0, 1.0})) == 0.5, "all equal");
  c.expect(auc(labeled({0.9, 0.4}, {0.5, 0.1})) == 0.75, "4-sample case");
}

std::shared_ptr<const NgramModel> code_model(std::uint64_t seed, int order) {
  Rng rng(seed);
  std::vector<std::string> train;
  for (int i = 0; i < 200; ++i) train.push_back(testing::llm_code(rng, 8));
  return std::make_shared<const NgramModel>(NgramModel::train(train, order, 0.1));
}

void identity_invariants(Check& c) {
  ToyScorer scorer(code_model(1, 3));
  Rng rng(33);
  int checked = 0;
  while (checked < 100) {
    const auto text = testing::human_code(rng, 1 + rng.below(4));
    const auto x = score_sequence(scorer, text, std::nullopt, ScorerConfig{});
    if (log_rank_mean(x) <= 0.0) continue;
    const auto set = perturb_identity(text, 1 + rng.below(50));
    std::vector<ScoredSequence> xt;
    for (const auto& v : set.variants)
      xt.push_back(score_sequence(scorer, v, std::nullopt, ScorerConfig{}));
    const std::string at = " (sample " + std::to_string(checked) + ")";
    c.expect(npr(x, xt) == 1.0, "NPR == 1" + at);
    c.expect(detect_code_gpt(x, xt) == 0.0, "DetectCodeGPT == 0" + at);
    if (xt.size() >= 2) {
      c.raises(ErrorKind::kDegenerateVariance, [&] { detect_gpt(x, xt); },
               "DetectGPT degenerate" + at);
    }
    ++checked;
  }
}

void synthetic_separation(Check& c) {
  const auto model = code_model(2, 4);
  ToyScorer scorer(model);
  const auto V = model->vocab_size();
  Rng rng(44);
  std::vector<ScoredSequence> llm, human;
  for (int i = 0; i < 200; ++i) {
    std::vector<NgramModel::TokenId> prefix;
    for (int j = 0; j < 3; ++j) prefix.push_back(static_cast<NgramModel::TokenId>(rng.below(V)));
    const auto ids = model->continue_sequence(prefix, 80);
    llm.push_back(score_sequence(scorer, model->decode(ids), std::nullopt, ScorerConfig{}));

    std::vector<NgramModel::TokenId> noisy = prefix;
    for (int j = 0; j < 80; ++j) {
      if (rng.bernoulli(0.3)) {
        noisy.push_back(static_cast<NgramModel::TokenId>(rng.below(V)));
      } else {
        noisy.push_back(model->step(noisy).sample(rng));
      }
    }
    human.push_back(score_sequence(scorer, model->decode(noisy), std::nullopt, ScorerConfig{}));
  }
  for (DetectorKind kind : {DetectorKind::kLogP, DetectorKind::kLogRankMean}) {
    std::vector<LabeledScore> scores;
    for (const auto& s : llm) scores.push_back({"m", compute_detector(kind, s, {}).oriented, true});
    for (const auto& s : human)
      scores.push_back({"h", compute_detector(kind, s, {}).oriented, false});
    const double a = auc(scores);
    std::printf("       %s AUC = %.4f\n", std::string(to_string(kind)).c_str(), a);
    c.expect(a >= 0.90, std::string(to_string(kind)) + " AUC " + std::to_string(a) + " < 0.90");
  }
}

void bucket_boundaries(Check& c) {
  c.expect(bucket_difficulty(200) == Difficulty::kEasy, "difficulty 200 -> easy");
  c.expect(bucket_difficulty(500) == Difficulty::kMedium, "difficulty 500 -> medium");
  c.expect(bucket_difficulty(501) == Difficulty::kHard, "difficulty 501 -> hard");
  c.expect(bucket_scale(20) == Scale::kSmall, "scale 20 -> small");
  c.expect(bucket_scale(50) == Scale::kMedium, "scale 50 -> medium");
  c.expect(bucket_scale(51) == Scale::kLarge, "scale 51 -> large");
}

void cost_structure(Check& c) {
  auto corpus = testing::synthetic_corpus(1, 66);
  std::sort(corpus.begin(), corpus.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  corpus.resize(100);
  std::vector<std::string> train;
  for (const auto& s : corpus) train.push_back(s.code);
  ToyScorer scorer(std::make_shared<const NgramModel>(NgramModel::train(train, 3, 0.1)));
  ToyFillModel fill(train);

  auto pipeline = [&](DetectorKind kind) {
    DetectionPipeline p;
    p.kind = kind;
    p.scorer = &scorer;
    p.perturbation.kind = default_perturbation(kind);
    p.perturbation.k = 50;
    p.perturbation.seed = 5;
    p.fill = &fill;
    return p;
  };
  double logrank_seconds = 0.0, npr_seconds = 0.0;
  for (DetectorKind kind : kAllDetectors) {
    const auto r = bench_speed(pipeline(kind), corpus, 1);
    const std::uint64_t want = needs_perturbation(kind) ? 51 : 1;
    c.expect(r.scorer_calls_per_sample == want,
             std::string(to_string(kind)) + " made " + std::to_string(r.scorer_calls_per_sample) +
                 " scorer calls per sample");
    if (kind == DetectorKind::kLogRankMean) logrank_seconds = r.seconds_per_sample;
    if (kind == DetectorKind::kNpr) npr_seconds = r.seconds_per_sample;
  }
  std::printf("       logrank %.6f s/sample, npr %.6f s/sample (ratio %.1f)\n", logrank_seconds,
              npr_seconds, npr_seconds / logrank_seconds);
  c.expect(npr_seconds >= 10.0 * logrank_seconds, "NPR not >= 10x slower than Log-Rank");
}

void pipeline_determinism(Check& c) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("codeppl_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "corpus.jsonl");
    save_corpus(out, testing::synthetic_corpus(2, 77));
  }
  auto run = [&](const std::string& name) {
    std::ostringstream out, err;
    const int status = cli::run(
        {"codeppl", "evaluate", "--method", "logp,logrank,lrr,npr,detectcodegpt,detectgpt",
         "--by", "language", "--n", "8", "--k", "10", "--seed", "7", "--parallel", "4", "--in",
         (dir / "corpus.jsonl").string(), "--out", (dir / name).string()},
        out, err);
    c.expect(status == 0, "evaluate exit " + std::to_string(status) + ": " + err.str());
    std::ifstream in(dir / name);
    auto j = nlohmann::json::parse(in);
    c.expect(j.contains("timing"), "report has a timing section");
    j.erase("timing");
    return j.dump();
  };
  const auto a = run("a.json");
  const auto b = run("b.json");
  c.expect(!a.empty() && a == b, "reports differ outside timing");
  fs::remove_all(dir);
}

void filter_fixture(Check& c) {
  const auto bad = testing::violation_fixture();
  c.expect(bad.puzzles.size() == 6, "violation fixture has 6 puzzles");
  c.expect(filter_puzzles(bad.puzzles, build_solution_index(bad.corpus)).empty(),
           "violation fixture retained puzzles");
  const auto good = testing::compliant_fixture(6);
  c.expect(filter_puzzles(good.puzzles, build_solution_index(good.corpus)).size() == 6,
           "compliant fixture lost puzzles");
}

struct Criterion {
  const char* id;
  const char* name;
  double time_limit_s;  // 0: no limit
  std::function<void(Check&)> body;
};

}  // namespace
}  // namespace codeppl

int main() {
  using namespace codeppl;
  const std::vector<Criterion> criteria{
      {"AC1", "formula fidelity", 5.0, formula_fidelity},
      {"AC2", "AUC equals pair-counting oracle", 5.0, auc_oracle},
      {"AC3", "identity-perturbation invariants", 5.0, identity_invariants},
      {"AC4", "synthetic separation (logp, logrank AUC >= 0.90)", 60.0, synthetic_separation},
      {"AC5", "bucket boundaries", 0.0, bucket_boundaries},
      {"AC6", "cost structure (51 vs 1 calls, NPR >= 10x Log-Rank)", 0.0, cost_structure},
      {"AC7", "evaluate determinism outside timing", 0.0, pipeline_determinism},
      {"AC8", "puzzle filter fixtures", 0.0, filter_fixture},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("unexpected exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.time_limit_s > 0 && secs >= cr.time_limit_s) {
      check.expect(false, "runtime " + std::to_string(secs) + " s exceeds limit");
    }
    std::printf("[%s] %s %s (%.2f s)\n", check.failed() ? "FAIL" : "PASS", cr.id, cr.name, secs);
    for (const auto& f : check.failures()) std::printf("       %s\n", f.c_str());
    failed += check.failed();
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
