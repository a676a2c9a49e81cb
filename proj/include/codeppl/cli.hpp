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

// Command-line driver: dataset-build, score, perturb, detect, evaluate, bench.
// Exit status: 0 success, 1 invalid configuration (usage printed), 2 runtime
// failure (structured JSON error on stderr).

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "codeppl/dataset.hpp"
#include "codeppl/detectors.hpp"
#include "codeppl/error.hpp"
#include "codeppl/evaluation.hpp"
#include "codeppl/ngram_model.hpp"
#include "codeppl/perturbation.hpp"
#include "codeppl/remote.hpp"
#include "codeppl/token_scoring.hpp"
#include "json.hpp"

namespace codeppl::cli {

inline constexpr const char* kScorerUrlEnv = "CODEPPL_SCORER_URL";

struct RunConfig {
  std::string command;
  std::string scorer = "toy";
  std::string url;
  std::string fill_url;
  std::string train_path;
  int order = 3;
  double smoothing = 0.1;
  std::size_t max_tokens = 2048;
  std::string model_id = "toy-ngram";
  std::vector<std::string> methods;
  std::string perturbation_kind;  // empty: per-detector default
  PerturbationConfig perturbation;
  std::size_t n = 500;
  std::string aspect = "language";
  std::string in_path;
  std::string out_path;
  std::string puzzles_path;
  std::string puzzles_out_path;
  std::string csv_path;
  std::string roc_dir;
  std::size_t parallelism = 1;
  std::size_t bench_samples = 100;
  std::size_t repetitions = 1;
};

// Raised for configurations that parse but are unusable (exit 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

inline std::vector<CodeSample> load_corpus_file(const std::string& path) {
  auto in = open_in(path);
  return load_corpus(in);
}

inline std::vector<CodeSample> sorted_by_id(std::vector<CodeSample> v) {
  std::sort(v.begin(), v.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return v;
}

inline std::optional<PerturbationKind> parse_perturbation(const std::string& s) {
  if (s == "whitespace-newline" || s == "whitespace") return PerturbationKind::kWhitespaceNewline;
  if (s == "mask-fill") return PerturbationKind::kMaskFill;
  if (s == "identity") return PerturbationKind::kIdentity;
  return std::nullopt;
}

inline std::vector<DetectorKind> parse_methods(const RunConfig& cfg) {
  std::vector<DetectorKind> kinds;
  for (const auto& m : cfg.methods) {
    const auto k = parse_detector(m);
    if (!k) throw ConfigError("unknown method '" + m + "'");
    kinds.push_back(*k);
  }
  if (kinds.empty()) throw ConfigError("at least one --method is required");
  return kinds;
}

inline void check_config(const RunConfig& cfg) {
  if (cfg.scorer != "toy" && cfg.scorer != "remote")
    throw ConfigError("--scorer must be 'toy' or 'remote'");
  if (cfg.scorer == "remote" && cfg.url.empty())
    throw ConfigError(std::string("remote scorer requires --url or ") + kScorerUrlEnv);
  if (!cfg.perturbation_kind.empty() && !parse_perturbation(cfg.perturbation_kind))
    throw ConfigError("unknown perturbation kind '" + cfg.perturbation_kind + "'");
  if (cfg.max_tokens < 1) throw ConfigError("--max-tokens must be >= 1");
  if (cfg.parallelism < 1) throw ConfigError("--parallel must be >= 1");
  try {
    cfg.perturbation.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (cfg.command == "detect" || cfg.command == "evaluate" || cfg.command == "bench") {
    for (DetectorKind k : parse_methods(cfg)) {
      if (cfg.perturbation.k < min_variants(k)) {
        throw ConfigError(std::string(to_string(k)) + " requires --k >= " +
                          std::to_string(min_variants(k)));
      }
    }
  }
  if (cfg.command == "evaluate" && !parse_aspect(cfg.aspect))
    throw ConfigError("unknown aspect '" + cfg.aspect + "'");
  if (cfg.command == "evaluate" && cfg.n < 1) throw ConfigError("--n must be >= 1");
}

// Backends shared by the scoring commands.
struct Backends {
  std::unique_ptr<Scorer> scorer;
  std::unique_ptr<FillModel> fill;
  ScorerConfig scorer_config;
};

inline Backends make_backends(const RunConfig& cfg,
                              const std::vector<CodeSample>& input) {
  Backends b;
  b.scorer_config.model_id = cfg.model_id;
  b.scorer_config.max_tokens = cfg.max_tokens;
  b.scorer_config.seed = cfg.perturbation.seed;

  std::vector<std::string> train;
  const bool need_train = cfg.scorer == "toy" || cfg.fill_url.empty();
  if (need_train) {
    const auto corpus =
        cfg.train_path.empty() ? input : load_corpus_file(cfg.train_path);
    for (const auto& s : corpus) train.push_back(s.code);
    if (train.empty()) fail(ErrorKind::kInvalidInput, "training corpus is empty");
  }
  if (cfg.scorer == "toy") {
    b.scorer = std::make_unique<ToyScorer>(std::make_shared<const NgramModel>(
        NgramModel::train(train, cfg.order, cfg.smoothing)));
  } else {
    auto ep = parse_endpoint(cfg.url);
    ep.parallelism = cfg.parallelism;
    b.scorer = std::make_unique<RemoteScorer>(ep);
  }
  if (!cfg.fill_url.empty()) {
    b.fill = std::make_unique<RemoteFillModel>(parse_endpoint(cfg.fill_url));
  } else {
    b.fill = std::make_unique<ToyFillModel>(train);
  }
  return b;
}

inline PerturbationConfig perturbation_for(const RunConfig& cfg, DetectorKind k) {
  PerturbationConfig p = cfg.perturbation;
  p.kind = cfg.perturbation_kind.empty() ? default_perturbation(k)
                                         : *parse_perturbation(cfg.perturbation_kind);
  return p;
}

inline DetectionPipeline make_pipeline(const RunConfig& cfg, const Backends& b,
                                       DetectorKind k) {
  DetectionPipeline p;
  p.kind = k;
  p.scorer = b.scorer.get();
  p.scorer_config = b.scorer_config;
  p.perturbation = perturbation_for(cfg, k);
  p.fill = b.fill.get();
  return p;
}

inline int cmd_dataset_build(const RunConfig& cfg, std::ostream& out) {
  auto pin = open_in(cfg.puzzles_path);
  const auto puzzles = load_puzzles(pin);
  const auto corpus = load_corpus_file(cfg.in_path);
  const auto built = build_dataset(puzzles, corpus);
  {
    auto o = open_out(cfg.out_path);
    save_corpus(o, built.samples);
  }
  if (!cfg.puzzles_out_path.empty()) {
    auto o = open_out(cfg.puzzles_out_path);
    save_puzzles(o, built.puzzles);
  }
  nlohmann::json summary = {{"puzzles_in", puzzles.size()},
                            {"puzzles_kept", built.puzzles.size()},
                            {"samples_in", corpus.size()},
                            {"samples_kept", built.samples.size()}};
  out << summary.dump() << '\n';
  return 0;
}

inline int cmd_score(const RunConfig& cfg) {
  const auto corpus = sorted_by_id(load_corpus_file(cfg.in_path));
  const auto b = make_backends(cfg, corpus);
  std::vector<std::string> lines(corpus.size());
  codeppl::detail::parallel_for(corpus.size(), cfg.parallelism, [&](std::size_t i) {
    lines[i] = dump_line(to_json(score_sequence(*b.scorer, corpus[i].code, std::nullopt,
                                                b.scorer_config, corpus[i].id)));
  });
  auto o = open_out(cfg.out_path);
  for (const auto& l : lines) o << l << '\n';
  return 0;
}

inline int cmd_perturb(const RunConfig& cfg) {
  const auto corpus = sorted_by_id(load_corpus_file(cfg.in_path));
  const auto kind = cfg.perturbation_kind.empty()
                       ? PerturbationKind::kWhitespaceNewline
                       : *parse_perturbation(cfg.perturbation_kind);
  std::unique_ptr<FillModel> fill;
  if (kind == PerturbationKind::kMaskFill) {
    if (!cfg.fill_url.empty()) {
      fill = std::make_unique<RemoteFillModel>(parse_endpoint(cfg.fill_url));
    } else {
      std::vector<std::string> train;
      const auto src = cfg.train_path.empty() ? corpus : load_corpus_file(cfg.train_path);
      for (const auto& s : src) train.push_back(s.code);
      fill = std::make_unique<ToyFillModel>(train);
    }
  }
  auto o = open_out(cfg.out_path);
  for (const auto& s : corpus) {
    PerturbationConfig p = cfg.perturbation;
    p.kind = kind;
    p.seed = mix_seed(cfg.perturbation.seed, fnv1a(s.id));
    const auto set = perturb(s.code, p, fill.get());
    nlohmann::json j = {{"sample_id", s.id},
                        {"kind", to_string(kind)},
                        {"k", set.variants.size()},
                        {"seed", cfg.perturbation.seed},
                        {"original", set.original},
                        {"variants", set.variants}};
    o << dump_line(j) << '\n';
  }
  return 0;
}

inline int cmd_detect(const RunConfig& cfg) {
  const auto kinds = parse_methods(cfg);
  const auto corpus = sorted_by_id(load_corpus_file(cfg.in_path));
  const auto b = make_backends(cfg, corpus);
  auto o = open_out(cfg.out_path);
  for (DetectorKind k : kinds) {
    const auto pipeline = make_pipeline(cfg, b, k);
    std::vector<std::string> lines(corpus.size());
    codeppl::detail::parallel_for(corpus.size(), cfg.parallelism, [&](std::size_t i) {
      std::optional<DetectorScore> score;
      std::optional<std::string> error;
      try {
        score = pipeline.run(corpus[i].id, corpus[i].code);
      } catch (const Error& e) {
        if (!e.degenerate()) throw;
        error = std::string(to_string(e.kind()));
      }
      lines[i] = dump_line(detector_record(corpus[i].id, k, score, error));
    });
    for (const auto& l : lines) o << l << '\n';
  }
  return 0;
}

inline int cmd_evaluate(const RunConfig& cfg) {
  const auto kinds = parse_methods(cfg);
  const auto aspect = *parse_aspect(cfg.aspect);
  const auto corpus = load_corpus_file(cfg.in_path);
  // Fail on undersized groups before paying for model training.
  for (const auto& g : aspect_groups(aspect, corpus))
    sample_pairs(corpus, g, cfg.n, cfg.perturbation.seed);
  const auto b = make_backends(cfg, corpus);
  EvalOptions opts{cfg.n, cfg.perturbation.seed, cfg.parallelism};
  std::vector<EvalReport> reports;
  for (DetectorKind k : kinds) {
    auto r = evaluate_groups(corpus, make_pipeline(cfg, b, k), aspect, opts);
    reports.insert(reports.end(), r.begin(), r.end());
  }
  {
    auto o = open_out(cfg.out_path);
    o << reports_to_json(reports).dump(2) << '\n';
  }
  if (!cfg.csv_path.empty()) {
    auto o = open_out(cfg.csv_path);
    write_reports_csv(o, reports);
  }
  if (!cfg.roc_dir.empty()) {
    std::filesystem::create_directories(cfg.roc_dir);
    for (const auto& r : reports) {
      std::string name = std::string(to_string(r.detector)) + "_" + r.group + ".csv";
      for (char& c : name) {
        if (c == '=' || c == '/' || c == ' ') c = '_';
        if (c == '#') c = 's';
        if (c == '+') c = 'p';
      }
      auto o = open_out((std::filesystem::path(cfg.roc_dir) / name).string());
      write_roc_csv(o, r.roc);
    }
  }
  return 0;
}

inline int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  const auto kinds = parse_methods(cfg);
  auto corpus = sorted_by_id(load_corpus_file(cfg.in_path));
  const auto b = make_backends(cfg, corpus);
  if (corpus.size() > cfg.bench_samples) corpus.resize(cfg.bench_samples);
  nlohmann::json results = nlohmann::json::array();
  for (DetectorKind k : kinds) {
    const auto r = bench_speed(make_pipeline(cfg, b, k), corpus, cfg.repetitions);
    results.push_back({{"detector", to_string(k)},
                       {"samples", corpus.size()},
                       {"repetitions", cfg.repetitions},
                       {"scorer_calls_per_sample", r.scorer_calls_per_sample},
                       {"skipped", r.skipped},
                       {"seconds_per_sample", r.seconds_per_sample}});
  }
  const std::string text = results.dump(2);
  if (cfg.out_path.empty()) {
    out << text << '\n';
  } else {
    auto o = open_out(cfg.out_path);
    o << text << '\n';
  }
  return 0;
}

}  // namespace detail

// argv[0] is the program name, as in main().
inline int run(const std::vector<std::string>& argv, std::ostream& out,
               std::ostream& err) {
  RunConfig cfg;
  if (const char* env = std::getenv(kScorerUrlEnv)) cfg.url = env;

  CLI::App app{"Perplexity-based detection of LLM-generated code", "codeppl"};
  app.require_subcommand(1);

  auto add_scorer_opts = [&](CLI::App* sub) {
    sub->add_option("--scorer", cfg.scorer, "toy | remote")->capture_default_str();
    sub->add_option("--url", cfg.url, "remote scorer URL")->envname(kScorerUrlEnv);
    sub->add_option("--train", cfg.train_path, "JSONL corpus for the toy model (default: --in)");
    sub->add_option("--order", cfg.order, "toy n-gram order")->capture_default_str();
    sub->add_option("--smoothing", cfg.smoothing, "toy add-k constant")->capture_default_str();
    sub->add_option("--max-tokens", cfg.max_tokens)->capture_default_str();
    sub->add_option("--model-id", cfg.model_id)->capture_default_str();
    sub->add_option("--parallel", cfg.parallelism, "worker bound")->capture_default_str();
  };
  auto add_perturb_opts = [&](CLI::App* sub) {
    sub->add_option("--k", cfg.perturbation.k, "perturbed variants per sample")
        ->capture_default_str();
    sub->add_option("--seed", cfg.perturbation.seed)->capture_default_str();
    sub->add_option("--perturbation", cfg.perturbation_kind,
                    "whitespace-newline | mask-fill | identity");
    sub->add_option("--space-prob", cfg.perturbation.space_insert_prob)->capture_default_str();
    sub->add_option("--newline-prob", cfg.perturbation.newline_insert_prob)
        ->capture_default_str();
    sub->add_option("--mask-fraction", cfg.perturbation.mask_span_fraction)
        ->capture_default_str();
    sub->add_option("--span-len", cfg.perturbation.mask_span_len)->capture_default_str();
    sub->add_option("--fill-url", cfg.fill_url, "remote mask-fill URL");
  };
  auto add_methods = [&](CLI::App* sub) {
    sub->add_option("--method", cfg.methods,
                    "logp, entropy, rank, logrank, lrr, detectgpt, npr, detectcodegpt")
        ->delimiter(',')
        ->required();
  };

  auto* build = app.add_subcommand("dataset-build", "filter puzzles and their samples");
  build->add_option("--puzzles", cfg.puzzles_path)->required();
  build->add_option("--in", cfg.in_path)->required();
  build->add_option("--out", cfg.out_path)->required();
  build->add_option("--puzzles-out", cfg.puzzles_out_path);

  auto* score = app.add_subcommand("score", "per-token scores for every sample");
  add_scorer_opts(score);
  score->add_option("--in", cfg.in_path)->required();
  score->add_option("--out", cfg.out_path)->required();

  auto* perturb_cmd = app.add_subcommand("perturb", "perturbed variants for every sample");
  add_perturb_opts(perturb_cmd);
  perturb_cmd->add_option("--train", cfg.train_path, "JSONL corpus for the toy fill model");
  perturb_cmd->add_option("--in", cfg.in_path)->required();
  perturb_cmd->add_option("--out", cfg.out_path)->required();

  auto* detect = app.add_subcommand("detect", "detector scores for every sample");
  add_scorer_opts(detect);
  add_perturb_opts(detect);
  add_methods(detect);
  detect->add_option("--in", cfg.in_path)->required();
  detect->add_option("--out", cfg.out_path)->required();

  auto* evaluate = app.add_subcommand("evaluate", "AUC per aspect group");
  add_scorer_opts(evaluate);
  add_perturb_opts(evaluate);
  add_methods(evaluate);
  evaluate->add_option("--by", cfg.aspect, "language | difficulty | scale | generator")
      ->capture_default_str();
  evaluate->add_option("--n", cfg.n, "pairs per group")->capture_default_str();
  evaluate->add_option("--in", cfg.in_path)->required();
  evaluate->add_option("--out", cfg.out_path)->required();
  evaluate->add_option("--csv", cfg.csv_path);
  evaluate->add_option("--roc-dir", cfg.roc_dir);

  auto* bench = app.add_subcommand("bench", "seconds and scorer calls per sample");
  add_scorer_opts(bench);
  add_perturb_opts(bench);
  add_methods(bench);
  bench->add_option("--in", cfg.in_path)->required();
  bench->add_option("--out", cfg.out_path);
  bench->add_option("--samples", cfg.bench_samples)->capture_default_str();
  bench->add_option("--repetitions", cfg.repetitions)->capture_default_str();

  std::vector<std::string> args(argv.rbegin(), argv.rend() - (argv.empty() ? 0 : 1));
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return 1;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    detail::check_config(cfg);
    if (cfg.command == "bench" && cfg.repetitions < 1)
      throw ConfigError("--repetitions must be >= 1");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n'
        << app.get_subcommand(cfg.command)->help();
    return 1;
  }

  try {
    if (cfg.command == "dataset-build") return detail::cmd_dataset_build(cfg, out);
    if (cfg.command == "score") return detail::cmd_score(cfg);
    if (cfg.command == "perturb") return detail::cmd_perturb(cfg);
    if (cfg.command == "detect") return detail::cmd_detect(cfg);
    if (cfg.command == "evaluate") return detail::cmd_evaluate(cfg);
    if (cfg.command == "bench") return detail::cmd_bench(cfg, out);
  } catch (const Error& e) {
    err << nlohmann::json{{"error", to_string(e.kind())},
                          {"message", e.what()},
                          {"retriable", e.retriable()}}
               .dump()
        << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", "io-error"}, {"message", e.what()}}.dump()
        << '\n';
    return 2;
  }
  return 1;
}

}  // namespace codeppl::cli
