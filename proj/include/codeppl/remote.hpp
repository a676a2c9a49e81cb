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

// HTTP clients for a remote log-probability service and a remote mask-fill
// service. Both speak one JSON request per POST.
//
//   score:  {"text", "context", "model_id", "max_tokens"}
//        -> {"model_id", "tokens": [{"token", "logprob", "rank", "entropy"}]}
//   fill:   {"text", "mask_spans": [[start_tok, end_tok], ...]}
//        -> {"filled_text"}

#include <chrono>
#include <cmath>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>

#include "codeppl/error.hpp"
#include "codeppl/perturbation.hpp"
#include "codeppl/token_scoring.hpp"
#include "httplib.h"
#include "json.hpp"

namespace codeppl {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path = "/";
  std::chrono::milliseconds timeout{30000};
  std::size_t parallelism = 4;  // max in-flight requests per client
  std::size_t retries = 0;      // extra attempts on transport failure
};

inline Endpoint parse_endpoint(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos || url.substr(0, scheme_end) != "http") {
    fail(ErrorKind::kInvalidInput,
         "endpoint must be an http:// URL: " + std::string(url));
  }
  const auto path_begin = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = std::string(url.substr(0, path_begin));
  if (path_begin != std::string_view::npos) e.path = std::string(url.substr(path_begin));
  if (e.origin.size() <= scheme_end + 3) {
    fail(ErrorKind::kInvalidInput, "endpoint has no host: " + std::string(url));
  }
  return e;
}

inline nlohmann::json make_score_request(std::string_view text,
                                         std::optional<std::string_view> context,
                                         const ScorerConfig& config) {
  nlohmann::json j;
  j["text"] = text;
  j["context"] = context && config.context_mode == ContextMode::kPromptPlusCode
                     ? nlohmann::json(*context)
                     : nlohmann::json(nullptr);
  j["model_id"] = config.model_id;
  j["max_tokens"] = config.max_tokens;
  return j;
}

// Validates a score response. Optional fields: "token_count" (must equal the
// number of records) and "truncated" (bool).
inline ScoredSequence parse_score_response(const nlohmann::json& body,
                                           const ScorerConfig& config) {
  auto protocol = [](const std::string& field, const std::string& why) {
    fail(ErrorKind::kProtocolError, field + ": " + why);
  };
  if (!body.is_object()) protocol("response", "not a JSON object");
  if (!body.contains("model_id") || !body["model_id"].is_string())
    protocol("model_id", "missing or not a string");
  if (!body.contains("tokens") || !body["tokens"].is_array())
    protocol("tokens", "missing or not an array");
  const auto& tokens = body["tokens"];
  if (tokens.empty()) protocol("tokens", "no token records");
  if (body.contains("token_count")) {
    const auto& tc = body["token_count"];
    if (!tc.is_number_unsigned() || tc.get<std::size_t>() != tokens.size())
      protocol("token_count", "does not match the number of token records");
  }
  if (tokens.size() > config.max_tokens)
    protocol("tokens", "more records than max_tokens");

  ScoredSequence seq;
  seq.model_id = body["model_id"].get<std::string>();
  if (body.contains("truncated")) {
    if (!body["truncated"].is_boolean()) protocol("truncated", "not a boolean");
    seq.truncated = body["truncated"].get<bool>();
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    const std::string at = "tokens[" + std::to_string(i) + "]";
    if (!t.is_object()) protocol(at, "not an object");
    if (!t.contains("token") || !t["token"].is_string())
      protocol(at + ".token", "missing or not a string");
    if (!t.contains("logprob") || !t["logprob"].is_number())
      protocol(at + ".logprob", "missing or not a number");
    const double lp = t["logprob"].get<double>();
    if (!std::isfinite(lp) || lp > 0.0) protocol(at + ".logprob", "must be finite and <= 0");
    if (!t.contains("rank") || !t["rank"].is_number_integer())
      protocol(at + ".rank", "missing or not an integer");
    const auto rank = t["rank"].get<std::int64_t>();
    if (rank < 1) protocol(at + ".rank", "must be >= 1");
    std::optional<double> ent;
    if (t.contains("entropy") && !t["entropy"].is_null()) {
      if (!t["entropy"].is_number()) protocol(at + ".entropy", "not a number");
      ent = t["entropy"].get<double>();
      if (!(*ent >= 0.0) || !std::isfinite(*ent))
        protocol(at + ".entropy", "must be finite and >= 0");
    }
    seq.scores.push_back(
        token_from_logprob(t["token"].get<std::string>(), i, lp, rank, ent));
  }
  validate_sequence(seq, ErrorKind::kProtocolError);
  return seq;
}

namespace detail {

// POSTs `body` and returns the parsed JSON reply. Transport and HTTP-status
// failures raise `unavailable`; an unparseable body is a protocol error.
inline nlohmann::json post_json(const Endpoint& ep, const nlohmann::json& body,
                                ErrorKind unavailable) {
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= ep.retries; ++attempt) {
    httplib::Client client(ep.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(ep.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(ep.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    auto res = client.Post(ep.path, dump_line(body), "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(unavailable, "HTTP status " + std::to_string(res->status));
    }
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::kProtocolError, std::string("response: ") + e.what());
    }
  }
  throw Error(unavailable, ep.origin + ep.path + ": " + last_error, true);
}

}  // namespace detail

class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(Endpoint endpoint)
      : endpoint_(std::move(endpoint)),
        slots_(std::make_unique<std::counting_semaphore<kMaxParallelism>>(
            static_cast<std::ptrdiff_t>(
                std::clamp<std::size_t>(endpoint_.parallelism, 1, kMaxParallelism)))) {}

  ScoredSequence score(std::string_view text,
                       std::optional<std::string_view> context,
                       const ScorerConfig& config) const override {
    slots_->acquire();
    struct Release {
      std::counting_semaphore<kMaxParallelism>* s;
      ~Release() { s->release(); }
    } release{slots_.get()};
    const auto reply =
        detail::post_json(endpoint_, make_score_request(text, context, config),
                          ErrorKind::kScorerUnavailable);
    return parse_score_response(reply, config);
  }

 private:
  static constexpr std::ptrdiff_t kMaxParallelism = 256;
  Endpoint endpoint_;
  std::unique_ptr<std::counting_semaphore<kMaxParallelism>> slots_;
};

inline nlohmann::json make_fill_request(std::string_view text,
                                        std::span<const TokenSpan> spans) {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& span : spans) s.push_back({span.start, span.end});
  return {{"text", text}, {"mask_spans", std::move(s)}};
}

class RemoteFillModel final : public FillModel {
 public:
  explicit RemoteFillModel(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

  // The wire format carries no seed; determinism is up to the service.
  std::string fill(std::string_view text, std::span<const TokenSpan> spans,
                   std::uint64_t /*seed*/) const override {
    const auto reply = detail::post_json(endpoint_, make_fill_request(text, spans),
                                         ErrorKind::kPerturbationUnavailable);
    if (!reply.is_object() || !reply.contains("filled_text") ||
        !reply["filled_text"].is_string()) {
      fail(ErrorKind::kPerturbationUnavailable,
           "filled_text: missing or not a string");
    }
    return reply["filled_text"].get<std::string>();
  }

 private:
  Endpoint endpoint_;
};

}  // namespace codeppl
