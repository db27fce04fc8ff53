// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "kgd/scorer.hpp"

namespace kgd {

/// Wire protocol v1:
///   POST <base>/v1/score    {"pairs": [{"premise", "hypothesis"}]} -> {"scores": [float]}
///   POST <base>/v1/generate {"history": [{"speaker", "text"}], "snippets": [{"title", "body"}]} -> {"text"}
inline constexpr std::string_view kScorePath = "/v1/score";
inline constexpr std::string_view kGeneratePath = "/v1/generate";

struct RemoteOptions {
  std::string base_url;  // http://host:port[/prefix]
  std::chrono::milliseconds timeout{10000};
  int retries = 2;              // extra attempts after a transport failure
  std::size_t batch_size = 64;  // pairs per /v1/score request
  std::size_t max_in_flight = 4;
};

nlohmann::json encode_score_request(std::span<const TextPair> pairs);
/// Throws BackendError (non-retryable) on malformed bodies, wrong arity or out-of-range scores.
std::vector<double> decode_score_response(const nlohmann::json& body, std::size_t expected);
nlohmann::json encode_generate_request(const GeneratorRequest& request);
std::string decode_generate_response(const nlohmann::json& body);

/// Counting gate shared by every thread that uses one client.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t limit);
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t limit_;
  std::size_t active_ = 0;
};

/// POSTs a JSON body and returns the parsed JSON reply, retrying transport
/// failures and 5xx replies up to `options.retries` times.
class JsonEndpoint {
 public:
  explicit JsonEndpoint(RemoteOptions options);
  nlohmann::json post(std::string_view path, const nlohmann::json& body) const;
  const RemoteOptions& options() const noexcept { return options_; }

 private:
  RemoteOptions options_;
  std::string scheme_host_port_;
  std::string prefix_;
  std::shared_ptr<InFlightLimiter> limiter_;
};

class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(RemoteOptions options);
  std::vector<double> score_pairs(std::span<const TextPair> pairs) const override;
  std::string name() const override { return "remote:" + endpoint_.options().base_url; }

 private:
  JsonEndpoint endpoint_;
};

class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(RemoteOptions options);
  std::string generate(const GeneratorRequest& request) const override;
  std::string name() const override { return "remote:" + endpoint_.options().base_url; }

 private:
  JsonEndpoint endpoint_;
};

}  // namespace kgd
