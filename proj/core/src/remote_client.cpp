// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include "kgd/remote_client.hpp"

#include <algorithm>
#include <stdexcept>

#include <httplib.h>

#include "kgd/errors.hpp"

namespace kgd {
namespace {

class LimiterGuard {
 public:
  explicit LimiterGuard(InFlightLimiter& l) : l_(l) { l_.acquire(); }
  ~LimiterGuard() { l_.release(); }
  LimiterGuard(const LimiterGuard&) = delete;
  LimiterGuard& operator=(const LimiterGuard&) = delete;

 private:
  InFlightLimiter& l_;
};

}  // namespace

nlohmann::json encode_score_request(std::span<const TextPair> pairs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : pairs) arr.push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}});
  return {{"pairs", std::move(arr)}};
}

std::vector<double> decode_score_response(const nlohmann::json& body, std::size_t expected) {
  if (!body.is_object()) throw BackendError("score response is not a JSON object", false);
  auto it = body.find("scores");
  if (it == body.end() || !it->is_array()) throw BackendError("score response lacks a 'scores' list", false);
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw BackendError("score response contains a non-numeric score", false);
    out.push_back(v.get<double>());
  }
  check_scores(out, expected, "remote scorer");
  return out;
}

nlohmann::json encode_generate_request(const GeneratorRequest& request) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& t : request.history) history.push_back({{"speaker", speaker_name(t.speaker)}, {"text", t.text}});
  nlohmann::json snippets = nlohmann::json::array();
  for (const auto& s : request.snippets) snippets.push_back({{"title", s.title}, {"body", s.body}});
  return {{"history", std::move(history)}, {"snippets", std::move(snippets)}};
}

std::string decode_generate_response(const nlohmann::json& body) {
  if (!body.is_object()) throw BackendError("generate response is not a JSON object", false);
  auto it = body.find("text");
  if (it == body.end() || !it->is_string()) throw BackendError("generate response lacks a 'text' string", false);
  auto text = it->get<std::string>();
  if (text.empty()) throw BackendError("generator returned empty text", false);
  return text;
}

InFlightLimiter::InFlightLimiter(std::size_t limit) : limit_(std::max<std::size_t>(limit, 1)) {}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return active_ < limit_; });
  ++active_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --active_;
  }
  cv_.notify_one();
}

JsonEndpoint::JsonEndpoint(RemoteOptions options)
    : options_(std::move(options)), limiter_(std::make_shared<InFlightLimiter>(options_.max_in_flight)) {
  const auto& url = options_.base_url;
  auto scheme = url.find("://");
  if (url.empty() || scheme == std::string::npos) throw ConfigError("remote endpoint '" + url + "' is not an http URL");
  auto path = url.find('/', scheme + 3);
  scheme_host_port_ = url.substr(0, path);
  if (path != std::string::npos) {
    prefix_ = url.substr(path);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }
  if (options_.retries < 0) throw ConfigError("remote retries must be non-negative");
  if (options_.batch_size == 0) throw ConfigError("remote batch_size must be positive");
}

nlohmann::json JsonEndpoint::post(std::string_view path, const nlohmann::json& body) const {
  const std::string target = prefix_ + std::string(path);
  const std::string payload = body.dump();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    LimiterGuard guard(*limiter_);
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(target, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw BackendError(scheme_host_port_ + target + ": HTTP " + std::to_string(res->status), false);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw BackendError(scheme_host_port_ + target + ": malformed JSON reply: " + e.what(), false);
    }
  }
  throw BackendError(scheme_host_port_ + target + ": transport failure after " + std::to_string(options_.retries + 1) +
                         " attempts: " + last_error,
                     true);
}

RemoteScorer::RemoteScorer(RemoteOptions options) : endpoint_(std::move(options)) {}

std::vector<double> RemoteScorer::score_pairs(std::span<const TextPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  const std::size_t batch = endpoint_.options().batch_size;
  for (std::size_t start = 0; start < pairs.size(); start += batch) {
    auto chunk = pairs.subspan(start, std::min(batch, pairs.size() - start));
    auto scores = decode_score_response(endpoint_.post(kScorePath, encode_score_request(chunk)), chunk.size());
    out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

RemoteGenerator::RemoteGenerator(RemoteOptions options) : endpoint_(std::move(options)) {}

std::string RemoteGenerator::generate(const GeneratorRequest& request) const {
  return decode_generate_response(endpoint_.post(kGeneratePath, encode_generate_request(request)));
}

}  // namespace kgd
