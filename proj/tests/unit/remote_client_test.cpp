// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <future>

#include "support/fake_backend.hpp"
#include "kgd/errors.hpp"
#include "kgd/remote_client.hpp"

namespace kgd {
namespace {

RemoteOptions opts(const std::string& url) {
  RemoteOptions o;
  o.base_url = url;
  o.timeout = std::chrono::milliseconds(2000);
  o.batch_size = 4;
  o.retries = 2;
  return o;
}

double by_length(const std::string& p, const std::string& h) {
  return p.size() == h.size() ? 1.0 : 0.25;
}

std::vector<TextPair> pairs(int n) {
  std::vector<TextPair> out;
  for (int i = 0; i < n; ++i) out.push_back({std::string(static_cast<std::size_t>(i), 'p'), std::string(3, 'h')});
  return out;
}

TEST(Codec, ScoreRoundTrip) {
  const auto p = pairs(2);
  const auto body = encode_score_request(p);
  EXPECT_EQ(body.at("pairs").size(), 2u);
  EXPECT_EQ(body["pairs"][1]["hypothesis"], "hhh");
  EXPECT_EQ(decode_score_response(nlohmann::json{{"scores", {0.1, 0.9}}}, 2), (std::vector<double>{0.1, 0.9}));
  EXPECT_THROW(decode_score_response(nlohmann::json{{"scores", {0.1}}}, 2), BackendError);
  EXPECT_THROW(decode_score_response(nlohmann::json{{"nope", 1}}, 0), BackendError);
  EXPECT_THROW(decode_score_response(nlohmann::json{{"scores", {2.0}}}, 1), BackendError);
}

TEST(Codec, GenerateRoundTrip) {
  GeneratorRequest r{{{Speaker::User, "hi"}}, {{"T", "B", "hotel"}}};
  const auto body = encode_generate_request(r);
  EXPECT_EQ(body["history"][0]["speaker"], "User");
  EXPECT_FALSE(body["snippets"][0].contains("domain"));
  EXPECT_EQ(decode_generate_response(nlohmann::json{{"text", "ok"}}), "ok");
  EXPECT_THROW(decode_generate_response(nlohmann::json{{"text", ""}}), BackendError);
}

TEST(RemoteScorer, BatchesPreserveOrder) {
  kgd_test::FakeBackend server(by_length);
  RemoteScorer s(opts(server.url()));
  const auto scores = s.score_pairs(pairs(10));
  ASSERT_EQ(scores.size(), 10u);
  for (int i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(scores[static_cast<std::size_t>(i)], i == 3 ? 1.0 : 0.25);
  EXPECT_EQ(server.score_calls.load(), 3);
  EXPECT_EQ(server.largest_batch.load(), 4);
}

TEST(RemoteScorer, RetriesServerErrors) {
  kgd_test::FakeBackend server(by_length);
  server.fail_next = 2;
  RemoteScorer s(opts(server.url()));
  EXPECT_EQ(s.score_pairs(pairs(2)).size(), 2u);
  EXPECT_EQ(server.score_calls.load(), 3);
}

TEST(RemoteScorer, ExhaustedRetriesAreRetryableBackendErrors) {
  kgd_test::FakeBackend server(by_length);
  server.fail_next = 10;
  RemoteScorer s(opts(server.url()));
  try {
    s.score_pairs(pairs(1));
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_TRUE(e.retryable());
    EXPECT_EQ(e.kind(), ErrorKind::Backend);
  }
  EXPECT_EQ(server.score_calls.load(), 3);
}

TEST(RemoteScorer, ArityMismatchIsNotRetried) {
  kgd_test::FakeBackend server(by_length);
  server.drop_one = true;
  RemoteScorer s(opts(server.url()));
  try {
    s.score_pairs(pairs(3));
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_FALSE(e.retryable());
  }
  EXPECT_EQ(server.score_calls.load(), 1);
}

TEST(RemoteScorer, UnreachableHost) {
  auto o = opts("http://127.0.0.1:9");
  o.retries = 0;
  o.timeout = std::chrono::milliseconds(300);
  RemoteScorer s(o);
  EXPECT_THROW(s.score_pairs(pairs(1)), BackendError);
  EXPECT_TRUE(s.score_pairs(std::span<const TextPair>{}).empty());
}

TEST(RemoteScorer, ConcurrentCallers) {
  kgd_test::FakeBackend server(by_length);
  RemoteScorer s(opts(server.url()));
  std::vector<std::future<std::vector<double>>> fs;
  for (int i = 0; i < 8; ++i) fs.push_back(std::async(std::launch::async, [&] { return s.score_pairs(pairs(9)); }));
  const auto first = fs[0].get();
  for (std::size_t i = 1; i < fs.size(); ++i) EXPECT_EQ(fs[i].get(), first);
}

TEST(RemoteGenerator, SendsHistoryAndSnippets) {
  kgd_test::FakeBackend server(by_length);
  server.generate_text = "Sure thing.";
  RemoteGenerator g(opts(server.url()));
  GeneratorRequest r{{{Speaker::User, "Is there wifi?"}}, {{"Wifi?", "Yes, free.", "hotel"}}};
  EXPECT_EQ(g.generate(r), "Sure thing.");
  const auto sent = nlohmann::json::parse(server.last_generate);
  EXPECT_EQ(sent["snippets"][0]["body"], "Yes, free.");
  EXPECT_EQ(sent["history"][0]["text"], "Is there wifi?");
}

TEST(RemoteOptions, BadUrlIsConfigError) {
  EXPECT_THROW(RemoteScorer(opts("not a url")), ConfigError);
}

}  // namespace
}  // namespace kgd
