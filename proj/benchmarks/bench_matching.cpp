// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <string>

#include <nlohmann/json.hpp>

#include "kgd/surface_matcher.hpp"

namespace {

void BM_Similarity(benchmark::State& state) {
  const std::string a(static_cast<std::size_t>(state.range(0)), 'a');
  std::string b = a;
  if (!b.empty()) b[b.size() / 2] = 'b';
  for (auto _ : state) benchmark::DoNotOptimize(kgd::similarity(a, b));
}
BENCHMARK(BM_Similarity)->Arg(8)->Arg(32)->Arg(128);

kgd::KnowledgeBase hotel_kb(int entities) {
  nlohmann::json doc;
  for (int i = 1; i <= entities; ++i) {
    doc["hotel"][std::to_string(i)] = {{"name", "Guest House number " + std::to_string(i)},
                                       {"docs", {{"1", {{"title", "Parking?"}, {"body", "Yes."}}}}}};
  }
  return kgd::KnowledgeBase::from_json(doc, kgd::default_training_domains());
}

void BM_MatchEntities(benchmark::State& state) {
  const auto kb = hotel_kb(static_cast<int>(state.range(0)));
  kgd::Dialog d;
  for (int i = 0; i < 9; ++i) {
    d.push_back({i % 2 == 0 ? kgd::Speaker::User : kgd::Speaker::Assistant,
                 "I would like to know whether guest house number 7 has free parking and a garden"});
  }
  const auto w = kgd::context_window(d, 8, 9);
  for (auto _ : state) benchmark::DoNotOptimize(kgd::match_entities(w, kb, std::string("hotel"), {}));
}
BENCHMARK(BM_MatchEntities)->Arg(10)->Arg(100);

}  // namespace
