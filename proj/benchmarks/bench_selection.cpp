// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <memory>

#include <nlohmann/json.hpp>

#include "kgd/knowledge_selector.hpp"

namespace {

kgd::KnowledgeBase multi_kb(int entities, int docs) {
  nlohmann::json doc;
  const char* domains[] = {"hotel", "restaurant", "attraction"};
  for (const char* d : domains) {
    for (int e = 1; e <= entities; ++e) {
      nlohmann::json snippets;
      for (int k = 1; k <= docs; ++k) {
        snippets[std::to_string(k)] = {{"title", "Question " + std::to_string(k) + " about place " + std::to_string(e)},
                                       {"body", "Answer " + std::to_string(k) + " for place " + std::to_string(e) + "."}};
      }
      doc[d][std::to_string(e)] = {{"name", std::string(d) + " place " + std::to_string(e)}, {"docs", snippets}};
    }
  }
  return kgd::KnowledgeBase::from_json(doc, kgd::default_training_domains());
}

struct Fixture {
  kgd::KnowledgeBase kb;
  kgd::Dialog dialog;
  std::shared_ptr<kgd::IdfTable> idf;
  explicit Fixture(int entities) : kb(multi_kb(entities, 6)) {
    dialog = {{kgd::Speaker::User, "Tell me about hotel place 3 and question 2 please."}};
    std::vector<std::string> docs;
    for (const auto& s : kb.snippets()) docs.push_back(s.title + " " + s.body);
    idf = std::make_shared<kgd::IdfTable>(kgd::IdfTable::build(docs));
  }
};

void BM_RankPruned(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)));
  const kgd::LexicalScorer scorer(f.idf);
  const auto w = kgd::context_window(f.dialog, 0, 9);
  for (auto _ : state) {
    const auto cands = kgd::select_de_candidates(w, f.kb, scorer);
    benchmark::DoNotOptimize(kgd::rank_snippets(w, f.kb, cands, scorer, scorer));
  }
}
BENCHMARK(BM_RankPruned)->Arg(5)->Arg(25);

void BM_RankJoint(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)));
  const kgd::LexicalScorer scorer(f.idf);
  const auto w = kgd::context_window(f.dialog, 0, 9);
  for (auto _ : state) benchmark::DoNotOptimize(kgd::brute_force_joint(w, f.kb, scorer, scorer));
}
BENCHMARK(BM_RankJoint)->Arg(5)->Arg(25);

}  // namespace
