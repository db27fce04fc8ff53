// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "kgd/errors.hpp"
#include "kgd/pipeline.hpp"

namespace kgd {
namespace {

namespace fs = std::filesystem;

const fs::path kMini = KGD_MINI_DATA_DIR;

PipelineConfig mini() {
  auto cfg = load_config(kMini / "config.json");
  cfg.output_dir = fs::temp_directory_path() / "kgd_pipeline_test";
  return cfg;
}

nlohmann::ordered_json mini_json() {
  std::ifstream in(kMini / "config.json");
  return nlohmann::ordered_json::parse(in);
}

TEST(Config, UnknownKeysRejected) {
  auto doc = mini_json();
  doc["bogus"] = 1;
  EXPECT_THROW(PipelineConfig::from_json(doc, kMini), ConfigError);
  doc = mini_json();
  doc["generation"]["temperature"] = 0.7;
  EXPECT_THROW(PipelineConfig::from_json(doc, kMini), ConfigError);
  doc = mini_json();
  doc["selection"]["gating"] = "sometimes";
  EXPECT_THROW(PipelineConfig::from_json(doc, kMini), ConfigError);
  doc = mini_json();
  doc["window_size"] = "nine";
  EXPECT_THROW(PipelineConfig::from_json(doc, kMini), ConfigError);
}

TEST(Config, ValidationCatchesRangesAndFiles) {
  auto cfg = mini();
  cfg.generation.ratio = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = mini();
  cfg.data.knowledge = "missing.json";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = mini();
  cfg.scorers[std::string(kRoleDomainNli)] = "quantum";
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(load_config(kMini / "nope.json"), ConfigError);
}

TEST(Config, SnapshotRoundTrips) {
  const auto cfg = mini();
  const auto snap = cfg.to_json();
  const auto again = PipelineConfig::from_json(snap, cfg.base_dir);
  EXPECT_EQ(again.to_json().dump(), snap.dump());
  EXPECT_EQ(cfg.binding(kRoleKnowledgeProb), "lexical");
  EXPECT_EQ(again.generation.n_snippets, 4u);
}

TEST(Pipeline, DeterministicAcrossRunsAndWorkers) {
  auto cfg = mini();
  cfg.workers = 1;
  const auto a = Pipeline::load(cfg).run_pipeline();
  cfg.workers = 4;
  const auto b = Pipeline::load(cfg).run_pipeline();
  auto strip = [](nlohmann::ordered_json j) {
    j.erase("config");
    return j.dump();
  };
  EXPECT_EQ(strip(a), strip(b));
  EXPECT_EQ(Pipeline::load(cfg).run_pipeline().dump(), b.dump());
}

TEST(Pipeline, ReportShape) {
  const auto r = Pipeline::load(mini()).run_pipeline();
  EXPECT_EQ(r["command"], "pipeline");
  for (const char* m : {"accuracy", "precision", "recall", "f1"}) EXPECT_TRUE(r["detection"]["metrics"].contains(m)) << m;
  for (const char* m : {"mrr@5", "r@1", "r@5"}) EXPECT_TRUE(r["selection"]["metrics"].contains(m)) << m;
  for (const char* m : {"bleu-1", "bleu-4", "meteor_simplified", "rouge-l"}) {
    EXPECT_TRUE(r["generation"]["metrics"].contains(m)) << m;
  }
  for (const char* c : {"case1", "case2", "case3"}) EXPECT_TRUE(r["generation"]["cases"].contains(c)) << c;
  const auto path = write_report(mini(), "pipeline", r);
  EXPECT_TRUE(fs::exists(path));
  EXPECT_EQ(path.filename(), "pipeline.json");
}

TEST(Pipeline, GoldGatingOnlyRunsTrueTurns) {
  auto cfg = mini();
  cfg.gating = Gating::Gold;
  const auto p = Pipeline::load(cfg);
  const auto sel = p.select_all(Gating::Gold, nullptr);
  std::size_t ran = 0;
  for (const auto& s : sel) {
    EXPECT_EQ(s.ran, s.gold_target.value_or(false));
    ran += s.ran ? 1 : 0;
  }
  EXPECT_GT(ran, 0u);
  const auto acc = account(sel);
  EXPECT_EQ(acc.task1_false_negatives, 0u);
  EXPECT_EQ(acc.true_knowledge_turns, ran);
  EXPECT_FALSE(p.run_generate().contains("detection"));
  EXPECT_THROW(p.select_all(Gating::Detection, nullptr), std::invalid_argument);
}

TEST(Pipeline, DetectionGatingCountsMisses) {
  const auto p = Pipeline::load(mini());
  const auto det = p.detect_all();
  const auto sel = p.select_all(Gating::Detection, &det);
  const auto acc = account(sel);
  std::size_t fn = 0;
  for (std::size_t i = 0; i < det.size(); ++i) {
    if (det[i].gold.value_or(false) && !det[i].result.target) ++fn;
    EXPECT_EQ(sel[i].ran, det[i].result.target);
  }
  EXPECT_EQ(acc.task1_false_negatives, fn);
  EXPECT_LE(acc.recall_at_1_loss_turns, acc.true_knowledge_turns);
  EXPECT_EQ(acc.recall_at_1_loss_turns, acc.task1_false_negatives + acc.task2_top1_errors);
}

TEST(Pipeline, MissingLabelsMarksMetricsUnavailable) {
  auto cfg = mini();
  cfg.data.labels.clear();
  const auto r = Pipeline::load(cfg).run_pipeline();
  EXPECT_FALSE(r["detection"]["available"].get<bool>());
  EXPECT_TRUE(r["detection"]["metrics"].is_null());
  EXPECT_TRUE(r["selection"]["metrics"].is_null());
  EXPECT_FALSE(r["detection"]["turns"].empty());
}

TEST(Pipeline, RemoteDownIsStageTaggedBackendError) {
  auto cfg = mini();
  cfg.scorers[std::string(kRoleDomainNli)] = "remote:http://127.0.0.1:9";
  cfg.remote.retries = 0;
  cfg.remote.timeout = std::chrono::milliseconds(300);
  try {
    Pipeline::load(cfg).run_pipeline();
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("detect stage: ", 0), 0u) << e.what();
  }
}

TEST(Pipeline, OracleScorersGivePerfectDetection) {
  const auto cfg = mini();
  const auto base = Pipeline::load(cfg);
  const auto& data = base.dataset();
  ASSERT_TRUE(data.labels);

  // premise -> (target, gold domain, gold bodies)
  struct Gold {
    bool target;
    std::string domain;
    std::set<std::string> bodies;
  };
  std::map<std::string, Gold> by_premise;
  for (std::size_t i = 0; i < data.dialogs.size(); ++i) {
    const auto& d = data.dialogs[i];
    const auto w = context_window(d, d.size() - 1, cfg.window_size);
    const auto& l = (*data.labels)[i];
    Gold g{l.target, l.gold_snippets.empty() ? "" : l.gold_snippets[0].domain, {}};
    for (const auto& k : l.gold_snippets) g.bodies.insert(base.knowledge().at(k).body);
    by_premise[render_premise(w, cfg.detection.domain_premise)] = g;
    by_premise[render_premise(w, cfg.detection.rank_premise)] = g;
  }
  auto lookup = [by_premise](const std::string& premise) -> const Gold* {
    const auto it = by_premise.find(premise);
    return it == by_premise.end() ? nullptr : &it->second;
  };
  auto domain = std::make_shared<FunctionScorer>("oracle-domain", [lookup](const TextPair& p) {
    const auto* g = lookup(p.premise);
    return g && g->target && p.hypothesis == render_domain_hypothesis(g->domain) ? 1.0 : 0.0;
  });
  auto rank = std::make_shared<FunctionScorer>("oracle-rank", [lookup](const TextPair& p) {
    const auto* g = lookup(p.premise);
    if (!g) return 0.0;
    if (g->target) return g->bodies.count(p.hypothesis) ? 1.0 : 0.0;
    return p.hypothesis == "Goodbye" ? 1.0 : 0.0;
  });
  auto backends = make_backends(cfg, base.knowledge(), load_database(cfg.resolve(cfg.data.database)));
  backends.domain_nli = domain;
  backends.candidate_rank = rank;
  const Pipeline p(cfg, base.knowledge(), load_database(cfg.resolve(cfg.data.database)), data, backends);
  const auto r = p.run_detect();
  EXPECT_DOUBLE_EQ(r["detection"]["metrics"]["f1"].get<double>(), 1.0) << r["detection"]["metrics"].dump();
  EXPECT_DOUBLE_EQ(r["detection"]["metrics"]["accuracy"].get<double>(), 1.0);
}

}  // namespace
}  // namespace kgd
