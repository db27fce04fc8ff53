// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgd/eval_metrics.hpp"
#include "kgd/kb_store.hpp"
#include "kgd/knowledge_selector.hpp"
#include "kgd/remote_client.hpp"
#include "kgd/response_composer.hpp"
#include "kgd/scorer.hpp"
#include "kgd/turn_detector.hpp"

namespace kgd {

// Scorer roles, one binding each.
inline constexpr std::string_view kRoleDomainNli = "domain-nli";
inline constexpr std::string_view kRoleCandidateRank = "candidate-rank";
inline constexpr std::string_view kRoleDeRefine = "de-refine";
inline constexpr std::string_view kRoleDomainProb = "domain-prob";
inline constexpr std::string_view kRoleKnowledgeProb = "knowledge-prob";

const std::vector<std::string>& scorer_roles();

/// Environment variable consulted by the bare "remote" binding.
inline constexpr const char* kRemoteUrlEnv = "KGD_REMOTE_URL";

enum class Gating { Detection, Gold };

struct DataPaths {
  std::filesystem::path knowledge;
  std::filesystem::path database;  // optional
  std::filesystem::path logs;
  std::filesystem::path labels;  // optional
};

struct PipelineConfig {
  DataPaths data;
  std::filesystem::path base_dir;  // relative data/output paths resolve against this
  std::set<std::string> training_domains = default_training_domains();
  std::map<std::string, std::string> scorers;  // role -> "lexical" | "remote" | "remote:<url>"
  std::string generator = "template";
  std::size_t window_size = 9;
  DetectorConfig detection;
  MatchConfig match;
  SelectorConfig selection;
  Gating gating = Gating::Detection;
  ComposerConfig generation;
  std::map<std::string, std::string, std::less<>> domain_prompts = default_domain_prompts();
  std::string generic_prompt{kGenericPrompt};
  RemoteOptions remote;
  std::size_t workers = 1;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;  // reserved; every stage is deterministic

  /// Unknown keys and malformed values raise ConfigError.
  static PipelineConfig from_json(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir);
  nlohmann::ordered_json to_json() const;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::string binding(std::string_view role) const;  // "lexical" when unbound

  /// Checks ranges, bindings and that referenced files exist.
  void validate() const;
};

PipelineConfig load_config(const std::filesystem::path& path);

struct Backends {
  std::shared_ptr<const Scorer> domain_nli;
  std::shared_ptr<const Scorer> candidate_rank;
  std::shared_ptr<const Scorer> de_refine;
  std::shared_ptr<const Scorer> domain_prob;
  std::shared_ptr<const Scorer> knowledge_prob;
  std::shared_ptr<const Generator> generator;
};

/// Documents the lexical scorer's IDF table is built from: snippet titles and
/// bodies, database sentences and pseudo candidates.
std::vector<std::string> idf_corpus(const KnowledgeBase& kb, const std::vector<DatabaseRecord>& db,
                                    const std::vector<std::string>& pseudo);

Backends make_backends(const PipelineConfig& cfg, const KnowledgeBase& kb, const std::vector<DatabaseRecord>& db);

struct TurnDetection {
  std::size_t dialog = 0;
  std::size_t turn = 0;
  DetectionResult result;
  std::optional<bool> gold;
};

struct TurnSelection {
  std::size_t dialog = 0;
  bool ran = false;  // false when gating skipped the turn
  std::vector<DECandidate> candidates;
  std::vector<RankedSnippet> ranked;
  std::vector<SnippetKey> gold;
  std::optional<bool> gold_target;
  std::optional<bool> predicted_target;
};

struct TurnGeneration {
  std::size_t dialog = 0;
  ComposeResult result;
  std::optional<std::string> reference;
  std::optional<CaseLabel> case_label;
};

/// Recall@1 accounting over truly knowledge-seeking turns.
struct Accounting {
  std::size_t true_knowledge_turns = 0;
  std::size_t task1_false_negatives = 0;
  std::size_t task2_top1_errors = 0;
  std::size_t recall_at_1_loss_turns = 0;
};

Accounting account(const std::vector<TurnSelection>& selections);

class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, KnowledgeBase kb, std::vector<DatabaseRecord> db, DialogDataset data, Backends backends);

  /// Loads data and builds backends from the config's bindings.
  static Pipeline load(const PipelineConfig& cfg);

  const PipelineConfig& config() const noexcept { return cfg_; }
  const KnowledgeBase& knowledge() const noexcept { return kb_; }
  const DialogDataset& dataset() const noexcept { return data_; }

  std::vector<TurnDetection> detect_all() const;
  /// `detections` is required for Gating::Detection; gold gating needs labels.
  std::vector<TurnSelection> select_all(Gating gating, const std::vector<TurnDetection>* detections) const;
  std::vector<TurnGeneration> generate_all(const std::vector<TurnSelection>& selections,
                                           const ComposerConfig& composer) const;

  nlohmann::ordered_json run_detect() const;
  nlohmann::ordered_json run_select() const;
  nlohmann::ordered_json run_generate() const;
  nlohmann::ordered_json run_pipeline() const;
  nlohmann::ordered_json run_sweep_n(std::size_t max_n = 5) const;

 private:
  ContextWindow window_for(std::size_t dialog) const;

  template <typename Fn>
  auto parallel_map(std::size_t n, Fn fn) const -> std::vector<decltype(fn(std::size_t{}))>;

  PipelineConfig cfg_;
  KnowledgeBase kb_;
  std::vector<DatabaseRecord> db_;
  DialogDataset data_;
  Backends backends_;
};

/// Writes `<output_dir>/<command>.json` and returns the path.
std::filesystem::path write_report(const PipelineConfig& cfg, std::string_view command,
                                   const nlohmann::ordered_json& report);

}  // namespace kgd
