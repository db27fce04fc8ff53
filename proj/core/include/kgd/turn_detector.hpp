// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgd/dialog_model.hpp"
#include "kgd/kb_store.hpp"
#include "kgd/scorer.hpp"
#include "kgd/surface_matcher.hpp"

namespace kgd {

enum class CandidateSource { Knowledge, Database, Pseudo };

std::string_view to_string(CandidateSource source);

struct DatabaseRef {
  std::size_t record_index = 0;
  std::string attribute;

  friend bool operator==(const DatabaseRef&, const DatabaseRef&) = default;
};

/// One entry of the candidate information pool. Knowledge candidates carry a
/// snippet key, database candidates a record reference, pseudo candidates neither.
struct Candidate {
  CandidateSource source = CandidateSource::Pseudo;
  std::string text;
  std::optional<SnippetKey> snippet;
  std::optional<DatabaseRef> record;
};

struct ScoredCandidate {
  Candidate candidate;
  double probability = 0.0;
};

using AttributeLabels = std::map<std::string, std::string, std::less<>>;

AttributeLabels default_attribute_labels();

/// Which snippet field stands for a knowledge candidate.
enum class KnowledgeText { Body, Title };

struct DomainClassification {
  std::string domain;
  std::vector<std::pair<std::string, double>> probabilities;  // domain-name order
};

/// Scores "The user is asking about <d>." for every domain against a
/// templated two-turn premise and picks the softmax argmax. Ties go to the
/// alphabetically first domain.
DomainClassification classify_domain(const ContextWindow& window, std::span<const std::string> domains,
                                     const Scorer& scorer, const PremiseSpec& premise = {2, true});

/// "<Label> for <name> is <value>." for every attribute except the name.
std::vector<std::string> format_db_record(const DatabaseRecord& record,
                                          const AttributeLabels& labels = default_attribute_labels());

struct PoolOptions {
  KnowledgeText knowledge_text = KnowledgeText::Body;
  AttributeLabels attribute_labels = default_attribute_labels();
  std::vector<RewriteRule> rewrites = default_rewrites();
};

/// Candidate pool for a domain and optional entity: database sentences, then
/// knowledge snippets, then pseudo candidates. Without an entity the pool is
/// domain-level (every snippet and record of the domain). Throws
/// std::out_of_range for an unknown domain.
std::vector<Candidate> build_candidate_pool(const KnowledgeBase& kb, std::span<const DatabaseRecord> db,
                                            std::string_view domain, const Entity* entity,
                                            std::span<const std::string> pseudo, const PoolOptions& options = {});

/// Sorted by probability descending; ties: Knowledge, Database, Pseudo, then text.
/// Throws std::invalid_argument for an empty pool.
std::vector<ScoredCandidate> rank_candidates(const ContextWindow& window, std::span<const Candidate> pool,
                                             const PremiseSpec& spec, const Scorer& scorer);

std::vector<std::string> default_pseudo_candidates();

struct DetectorConfig {
  PremiseSpec domain_premise{2, true};
  PremiseSpec rank_premise{2, true};
  std::vector<std::string> pseudo_candidates = default_pseudo_candidates();
  std::vector<std::string> domains;  // empty: every knowledge-base domain
  PoolOptions pool;
  MatchConfig match;
};

struct DetectionResult {
  bool target = false;
  std::string domain;
  std::optional<std::string> entity_id;
  std::optional<std::string> entity_name;
  std::vector<ScoredCandidate> ranked;
  std::vector<std::pair<std::string, double>> domain_probabilities;
  bool empty_pool = false;       // nothing to rank; target forced false
  bool entity_fallback = false;  // entity-specific domain but no entity found
};

/// Domain classification, entity matching, pool construction and ranking.
/// The turn is knowledge-seeking iff the top candidate is a knowledge snippet.
DetectionResult detect(const ContextWindow& window, const KnowledgeBase& kb, std::span<const DatabaseRecord> db,
                       const Scorer& scorer_domain, const Scorer& scorer_rank, const DetectorConfig& cfg);

}  // namespace kgd
