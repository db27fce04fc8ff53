// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgd/dialog_model.hpp"
#include "kgd/kb_store.hpp"
#include "kgd/scorer.hpp"
#include "kgd/surface_matcher.hpp"

namespace kgd {

enum class Provenance { SurfaceMatch, Refiner };

std::string_view to_string(Provenance provenance);

/// A (domain, entity) pair that survived pruning. entity_id is set exactly
/// for entity-specific domains.
struct DECandidate {
  std::string domain;
  std::optional<std::string> entity_id;
  Provenance provenance = Provenance::SurfaceMatch;

  friend bool operator==(const DECandidate&, const DECandidate&) = default;
};

struct RankedSnippet {
  SnippetKey snippet;
  double domain_prob = 0.0;
  double knowledge_prob = 0.0;
  double confidence = 0.0;  // domain_prob * knowledge_prob
};

struct SelectorConfig {
  MatchConfig match;
  std::size_t k = 5;
  std::vector<std::string> domain_labels;  // empty: every knowledge-base domain
};

/// Surface-matched domains and entities, plus the refiner's top pick when it
/// lands in a different domain than the best surface match. One candidate per domain.
std::vector<DECandidate> select_de_candidates(const ContextWindow& window, const KnowledgeBase& kb,
                                              const Scorer& scorer_refine, const MatchConfig& cfg = {});

/// Refiner hypothesis for a candidate: "<domain>" or "<domain> <entity name>".
std::string render_refiner_hypothesis(std::string_view domain, const Entity* entity);

/// Softmax over the window text scored against each domain label. Throws
/// std::invalid_argument for an empty domain list.
std::map<std::string, double, std::less<>> domain_probability(const ContextWindow& window,
                                                              std::span<const std::string> domains,
                                                              const Scorer& scorer_domain);

/// Replaces every fuzzy occurrence of the entity's names with `domain`.
/// Repeats until nothing changes, so masking a masked text is a no-op.
std::string mask_entity(std::string_view text, const Entity& entity, std::string_view domain,
                        const MatchConfig& cfg = {});

/// Softmax within one candidate's snippets. Premise is the (masked) current
/// utterance, hypothesis "<domain> <title> <body>" with the entity masked.
/// Throws std::invalid_argument for an empty snippet list or snippets
/// outside the candidate.
std::vector<double> knowledge_probability(std::string_view current_utterance, const DECandidate& candidate,
                                          const KnowledgeBase& kb, std::span<const KnowledgeSnippet* const> snippets,
                                          const Scorer& scorer_know, const MatchConfig& cfg = {});

/// Scores the snippets of every candidate with domain_prob * knowledge_prob,
/// sorts by confidence (ties by snippet key) and keeps the top k.
std::vector<RankedSnippet> rank_snippets(const ContextWindow& window, const KnowledgeBase& kb,
                                         std::span<const DECandidate> candidates, const Scorer& scorer_domain,
                                         const Scorer& scorer_know, const SelectorConfig& cfg = {});

/// rank_snippets over every (domain, entity) group of the knowledge base.
std::vector<RankedSnippet> brute_force_joint(const ContextWindow& window, const KnowledgeBase& kb,
                                             const Scorer& scorer_domain, const Scorer& scorer_know,
                                             const SelectorConfig& cfg = {});

/// Every (domain, entity) group in the knowledge base, in key order.
std::vector<DECandidate> all_groups(const KnowledgeBase& kb);

}  // namespace kgd
