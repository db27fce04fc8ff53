// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgd/dialog_model.hpp"
#include "kgd/kb_store.hpp"

namespace kgd {

/// Case-insensitive substring rewrite applied during normalization, e.g.
/// "&" -> "and". The replacement always stands as separate tokens.
struct RewriteRule {
  std::string from;
  std::string to;
};

std::vector<RewriteRule> default_rewrites();

struct MatchConfig {
  double similarity_threshold = 0.8;
  double recency_decay = 0.9;
  std::vector<RewriteRule> rewrites = default_rewrites();
  /// Leading/trailing words stripped from entity names to derive extra aliases
  /// ("A & B Guest House" -> "a and b").
  std::vector<std::string> generic_prefixes = {"the"};
  std::vector<std::string> generic_suffixes = {"guest house", "guesthouse", "hotel", "restaurant", "b and b"};
  /// Extra surface forms for domain names, synonym -> domain.
  std::map<std::string, std::string> domain_synonyms = {
      {"cab", "taxi"}, {"guesthouse", "hotel"}, {"railway", "train"}, {"eatery", "restaurant"}};

  /// Throws std::invalid_argument when a knob is out of range.
  void validate() const;
};

/// A normalized token and the byte range in the original text it came from.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

std::vector<Token> tokenize(std::string_view text, const std::vector<RewriteRule>& rules = default_rewrites());

/// Lowercase, apply rewrites, turn punctuation into spaces, collapse whitespace.
std::string normalize(std::string_view text, const std::vector<RewriteRule>& rules = default_rewrites());

std::size_t edit_distance(std::string_view a, std::string_view b);

/// 1 - levenshtein / max length over two already-normalized strings; 1 when both are empty.
double normalized_similarity(std::string_view a, std::string_view b);

/// normalized_similarity of normalize(a) and normalize(b).
double similarity(std::string_view a, std::string_view b, const std::vector<RewriteRule>& rules = default_rewrites());

/// Inclusive threshold test with a small tolerance for floating-point ratios.
bool meets_threshold(double similarity, double threshold);

/// Normalized surface forms for an entity: its names plus affix-stripped variants.
std::vector<std::string> alias_forms(const Entity& entity, const MatchConfig& cfg);

/// Normalized surface forms for a domain: its name plus configured synonyms.
std::vector<std::string> domain_forms(std::string_view domain, const MatchConfig& cfg);

struct SpanMatch {
  std::size_t first_token = 0;  // [first_token, last_token)
  std::size_t last_token = 0;
  double similarity = 0.0;
};

/// Token n-grams (n within one token of the alias length) whose joined text
/// matches `alias` at or above `threshold`.
std::vector<SpanMatch> find_fuzzy_spans(const std::vector<Token>& tokens, std::string_view alias, double threshold);

struct MentionTarget {
  std::string domain;
  std::optional<std::string> entity_id;  // absent for domain mentions

  friend bool operator==(const MentionTarget&, const MentionTarget&) = default;
};

struct Mention {
  MentionTarget target;
  std::size_t turn_index = 0;  // position inside the window
  std::size_t span_begin = 0;  // byte range in the original turn text
  std::size_t span_end = 0;
  double similarity = 0.0;
  double recency_weight = 1.0;
  std::string alias;  // normalized form that matched

  double score() const noexcept { return similarity * recency_weight; }
};

/// Fuzzy entity mentions across the window, best mention per entity, ranked by
/// recency_weight * similarity (ties: domain, then entity id). Throws
/// std::invalid_argument for an unknown domain filter.
std::vector<Mention> match_entities(const ContextWindow& window, const KnowledgeBase& kb,
                                    const std::optional<std::string>& domain_filter, const MatchConfig& cfg);

/// Same mechanics for the names (and synonyms) of domain-wide domains.
std::vector<Mention> match_domains(const ContextWindow& window, const KnowledgeBase& kb, const MatchConfig& cfg);

}  // namespace kgd
