// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include "kgd/knowledge_selector.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>

namespace kgd {
namespace {

constexpr int kMaxMaskPasses = 32;

bool ranks_before(const RankedSnippet& a, const RankedSnippet& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return a.snippet < b.snippet;
}

std::string mask_once(std::string_view text, const Entity& entity, std::string_view domain, const MatchConfig& cfg) {
  const auto tokens = tokenize(text, cfg.rewrites);
  std::vector<SpanMatch> spans;
  for (const auto& alias : alias_forms(entity, cfg)) {
    auto found = find_fuzzy_spans(tokens, alias, cfg.similarity_threshold);
    spans.insert(spans.end(), found.begin(), found.end());
  }
  if (spans.empty()) return std::string(text);

  std::sort(spans.begin(), spans.end(), [](const SpanMatch& a, const SpanMatch& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    const auto la = a.last_token - a.first_token;
    const auto lb = b.last_token - b.first_token;
    if (la != lb) return la > lb;
    return a.first_token < b.first_token;
  });
  std::vector<SpanMatch> chosen;
  for (const auto& s : spans) {
    const bool overlaps = std::any_of(chosen.begin(), chosen.end(), [&](const SpanMatch& c) {
      return s.first_token < c.last_token && c.first_token < s.last_token;
    });
    if (!overlaps) chosen.push_back(s);
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const SpanMatch& a, const SpanMatch& b) { return a.first_token > b.first_token; });

  std::string out(text);
  for (const auto& s : chosen) {
    const auto begin = tokens[s.first_token].begin;
    const auto end = tokens[s.last_token - 1].end;
    out.replace(begin, end - begin, domain);
  }
  return out;
}

const Entity* candidate_entity(const KnowledgeBase& kb, const DECandidate& c) {
  return c.entity_id ? &kb.entity(c.domain, *c.entity_id) : nullptr;
}

}  // namespace

std::string_view to_string(Provenance provenance) {
  return provenance == Provenance::SurfaceMatch ? "surface_match" : "refiner";
}

std::string render_refiner_hypothesis(std::string_view domain, const Entity* entity) {
  std::string out(domain);
  if (entity) out += " " + entity->canonical_name;
  return out;
}

std::vector<DECandidate> all_groups(const KnowledgeBase& kb) {
  std::vector<DECandidate> out;
  for (const auto& d : kb.domains()) {
    if (kb.is_domain_wide(d)) {
      out.push_back({d, std::nullopt, Provenance::SurfaceMatch});
    } else {
      for (const auto* e : kb.entities(d)) out.push_back({d, e->entity_id, Provenance::SurfaceMatch});
    }
  }
  return out;
}

std::vector<DECandidate> select_de_candidates(const ContextWindow& window, const KnowledgeBase& kb,
                                              const Scorer& scorer_refine, const MatchConfig& cfg) {
  auto mentions = match_entities(window, kb, std::nullopt, cfg);
  auto domains = match_domains(window, kb, cfg);
  mentions.insert(mentions.end(), std::make_move_iterator(domains.begin()), std::make_move_iterator(domains.end()));
  std::stable_sort(mentions.begin(), mentions.end(), [](const Mention& a, const Mention& b) {
    if (a.score() != b.score()) return a.score() > b.score();
    if (a.target.domain != b.target.domain) return a.target.domain < b.target.domain;
    // Domain mentions (no entity) before entity mentions of the same score.
    if (a.target.entity_id.has_value() != b.target.entity_id.has_value()) return !a.target.entity_id.has_value();
    return a.target.entity_id && compare_ids(*a.target.entity_id, *b.target.entity_id) < 0;
  });

  std::vector<DECandidate> out;
  auto has_domain = [&](std::string_view d) {
    return std::any_of(out.begin(), out.end(), [&](const DECandidate& c) { return c.domain == d; });
  };
  for (const auto& m : mentions) {
    if (!has_domain(m.target.domain)) out.push_back({m.target.domain, m.target.entity_id, Provenance::SurfaceMatch});
  }

  const auto groups = all_groups(kb);
  if (groups.empty()) return out;
  const auto premise = window_text(window);
  std::vector<TextPair> pairs;
  pairs.reserve(groups.size());
  for (const auto& g : groups) pairs.push_back({premise, render_refiner_hypothesis(g.domain, candidate_entity(kb, g))});
  const auto scores = scorer_refine.score_pairs(pairs);
  check_scores(scores, pairs.size(), scorer_refine.name());

  // groups are in key order, so the first maximum is the tie-break winner.
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  const auto& top = groups[best];
  if ((out.empty() || top.domain != out.front().domain) && !has_domain(top.domain)) {
    out.push_back({top.domain, top.entity_id, Provenance::Refiner});
  }
  return out;
}

std::map<std::string, double, std::less<>> domain_probability(const ContextWindow& window,
                                                              std::span<const std::string> domains,
                                                              const Scorer& scorer_domain) {
  if (domains.empty()) throw std::invalid_argument("domain probability needs at least one domain");
  const auto premise = window_text(window);
  std::vector<TextPair> pairs;
  pairs.reserve(domains.size());
  for (const auto& d : domains) pairs.push_back({premise, d});
  const auto scores = scorer_domain.score_pairs(pairs);
  check_scores(scores, pairs.size(), scorer_domain.name());
  const auto probs = softmax_over(scores);
  std::map<std::string, double, std::less<>> out;
  for (std::size_t i = 0; i < domains.size(); ++i) out[domains[i]] = probs[i];
  return out;
}

std::string mask_entity(std::string_view text, const Entity& entity, std::string_view domain,
                        const MatchConfig& cfg) {
  std::string cur(text);
  for (int pass = 0; pass < kMaxMaskPasses; ++pass) {
    auto next = mask_once(cur, entity, domain, cfg);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

std::vector<double> knowledge_probability(std::string_view current_utterance, const DECandidate& candidate,
                                          const KnowledgeBase& kb, std::span<const KnowledgeSnippet* const> snippets,
                                          const Scorer& scorer_know, const MatchConfig& cfg) {
  if (snippets.empty()) throw std::invalid_argument("knowledge probability over an empty snippet set");
  for (const auto* s : snippets) {
    if (s->key.domain != candidate.domain || s->key.entity_id != candidate.entity_id)
      throw std::invalid_argument("snippet " + to_string(s->key) + " does not belong to the candidate");
  }
  const Entity* entity = candidate_entity(kb, candidate);
  auto mask = [&](std::string_view t) {
    return entity ? mask_entity(t, *entity, candidate.domain, cfg) : std::string(t);
  };

  const auto premise = mask(current_utterance);
  std::vector<TextPair> pairs;
  pairs.reserve(snippets.size());
  for (const auto* s : snippets) pairs.push_back({premise, candidate.domain + " " + mask(s->title) + " " + mask(s->body)});
  const auto scores = scorer_know.score_pairs(pairs);
  check_scores(scores, pairs.size(), scorer_know.name());
  return softmax_over(scores);
}

std::vector<RankedSnippet> rank_snippets(const ContextWindow& window, const KnowledgeBase& kb,
                                         std::span<const DECandidate> candidates, const Scorer& scorer_domain,
                                         const Scorer& scorer_know, const SelectorConfig& cfg) {
  if (candidates.empty()) throw std::invalid_argument("rank_snippets needs at least one candidate");
  if (cfg.k == 0) throw std::invalid_argument("rank_snippets needs k >= 1");

  std::vector<std::string> labels = cfg.domain_labels;
  if (labels.empty()) labels.assign(kb.domains().begin(), kb.domains().end());
  for (const auto& c : candidates) {
    if (std::find(labels.begin(), labels.end(), c.domain) == labels.end()) labels.push_back(c.domain);
  }
  const auto dprob = domain_probability(window, labels, scorer_domain);

  std::vector<RankedSnippet> out;
  for (const auto& c : candidates) {
    const auto snippets = kb.snippets_for(c.domain, c.entity_id);
    if (snippets.empty()) continue;
    const auto kprob = knowledge_probability(window.current().text, c, kb, snippets, scorer_know, cfg.match);
    const double dp = dprob.find(c.domain)->second;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
      out.push_back({snippets[i]->key, dp, kprob[i], dp * kprob[i]});
    }
  }
  if (out.empty()) throw std::invalid_argument("no candidate has any knowledge snippet");
  std::sort(out.begin(), out.end(), ranks_before);
  if (out.size() > cfg.k) out.resize(cfg.k);
  return out;
}

std::vector<RankedSnippet> brute_force_joint(const ContextWindow& window, const KnowledgeBase& kb,
                                             const Scorer& scorer_domain, const Scorer& scorer_know,
                                             const SelectorConfig& cfg) {
  const auto groups = all_groups(kb);
  if (groups.empty()) return {};
  return rank_snippets(window, kb, groups, scorer_domain, scorer_know, cfg);
}

}  // namespace kgd
