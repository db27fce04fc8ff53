// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include "kgd/turn_detector.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace kgd {
namespace {

int source_rank(CandidateSource s) {
  switch (s) {
    case CandidateSource::Knowledge: return 0;
    case CandidateSource::Database: return 1;
    case CandidateSource::Pseudo: return 2;
  }
  return 3;
}

std::string attribute_label(std::string_view attribute, const AttributeLabels& labels) {
  if (auto it = labels.find(attribute); it != labels.end()) return it->second;
  std::string out(attribute);
  std::replace(out.begin(), out.end(), '_', ' ');
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

bool record_names_entity(const DatabaseRecord& rec, const Entity& entity, const std::vector<RewriteRule>& rules) {
  const auto name = normalize(rec.entity_name, rules);
  for (const auto& n : entity.names()) {
    if (normalize(n, rules) == name) return true;
  }
  return false;
}

void append_record(std::vector<Candidate>& pool, const DatabaseRecord& rec, std::size_t index,
                   const AttributeLabels& labels) {
  auto sentences = format_db_record(rec, labels);
  std::size_t s = 0;
  for (const auto& [attr, value] : rec.attributes) {
    if (attr == "name") continue;
    pool.push_back({CandidateSource::Database, std::move(sentences[s++]), std::nullopt, DatabaseRef{index, attr}});
  }
}

std::vector<Candidate> make_pool(const KnowledgeBase& kb, std::span<const DatabaseRecord> db, std::string_view domain,
                                 const Entity* entity, std::span<const std::string> pseudo, const PoolOptions& options) {
  std::vector<Candidate> pool;
  for (std::size_t i = 0; i < db.size(); ++i) {
    const auto& rec = db[i];
    const bool domain_ok = entity ? (rec.domain.empty() || rec.domain == domain) : rec.domain == domain;
    if (!domain_ok) continue;
    if (entity && !record_names_entity(rec, *entity, options.rewrites)) continue;
    append_record(pool, rec, i, options.attribute_labels);
  }

  if (kb.has_domain(domain)) {
    std::vector<const KnowledgeSnippet*> snippets;
    if (entity) {
      snippets = kb.snippets_for(domain, entity->entity_id);
    } else {
      for (const auto& s : kb.snippets()) {
        if (s.key.domain == domain) snippets.push_back(&s);
      }
    }
    for (const auto* s : snippets) {
      pool.push_back({CandidateSource::Knowledge, options.knowledge_text == KnowledgeText::Body ? s->body : s->title,
                      s->key, std::nullopt});
    }
  }

  for (const auto& p : pseudo) pool.push_back({CandidateSource::Pseudo, p, std::nullopt, std::nullopt});
  return pool;
}

}  // namespace

std::string_view to_string(CandidateSource source) {
  switch (source) {
    case CandidateSource::Knowledge: return "knowledge";
    case CandidateSource::Database: return "database";
    case CandidateSource::Pseudo: return "pseudo";
  }
  return "unknown";
}

AttributeLabels default_attribute_labels() {
  return {{"address", "Address"},       {"area", "Area"},           {"food", "Food"},
          {"internet", "Internet"},     {"parking", "Parking"},     {"phone", "Phone number"},
          {"postcode", "Postcode"},     {"pricerange", "Price range"}, {"stars", "Star rating"},
          {"type", "Type"},             {"openhours", "Opening hours"}, {"entrance fee", "Entrance fee"}};
}

std::vector<std::string> default_pseudo_candidates() {
  return {"Goodbye", "I want to book a hotel", "Thanks", "Thank you, that is all I need", "I want to book a table",
          "I need a taxi", "I want to book a train ticket"};
}

DomainClassification classify_domain(const ContextWindow& window, std::span<const std::string> domains,
                                     const Scorer& scorer, const PremiseSpec& premise) {
  if (domains.empty()) throw std::invalid_argument("domain classification needs at least one domain");
  std::vector<std::string> sorted(domains.begin(), domains.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  const auto text = render_premise(window, premise);
  std::vector<TextPair> pairs;
  pairs.reserve(sorted.size());
  for (const auto& d : sorted) pairs.push_back({text, render_domain_hypothesis(d)});
  const auto probs = softmax_over(scorer.score_pairs(pairs));

  DomainClassification out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out.probabilities.emplace_back(sorted[i], probs[i]);
    if (probs[i] > probs[best]) best = i;
  }
  out.domain = sorted[best];
  return out;
}

std::vector<std::string> format_db_record(const DatabaseRecord& record, const AttributeLabels& labels) {
  std::vector<std::string> out;
  for (const auto& [attr, value] : record.attributes) {
    if (attr == "name") continue;
    out.push_back(attribute_label(attr, labels) + " for " + record.entity_name + " is " + value + ".");
  }
  return out;
}

std::vector<Candidate> build_candidate_pool(const KnowledgeBase& kb, std::span<const DatabaseRecord> db,
                                            std::string_view domain, const Entity* entity,
                                            std::span<const std::string> pseudo, const PoolOptions& options) {
  if (!kb.has_domain(domain)) throw std::out_of_range("unknown domain '" + std::string(domain) + "'");
  if (entity && entity->domain != domain)
    throw std::invalid_argument("entity '" + entity->canonical_name + "' does not belong to domain '" +
                                std::string(domain) + "'");
  return make_pool(kb, db, domain, entity, pseudo, options);
}

std::vector<ScoredCandidate> rank_candidates(const ContextWindow& window, std::span<const Candidate> pool,
                                             const PremiseSpec& spec, const Scorer& scorer) {
  if (pool.empty()) throw std::invalid_argument("cannot rank an empty candidate pool");
  const auto premise = render_premise(window, spec);
  std::vector<TextPair> pairs;
  pairs.reserve(pool.size());
  for (const auto& c : pool) pairs.push_back({premise, c.text});
  const auto scores = scorer.score_pairs(pairs);
  check_scores(scores, pool.size(), scorer.name());

  std::vector<ScoredCandidate> ranked;
  ranked.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) ranked.push_back({pool[i], scores[i]});
  std::sort(ranked.begin(), ranked.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    const int sa = source_rank(a.candidate.source);
    const int sb = source_rank(b.candidate.source);
    if (sa != sb) return sa < sb;
    if (a.candidate.text != b.candidate.text) return a.candidate.text < b.candidate.text;
    if (a.candidate.snippet && b.candidate.snippet) return *a.candidate.snippet < *b.candidate.snippet;
    if (a.candidate.record && b.candidate.record) {
      if (a.candidate.record->record_index != b.candidate.record->record_index)
        return a.candidate.record->record_index < b.candidate.record->record_index;
      return a.candidate.record->attribute < b.candidate.record->attribute;
    }
    return false;
  });
  return ranked;
}

DetectionResult detect(const ContextWindow& window, const KnowledgeBase& kb, std::span<const DatabaseRecord> db,
                       const Scorer& scorer_domain, const Scorer& scorer_rank, const DetectorConfig& cfg) {
  DetectionResult result;
  std::vector<std::string> domains = cfg.domains;
  if (domains.empty()) domains.assign(kb.domains().begin(), kb.domains().end());
  if (domains.empty()) {
    result.empty_pool = true;
    return result;
  }

  auto cls = classify_domain(window, domains, scorer_domain, cfg.domain_premise);
  result.domain = cls.domain;
  result.domain_probabilities = std::move(cls.probabilities);

  const Entity* entity = nullptr;
  if (kb.is_entity_specific(result.domain)) {
    auto mentions = match_entities(window, kb, result.domain, cfg.match);
    if (!mentions.empty()) {
      entity = &kb.entity(result.domain, *mentions.front().target.entity_id);
      result.entity_id = entity->entity_id;
      result.entity_name = entity->canonical_name;
    } else {
      result.entity_fallback = true;
    }
  }

  // A configured domain outside the knowledge base still gets database and pseudo candidates.
  auto pool = make_pool(kb, db, result.domain, entity, cfg.pseudo_candidates, cfg.pool);
  if (pool.empty()) {
    result.empty_pool = true;
    return result;
  }
  result.ranked = rank_candidates(window, pool, cfg.rank_premise, scorer_rank);
  result.target = result.ranked.front().candidate.source == CandidateSource::Knowledge;
  return result;
}

}  // namespace kgd
