// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "kgd/turn_detector.hpp"

namespace kgd {
namespace {

const KnowledgeBase& kb() {
  static const KnowledgeBase k = parse_knowledge_base(R"({
    "hotel": {"1": {"name": "SW Hotel", "docs": {
      "1": {"title": "Is breakfast available?", "body": "No, we don't offer breakfast."},
      "2": {"title": "Is there a gym?", "body": "Yes, there is a gym."}}}},
    "train": {"*": {"docs": {"1": {"title": "Is there a charge for using WiFi?", "body": "Wifi is available free of charge."}}}}
  })",
                                                      default_training_domains());
  return k;
}

std::vector<DatabaseRecord> db() {
  return parse_database(R"([{"domain": "hotel", "name": "SW Hotel", "address": "615 Broadway", "postcode": "94133", "type": "Hotel"},
                            {"domain": "hotel", "name": "Other Inn", "postcode": "1"}])");
}

Dialog breakfast() {
  return {{Speaker::Assistant, "Would you like to book the SW hotel?"},
          {Speaker::User, "Yes, I can reach SW hotel by taxi. What breakfast options are available there?"}};
}

ContextWindow window(const Dialog& d) { return context_window(d, d.size() - 1, 9); }

// Scores 1 when the hypothesis contains `needle`, else 0.
FunctionScorer favoring(std::string needle) {
  return FunctionScorer("favor", [n = std::move(needle)](const TextPair& p) {
    return p.hypothesis.find(n) != std::string::npos ? 1.0 : 0.0;
  });
}

TEST(ClassifyDomain, OracleAndTies) {
  const std::vector<std::string> domains{"hotel", "restaurant", "taxi", "train"};
  const auto d = classify_domain(window(breakfast()), domains, favoring("hotel"));
  EXPECT_EQ(d.domain, "hotel");
  ASSERT_EQ(d.probabilities.size(), 4u);
  const FunctionScorer flat("flat", [](const TextPair&) { return 0.5; });
  const auto u = classify_domain(window(breakfast()), domains, flat);
  EXPECT_EQ(u.domain, "hotel");
  for (const auto& [name, p] : u.probabilities) EXPECT_NEAR(p, 0.25, 1e-12) << name;
  const std::vector<std::string> one{"taxi"};
  EXPECT_DOUBLE_EQ(classify_domain(window(breakfast()), one, flat).probabilities[0].second, 1.0);
}

TEST(FormatDbRecord, TemplateSentences) {
  const auto s = format_db_record(db()[0]);
  EXPECT_NE(std::find(s.begin(), s.end(), "Postcode for SW Hotel is 94133."), s.end());
  EXPECT_NE(std::find(s.begin(), s.end(), "Address for SW Hotel is 615 Broadway."), s.end());
  EXPECT_EQ(s.size(), 3u);
  EXPECT_TRUE(format_db_record(parse_database(R"([{"name": "Bare"}])")[0]).empty());
}

TEST(CandidatePool, EntityLevel) {
  const auto records = db();
  const auto pseudo = default_pseudo_candidates();
  const auto pool = build_candidate_pool(kb(), records, "hotel", &kb().entity("hotel", "1"), pseudo);
  auto has = [&](CandidateSource src, const std::string& text) {
    return std::any_of(pool.begin(), pool.end(), [&](const Candidate& c) { return c.source == src && c.text == text; });
  };
  EXPECT_TRUE(has(CandidateSource::Database, "Postcode for SW Hotel is 94133."));
  EXPECT_FALSE(has(CandidateSource::Database, "Postcode for Other Inn is 1."));
  EXPECT_TRUE(has(CandidateSource::Knowledge, "No, we don't offer breakfast."));
  EXPECT_TRUE(has(CandidateSource::Pseudo, "Goodbye"));
  EXPECT_TRUE(has(CandidateSource::Pseudo, "I want to book a hotel"));
  EXPECT_TRUE(has(CandidateSource::Pseudo, "Thanks"));
  // database sentences, then knowledge, then pseudo
  auto block = [](const Candidate& c) {
    return c.source == CandidateSource::Database ? 0 : c.source == CandidateSource::Knowledge ? 1 : 2;
  };
  EXPECT_TRUE(std::is_sorted(pool.begin(), pool.end(), [&](const Candidate& a, const Candidate& b) { return block(a) < block(b); }));
}

TEST(CandidatePool, DomainWideAndErrors) {
  const auto pool = build_candidate_pool(kb(), {}, "train", nullptr, {});
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool[0].text, "Wifi is available free of charge.");
  EXPECT_THROW(build_candidate_pool(kb(), {}, "spaceport", nullptr, {}), std::out_of_range);
  PoolOptions titles;
  titles.knowledge_text = KnowledgeText::Title;
  EXPECT_EQ(build_candidate_pool(kb(), {}, "train", nullptr, {}, titles)[0].text, "Is there a charge for using WiFi?");
}

TEST(RankCandidates, TieBreaksBySource) {
  const std::vector<Candidate> pool{{CandidateSource::Pseudo, "Goodbye", {}, {}},
                                    {CandidateSource::Knowledge, "Zebra", SnippetKey{"train", std::nullopt, "1"}, {}}};
  const FunctionScorer flat("flat", [](const TextPair&) { return 0.3; });
  const auto r = rank_candidates(window(breakfast()), pool, {2, true}, flat);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].candidate.source, CandidateSource::Knowledge);
  EXPECT_DOUBLE_EQ(r[0].probability, 0.3);  // raw entailment score, no normalisation
  EXPECT_THROW(rank_candidates(window(breakfast()), std::span<const Candidate>{}, {2, true}, flat), std::invalid_argument);
  const std::vector<Candidate> one{pool[0]};
  EXPECT_EQ(rank_candidates(window(breakfast()), one, {2, true}, flat)[0].candidate.text, "Goodbye");
}

TEST(Detect, BreakfastIsKnowledgeSeeking) {
  const auto records = db();
  const auto r = detect(window(breakfast()), kb(), records, favoring("hotel"), favoring("breakfast."), DetectorConfig{});
  EXPECT_TRUE(r.target);
  EXPECT_EQ(r.domain, "hotel");
  EXPECT_EQ(r.entity_name.value_or(""), "SW Hotel");
  EXPECT_EQ(r.ranked.front().candidate.text, "No, we don't offer breakfast.");
}

TEST(Detect, PseudoAndDatabaseTopsAreNotKnowledgeSeeking) {
  const auto records = db();
  const Dialog book{{Speaker::User, "I want to book a hotel"}};
  const auto a = detect(window(book), kb(), records, favoring("hotel"), favoring("I want to book a hotel"), DetectorConfig{});
  EXPECT_FALSE(a.target);
  EXPECT_EQ(a.ranked.front().candidate.source, CandidateSource::Pseudo);
  const Dialog postcode{{Speaker::User, "What is the postcode of SW Hotel?"}};
  const auto b = detect(window(postcode), kb(), records, favoring("hotel"), favoring("Postcode"), DetectorConfig{});
  EXPECT_FALSE(b.target);
  EXPECT_EQ(b.ranked.front().candidate.source, CandidateSource::Database);
}

TEST(Detect, EntityFallbackAndEmptyPool) {
  const Dialog vague{{Speaker::User, "Does the hotel have a gym?"}};
  const auto r = detect(window(vague), kb(), db(), favoring("hotel"), favoring("gym"), DetectorConfig{});
  EXPECT_TRUE(r.entity_fallback);
  EXPECT_TRUE(r.target);
  DetectorConfig cfg;
  cfg.pseudo_candidates.clear();
  cfg.domains = {"taxi"};
  const auto e = detect(window(vague), kb(), {}, favoring("taxi"), favoring("x"), cfg);
  EXPECT_TRUE(e.empty_pool);
  EXPECT_FALSE(e.target);
}

}  // namespace
}  // namespace kgd
