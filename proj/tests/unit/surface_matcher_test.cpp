// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "kgd/surface_matcher.hpp"

namespace kgd {
namespace {

KnowledgeBase hotels() {
  return parse_knowledge_base(R"({
    "hotel": {
      "1": {"name": "A & B Guest House", "docs": {"1": {"title": "t", "body": "b"}}},
      "2": {"name": "Avalon", "docs": {"1": {"title": "t", "body": "b"}}},
      "3": {"name": "The Lensfield Hotel", "docs": {"1": {"title": "t", "body": "b"}}}},
    "train": {"*": {"docs": {"1": {"title": "t", "body": "b"}}}},
    "taxi": {"*": {"docs": {"1": {"title": "t", "body": "b"}}}}
  })",
                              default_training_domains());
}

std::vector<Mention> match(const Dialog& d, std::optional<std::string> filter = std::string("hotel")) {
  return match_entities(context_window(d, d.size() - 1, 9), hotels(), filter, MatchConfig{});
}

TEST(Normalize, RewritesAndPunctuation) {
  EXPECT_EQ(normalize("A & B Guest-House!"), "a and b guest house");
  EXPECT_EQ(normalize("A&B"), "a and b");
  EXPECT_EQ(normalize("  Caf\xC3\xA9  Rouge "), "caf\xC3\xA9 rouge");
}

TEST(Tokenize, KeepsSourceSpans) {
  const std::string text = "At A&B, please";
  const auto t = tokenize(text);
  ASSERT_EQ(t.size(), 5u);
  EXPECT_EQ(t[2].text, "and");
  EXPECT_EQ(text.substr(t[2].begin, t[2].end - t[2].begin), "&");
  EXPECT_EQ(text.substr(t[4].begin, t[4].end - t[4].begin), "please");
}

TEST(Similarity, MatchesOracleEditDistance) {
  kgd_test::Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    std::string a, b;
    for (std::size_t k = 0, n = kgd_test::uniform(rng, 0, 8); k < n; ++k) a += static_cast<char>('a' + kgd_test::uniform(rng, 0, 3));
    for (std::size_t k = 0, n = kgd_test::uniform(rng, 0, 8); k < n; ++k) b += static_cast<char>('a' + kgd_test::uniform(rng, 0, 3));
    EXPECT_EQ(edit_distance(a, b), kgd_test::oracle_edit_distance(a, b)) << a << " / " << b;
    EXPECT_EQ(edit_distance(a, b), edit_distance(b, a));
  }
  EXPECT_DOUBLE_EQ(normalized_similarity("", ""), 1.0);
  EXPECT_NEAR(similarity("Avolon", "Avalon"), 5.0 / 6.0, 1e-12);
  EXPECT_TRUE(meets_threshold(0.8 - 1e-12, 0.8));
}

TEST(AliasForms, StripsGenericAffixes) {
  const Entity e{"hotel", "1", "A & B Guest House", {}};
  const auto forms = alias_forms(e, MatchConfig{});
  EXPECT_NE(std::find(forms.begin(), forms.end(), "a and b guest house"), forms.end());
  EXPECT_NE(std::find(forms.begin(), forms.end(), "a and b"), forms.end());
  const Entity l{"hotel", "3", "The Lensfield Hotel", {}};
  const auto lf = alias_forms(l, MatchConfig{});
  EXPECT_NE(std::find(lf.begin(), lf.end(), "lensfield"), lf.end());
}

TEST(MatchEntities, AliasAndMisspelling) {
  auto m = match({{Speaker::User, "Is there parking at A and B?"}});
  ASSERT_FALSE(m.empty());
  EXPECT_EQ(m.front().target.entity_id, "1");
  m = match({{Speaker::User, "Does the Avolon have a garden?"}});
  ASSERT_FALSE(m.empty());
  EXPECT_EQ(m.front().target.entity_id, "2");
  EXPECT_LT(m.front().similarity, 1.0);
}

TEST(MatchEntities, ReportsByteSpan) {
  const std::string text = "Tell me about the Lensfield please";
  const auto m = match({{Speaker::User, text}});
  ASSERT_FALSE(m.empty());
  EXPECT_EQ(m.front().target.entity_id, "3");
  const auto span = text.substr(m.front().span_begin, m.front().span_end - m.front().span_begin);
  EXPECT_NE(span.find("Lensfield"), std::string::npos);
}

TEST(MatchEntities, LaterMentionWins) {
  const Dialog d{{Speaker::User, "I looked at Avalon."},
                 {Speaker::Assistant, "The Lensfield Hotel is also nice."},
                 {Speaker::User, "Does it have a gym?"}};
  const auto m = match(d);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].target.entity_id, "3");
  EXPECT_GT(m[0].recency_weight, m[1].recency_weight);
  EXPECT_NEAR(m[1].recency_weight, 0.81, 1e-12);
}

TEST(MatchEntities, FilterAndNoMatch) {
  EXPECT_TRUE(match({{Speaker::User, "I need a train to London."}}).empty());
  EXPECT_THROW(match({{Speaker::User, "x"}}, std::string("spaceport")), std::invalid_argument);
  EXPECT_EQ(match({{Speaker::User, "Avalon please"}}, std::nullopt).size(), 1u);
}

TEST(MatchDomains, NamesAndSynonyms) {
  const auto kb = hotels();
  const Dialog d{{Speaker::User, "Book me a cab after the train."}};
  const auto m = match_domains(context_window(d, 0, 9), kb, MatchConfig{});
  ASSERT_EQ(m.size(), 2u);
  for (const auto& x : m) EXPECT_FALSE(x.target.entity_id.has_value());
}

TEST(MatchConfig, Validation) {
  MatchConfig c;
  c.similarity_threshold = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = MatchConfig{};
  c.recency_decay = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace kgd
