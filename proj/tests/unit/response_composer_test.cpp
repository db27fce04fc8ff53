// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "kgd/response_composer.hpp"

namespace kgd {
namespace {

const KnowledgeBase& kb() {
  static const KnowledgeBase k = parse_knowledge_base(R"({
    "hotel": {"1": {"name": "The Lensfield Hotel", "docs": {
        "1": {"title": "Are children welcome?", "body": "Children of any age are welcome at The Lensfield Hotel."},
        "2": {"title": "Is there a gym?", "body": "Yes, there is a gym"},
        "3": {"title": "Breakfast?", "body": "No, we don't offer breakfast."}}}},
    "attraction": {"1": {"name": "Kings College", "docs": {
        "1": {"title": "Can I take photos?", "body": "Photography is allowed outside"},
        "2": {"title": "Is there a cafe?", "body": "There is no cafe."}}}}
  })",
                                                      default_training_domains());
  return k;
}

RankedSnippet rs(std::string domain, std::string entity, std::string doc, double c) {
  return {SnippetKey{std::move(domain), std::move(entity), std::move(doc)}, 1.0, c, c};
}

TEST(CountWords, Whitespace) {
  EXPECT_EQ(count_words(""), 0u);
  EXPECT_EQ(count_words("  a  b\tc\n"), 3u);
}

TEST(AssembleInput, ClampsSnippetCount) {
  Dialog d{{Speaker::User, "hi"}};
  const auto w = context_window(d, 0, 9);
  const std::vector<RankedSnippet> five{rs("hotel", "1", "1", .5), rs("hotel", "1", "2", .2), rs("hotel", "1", "3", .1),
                                        rs("attraction", "1", "1", .1), rs("attraction", "1", "2", .1)};
  const auto r = assemble_generator_input(w, kb(), five, 4);
  ASSERT_EQ(r.snippets.size(), 4u);
  EXPECT_EQ(r.snippets[0].body, "Children of any age are welcome at The Lensfield Hotel.");
  EXPECT_EQ(r.snippets[3].domain, "attraction");
  const std::vector<RankedSnippet> two(five.begin(), five.begin() + 2);
  EXPECT_EQ(assemble_generator_input(w, kb(), two, 4).snippets.size(), 2u);
}

TEST(AssembleInput, HistoryIsBudgetedSuffix) {
  Dialog d;
  for (int i = 0; i < 12; ++i) {
    std::string text;
    for (int k = 0; k < 15; ++k) text += "w" + std::to_string(i) + " ";
    d.push_back({i % 2 == 0 ? Speaker::User : Speaker::Assistant, text + "end"});
  }
  d.push_back({Speaker::User, "last question"});
  const auto w = context_window(d, d.size() - 1, d.size());
  const std::vector<RankedSnippet> top{rs("hotel", "1", "3", 1.0)};
  const auto r = assemble_generator_input(w, kb(), top, 4, TokenBudget{128, 256});
  std::size_t words = 0;
  for (const auto& t : r.history) words += count_words(t.text);
  EXPECT_LE(words, 128u);
  ASSERT_FALSE(r.history.empty());
  EXPECT_EQ(r.history.back().text, "last question");
  // a suffix of the window, and adding the next older turn would overflow
  const auto offset = w.turns.size() - r.history.size();
  for (std::size_t i = 0; i < r.history.size(); ++i) EXPECT_EQ(r.history[i].text, w.turns[offset + i].text);
  EXPECT_GT(words + count_words(w.turns[offset - 1].text), 128u);
}

TEST(AssembleInput, RequiresSnippets) {
  Dialog d{{Speaker::User, "hi"}};
  EXPECT_THROW(assemble_generator_input(context_window(d, 0, 9), kb(), {}, 4), std::invalid_argument);
}

TEST(AssembleInput, OversizedPiecesAreTruncated) {
  Dialog d{{Speaker::User, "one two three four five six"}};
  const auto w = context_window(d, 0, 9);
  const std::vector<RankedSnippet> top{rs("hotel", "1", "1", 1.0)};
  const auto r = assemble_generator_input(w, kb(), top, 4, TokenBudget{3, 4});
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.history[0].text, "four five six");
  ASSERT_EQ(r.snippets.size(), 1u);
  EXPECT_LE(count_words(r.snippets[0].title) + count_words(r.snippets[0].body), 4u);
}

TEST(Segment, Examples) {
  const auto a = segment_response("Yes, The Lensfield Hotel welcomes children to stay. Should I make the reservation now?");
  EXPECT_EQ(a.body, "Yes, The Lensfield Hotel welcomes children to stay.");
  EXPECT_EQ(a.prompt.value_or(""), "Should I make the reservation now?");
  const auto b = segment_response("Pets are not allowed.");
  EXPECT_EQ(b.body, "Pets are not allowed.");
  EXPECT_FALSE(b.prompt);
  const auto c = segment_response("Anything else? Do you want to book?");
  EXPECT_EQ(c.body, "Anything else?");
  EXPECT_EQ(c.prompt.value_or(""), "Do you want to book?");
  EXPECT_EQ(split_sentences("A. B! C? D"), (std::vector<std::string>{"A.", "B!", "C?", "D"}));
  EXPECT_EQ(split_sentences("Price is 3.50 pounds."), (std::vector<std::string>{"Price is 3.50 pounds."}));
}

TEST(Reconstruct, Examples) {
  const auto& lens = kb().at(SnippetKey{"hotel", "1", "1"});
  EXPECT_EQ(reconstruct("Yes, The Lensfield Hotel welcomes children to stay. Should I make the reservation now?", lens),
            "Children of any age are welcome at The Lensfield Hotel. Should I make the reservation now?");
  EXPECT_EQ(reconstruct("Pets are not allowed.", lens), lens.body);
  const auto& gym = kb().at(SnippetKey{"hotel", "1", "2"});
  EXPECT_EQ(reconstruct("Sure. Would you like to book?", gym), "Yes, there is a gym. Would you like to book?");
}

TEST(Decide, Branches) {
  const auto train = default_training_domains();
  const std::vector<RankedSnippet> id{rs("hotel", "1", "1", .1), rs("attraction", "1", "1", .9)};
  EXPECT_EQ(decide(id, train), (ComposeDecision{Branch::Generate, Reason::InDomain}));
  const std::vector<RankedSnippet> strong{rs("attraction", "1", "1", .8), rs("attraction", "1", "2", .1)};
  EXPECT_EQ(decide(strong, train), (ComposeDecision{Branch::Reconstruct, Reason::OODHighConfidence}));
  const std::vector<RankedSnippet> weak{rs("attraction", "1", "1", .4), rs("attraction", "1", "2", .3)};
  EXPECT_EQ(decide(weak, train), (ComposeDecision{Branch::Generate, Reason::OODFallback}));
  const std::vector<RankedSnippet> exact{rs("attraction", "1", "1", .5), rs("attraction", "1", "2", .1)};
  EXPECT_EQ(decide(exact, train).branch, Branch::Reconstruct);
  const std::vector<RankedSnippet> single{rs("attraction", "1", "1", .01)};
  EXPECT_EQ(decide(single, train).branch, Branch::Reconstruct);
  EXPECT_THROW(decide(std::span<const RankedSnippet>{}, train), std::invalid_argument);
  EXPECT_THROW(decide(strong, train, 1.0), std::invalid_argument);
  EXPECT_EQ(to_string(Reason::OODHighConfidence), "ood_high_confidence");
}

class FixedGenerator final : public Generator {
 public:
  explicit FixedGenerator(std::string text) : text_(std::move(text)) {}
  std::string generate(const GeneratorRequest&) const override { return text_; }
  std::string name() const override { return "fixed"; }

 private:
  std::string text_;
};

TEST(Respond, BranchPassthroughAndReconstruction) {
  Dialog d{{Speaker::User, "Can I bring my kids?"}};
  const auto w = context_window(d, 0, 9);
  const FixedGenerator gen("Yes, The Lensfield Hotel welcomes children to stay. Should I make the reservation now?");
  const std::vector<RankedSnippet> id{rs("hotel", "1", "1", .9), rs("hotel", "1", "2", .05)};
  const auto a = respond(w, kb(), id, gen);
  EXPECT_EQ(a.response, "Yes, The Lensfield Hotel welcomes children to stay. Should I make the reservation now?");
  EXPECT_EQ(a.decision.branch, Branch::Generate);
  EXPECT_EQ(a.used_snippets.size(), 2u);

  ComposerConfig ood_cfg;
  auto ood_train = default_training_domains();
  ood_train.erase("hotel");
  // Same scenario with hotel treated as unseen.
  const std::vector<RankedSnippet> ood{rs("hotel", "1", "1", .9), rs("hotel", "1", "2", .05)};
  const auto dec = decide(ood, ood_train, ood_cfg.ratio);
  EXPECT_EQ(dec.branch, Branch::Reconstruct);
  const auto kb_ood = parse_knowledge_base(kb().to_json().dump(), ood_train);
  const auto b = respond(w, kb_ood, ood, gen, ood_cfg);
  EXPECT_EQ(b.response, "Children of any age are welcome at The Lensfield Hotel. Should I make the reservation now?");
  EXPECT_EQ(b.decision.reason, Reason::OODHighConfidence);
}

TEST(TemplateGenerate, DomainPrompts) {
  const std::vector<SnippetText> s{{"Breakfast?", "No, we don't offer breakfast.", "hotel"}};
  EXPECT_EQ(template_generate(s, default_domain_prompts()),
            "No, we don't offer breakfast. Would you like me to book it for you?");
  const std::vector<SnippetText> u{{"t", "Open daily.", "attraction"}};
  EXPECT_EQ(template_generate(u, default_domain_prompts()), "Open daily. Is there anything else I can help with?");
  EXPECT_THROW(template_generate({}, default_domain_prompts()), std::invalid_argument);
  const TemplateGenerator g;
  EXPECT_EQ(g.generate(GeneratorRequest{{}, s}), "No, we don't offer breakfast. Would you like me to book it for you?");
}

}  // namespace
}  // namespace kgd
