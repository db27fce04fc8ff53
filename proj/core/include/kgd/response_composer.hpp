// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgd/dialog_model.hpp"
#include "kgd/kb_store.hpp"
#include "kgd/knowledge_selector.hpp"
#include "kgd/scorer.hpp"

namespace kgd {

struct TokenBudget {
  std::size_t history_tokens = 128;
  std::size_t snippet_tokens = 256;
};

std::size_t count_words(std::string_view text);

/// Top-min(n, |ranked|) snippets in rank order plus the window history, both
/// cut to whitespace-token budgets: oldest turns and lowest-ranked snippets go
/// first. A lone current turn or top snippet that is still too long is
/// truncated (the turn keeps its last words, the snippet body its first).
GeneratorRequest assemble_generator_input(const ContextWindow& window, const KnowledgeBase& kb,
                                          std::span<const RankedSnippet> ranked, std::size_t n,
                                          const TokenBudget& budget = {});

struct SegmentedResponse {
  std::string body;
  std::optional<std::string> prompt;
};

std::vector<std::string> default_prompt_cues();

/// Sentences end at '.', '!' or '?' followed by whitespace or the end of text.
std::vector<std::string> split_sentences(std::string_view text);

/// The prompt is the longest trailing run of sentences that end in '?' or
/// start with a cue; when every sentence qualifies the first one stays as body.
SegmentedResponse segment_response(std::string_view text, const std::vector<std::string>& cues = default_prompt_cues());

/// Snippet body followed by the generated response's prompt, if any.
std::string reconstruct(std::string_view generated, const KnowledgeSnippet& top_snippet,
                        const std::vector<std::string>& cues = default_prompt_cues());

enum class Branch { Generate, Reconstruct };
enum class Reason { InDomain, OODHighConfidence, OODFallback };

std::string_view to_string(Branch branch);
std::string_view to_string(Reason reason);

struct ComposeDecision {
  Branch branch = Branch::Generate;
  Reason reason = Reason::InDomain;

  friend bool operator==(const ComposeDecision&, const ComposeDecision&) = default;
};

/// In-domain top snippet: generate. Out-of-domain: reconstruct when the list
/// is a singleton or the top confidence is at least `ratio` times the
/// second, otherwise generate. Throws std::invalid_argument for an empty list
/// or ratio <= 1.
ComposeDecision decide(std::span<const RankedSnippet> ranked, const std::set<std::string>& training_domains,
                       double ratio = 5.0);

struct ComposerConfig {
  std::size_t n_snippets = 4;
  double ratio = 5.0;
  TokenBudget budget;
  std::vector<std::string> prompt_cues = default_prompt_cues();
};

struct ComposeResult {
  std::string response;
  ComposeDecision decision;
  std::vector<SnippetKey> used_snippets;
};

ComposeResult respond(const ContextWindow& window, const KnowledgeBase& kb, std::span<const RankedSnippet> ranked,
                      const Generator& generator, const ComposerConfig& cfg = {});

std::map<std::string, std::string, std::less<>> default_domain_prompts();
inline constexpr std::string_view kGenericPrompt = "Is there anything else I can help with?";

/// Rank-1 snippet body followed by a prompt looked up by its domain.
std::string template_generate(std::span<const SnippetText> snippets,
                              const std::map<std::string, std::string, std::less<>>& domain_prompts,
                              std::string_view generic_prompt = kGenericPrompt);

/// Deterministic built-in generator around template_generate.
class TemplateGenerator final : public Generator {
 public:
  TemplateGenerator();
  TemplateGenerator(std::map<std::string, std::string, std::less<>> domain_prompts, std::string generic_prompt);

  std::string generate(const GeneratorRequest& request) const override;
  std::string name() const override { return "template"; }

 private:
  std::map<std::string, std::string, std::less<>> prompts_;
  std::string generic_;
};

}  // namespace kgd
