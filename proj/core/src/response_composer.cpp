// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include "kgd/response_composer.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace kgd {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) out.push_back(std::move(w));
  return out;
}

std::string join(std::span<const std::string> parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ' ';
    out += p;
  }
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool prompt_like(std::string_view sentence, const std::vector<std::string>& cues) {
  if (!sentence.empty() && sentence.back() == '?') return true;
  const auto low = lower(sentence);
  for (const auto& cue : cues) {
    const auto c = lower(cue);
    if (c.empty() || low.compare(0, c.size(), c) != 0) continue;
    if (low.size() == c.size() || !std::isalnum(static_cast<unsigned char>(low[c.size()]))) return true;
  }
  return false;
}

std::string with_terminal(std::string_view body) {
  std::string out(body);
  if (!out.empty() && !is_terminal(out.back())) out += '.';
  return out;
}

}  // namespace

std::size_t count_words(std::string_view text) { return words(text).size(); }

GeneratorRequest assemble_generator_input(const ContextWindow& window, const KnowledgeBase& kb,
                                          std::span<const RankedSnippet> ranked, std::size_t n,
                                          const TokenBudget& budget) {
  if (ranked.empty()) throw std::invalid_argument("generator input needs at least one ranked snippet");
  if (n == 0) throw std::invalid_argument("generator input needs n >= 1");

  GeneratorRequest req;

  // History: walk back from the current turn while the budget holds.
  std::size_t used = 0;
  std::size_t first = window.turns.size();
  while (first > 0) {
    const auto len = count_words(window.turns[first - 1].text);
    if (used + len > budget.history_tokens) break;
    used += len;
    --first;
  }
  if (first == window.turns.size() && !window.turns.empty()) {
    auto turn = window.turns.back();
    auto w = words(turn.text);
    const auto keep = std::min(w.size(), budget.history_tokens);
    turn.text = join(std::span<const std::string>(w).last(keep));
    req.history.push_back(std::move(turn));
  } else {
    req.history.assign(window.turns.begin() + static_cast<std::ptrdiff_t>(first), window.turns.end());
  }

  used = 0;
  const auto take = std::min(n, ranked.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto& s = kb.at(ranked[i].snippet);
    const auto len = count_words(s.title) + count_words(s.body);
    if (used + len > budget.snippet_tokens) {
      if (i == 0) {
        const auto title_len = count_words(s.title);
        auto body = words(s.body);
        const auto room = budget.snippet_tokens > title_len ? budget.snippet_tokens - title_len : 0;
        body.resize(std::min(body.size(), room));
        req.snippets.push_back({s.title, join(body), s.key.domain});
      }
      break;
    }
    used += len;
    req.snippets.push_back({s.title, s.body, s.key.domain});
  }
  return req;
}

std::vector<std::string> default_prompt_cues() {
  return {"do you want", "should i", "would you like", "is there anything else", "can i"};
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (!is_terminal(text[i])) continue;
    std::size_t j = i;
    while (j + 1 < text.size() && is_terminal(text[j + 1])) ++j;
    if (j + 1 == text.size() || is_space(text[j + 1])) {
      auto s = trim(text.substr(start, j + 1 - start));
      if (!s.empty()) out.push_back(std::move(s));
      start = j + 1;
    }
    i = j;
  }
  auto rest = trim(text.substr(std::min(start, text.size())));
  if (!rest.empty()) out.push_back(std::move(rest));
  return out;
}

SegmentedResponse segment_response(std::string_view text, const std::vector<std::string>& cues) {
  const auto sentences = split_sentences(text);
  if (sentences.empty()) return {trim(text), std::nullopt};

  std::size_t split = sentences.size();
  while (split > 0 && prompt_like(sentences[split - 1], cues)) --split;
  if (split == 0) split = 1;

  std::span<const std::string> all(sentences);
  SegmentedResponse out{join(all.first(split)), std::nullopt};
  if (split < sentences.size()) out.prompt = join(all.subspan(split));
  return out;
}

std::string reconstruct(std::string_view generated, const KnowledgeSnippet& top_snippet,
                        const std::vector<std::string>& cues) {
  const auto seg = segment_response(generated, cues);
  if (!seg.prompt) return top_snippet.body;
  return with_terminal(top_snippet.body) + " " + *seg.prompt;
}

std::string_view to_string(Branch branch) { return branch == Branch::Generate ? "generate" : "reconstruct"; }

std::string_view to_string(Reason reason) {
  switch (reason) {
    case Reason::InDomain: return "in_domain";
    case Reason::OODHighConfidence: return "ood_high_confidence";
    case Reason::OODFallback: return "ood_fallback";
  }
  return "unknown";
}

ComposeDecision decide(std::span<const RankedSnippet> ranked, const std::set<std::string>& training_domains,
                       double ratio) {
  if (ranked.empty()) throw std::invalid_argument("decide needs at least one ranked snippet");
  if (!(ratio > 1.0)) throw std::invalid_argument("ensemble ratio must exceed 1");
  if (training_domains.count(ranked.front().snippet.domain)) return {Branch::Generate, Reason::InDomain};
  if (ranked.size() == 1 || ranked[0].confidence >= ratio * ranked[1].confidence)
    return {Branch::Reconstruct, Reason::OODHighConfidence};
  return {Branch::Generate, Reason::OODFallback};
}

ComposeResult respond(const ContextWindow& window, const KnowledgeBase& kb, std::span<const RankedSnippet> ranked,
                      const Generator& generator, const ComposerConfig& cfg) {
  ComposeResult out;
  out.decision = decide(ranked, kb.training_domains(), cfg.ratio);
  const auto req = assemble_generator_input(window, kb, ranked, cfg.n_snippets, cfg.budget);
  for (std::size_t i = 0; i < req.snippets.size(); ++i) out.used_snippets.push_back(ranked[i].snippet);
  auto generated = generator.generate(req);
  if (out.decision.branch == Branch::Reconstruct) {
    out.response = reconstruct(generated, kb.at(ranked.front().snippet), cfg.prompt_cues);
  } else {
    out.response = std::move(generated);
  }
  return out;
}

std::map<std::string, std::string, std::less<>> default_domain_prompts() {
  return {{"hotel", "Would you like me to book it for you?"},
          {"restaurant", "Would you like me to reserve a table?"},
          {"train", "Would you like me to book tickets?"},
          {"taxi", "Would you like me to book the taxi?"}};
}

std::string template_generate(std::span<const SnippetText> snippets,
                              const std::map<std::string, std::string, std::less<>>& domain_prompts,
                              std::string_view generic_prompt) {
  if (snippets.empty()) throw std::invalid_argument("template generation needs at least one snippet");
  const auto& top = snippets.front();
  const auto it = domain_prompts.find(top.domain);
  const std::string_view prompt = it != domain_prompts.end() ? std::string_view(it->second) : generic_prompt;
  return with_terminal(trim(top.body)) + " " + std::string(prompt);
}

TemplateGenerator::TemplateGenerator() : TemplateGenerator(default_domain_prompts(), std::string(kGenericPrompt)) {}

TemplateGenerator::TemplateGenerator(std::map<std::string, std::string, std::less<>> domain_prompts,
                                     std::string generic_prompt)
    : prompts_(std::move(domain_prompts)), generic_(std::move(generic_prompt)) {}

std::string TemplateGenerator::generate(const GeneratorRequest& request) const {
  return template_generate(request.snippets, prompts_, generic_);
}

}  // namespace kgd
