// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include "kgd/surface_matcher.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace kgd {
namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

char lower(unsigned char c) { return static_cast<char>(std::tolower(c)); }

bool matches_at(std::string_view text, std::size_t pos, std::string_view pattern) {
  if (pattern.empty() || pos + pattern.size() > text.size()) return false;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (lower(static_cast<unsigned char>(text[pos + i])) != lower(static_cast<unsigned char>(pattern[i]))) return false;
  }
  return true;
}

// Replacement text split into plain lowercase word tokens.
std::vector<std::string> plain_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur += lower(c);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& words, std::size_t first, std::size_t last) {
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> split_words(std::string_view normalized) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < normalized.size()) {
    auto j = normalized.find(' ', i);
    if (j == std::string_view::npos) j = normalized.size();
    if (j > i) out.emplace_back(normalized.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

bool starts_with_words(const std::vector<std::string>& words, const std::vector<std::string>& prefix) {
  return prefix.size() < words.size() && std::equal(prefix.begin(), prefix.end(), words.begin());
}

bool ends_with_words(const std::vector<std::string>& words, const std::vector<std::string>& suffix) {
  return suffix.size() < words.size() && std::equal(suffix.rbegin(), suffix.rend(), words.rbegin());
}

void push_unique(std::vector<std::string>& out, std::string s) {
  if (!s.empty() && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
}

struct Target {
  MentionTarget target;
  std::vector<std::string> forms;
};

bool ranks_before(const Mention& a, const Mention& b) {
  if (a.score() != b.score()) return a.score() > b.score();
  if (a.target.domain != b.target.domain) return a.target.domain < b.target.domain;
  if (a.target.entity_id && b.target.entity_id) return compare_ids(*a.target.entity_id, *b.target.entity_id) < 0;
  return !a.target.entity_id && b.target.entity_id;
}

// Within one target: higher score, then higher similarity, then later turn, then earlier span.
bool better_mention(const Mention& a, const Mention& b) {
  if (a.score() != b.score()) return a.score() > b.score();
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  if (a.turn_index != b.turn_index) return a.turn_index > b.turn_index;
  return a.span_begin < b.span_begin;
}

std::vector<Mention> scan(const ContextWindow& window, const std::vector<Target>& targets, const MatchConfig& cfg) {
  std::vector<Mention> out;
  if (window.empty() || targets.empty()) return out;

  std::vector<std::vector<Token>> turn_tokens;
  turn_tokens.reserve(window.size());
  for (const auto& turn : window.turns) turn_tokens.push_back(tokenize(turn.text, cfg.rewrites));

  for (const auto& target : targets) {
    std::optional<Mention> best;
    for (std::size_t ti = 0; ti < window.size(); ++ti) {
      const double recency = std::pow(cfg.recency_decay, static_cast<double>(window.size() - 1 - ti));
      const auto& tokens = turn_tokens[ti];
      for (const auto& form : target.forms) {
        for (const auto& span : find_fuzzy_spans(tokens, form, cfg.similarity_threshold)) {
          Mention m{target.target,
                    ti,
                    tokens[span.first_token].begin,
                    tokens[span.last_token - 1].end,
                    span.similarity,
                    recency,
                    form};
          if (!best || better_mention(m, *best)) best = std::move(m);
        }
      }
    }
    if (best) out.push_back(std::move(*best));
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

}  // namespace

std::vector<RewriteRule> default_rewrites() { return {{"&", "and"}}; }

void MatchConfig::validate() const {
  if (!(similarity_threshold >= 0.0 && similarity_threshold <= 1.0))
    throw std::invalid_argument("similarity_threshold must lie in [0, 1]");
  if (!(recency_decay > 0.0 && recency_decay < 1.0)) throw std::invalid_argument("recency_decay must lie in (0, 1)");
  for (const auto& r : rewrites) {
    if (r.from.empty()) throw std::invalid_argument("rewrite rule with an empty pattern");
  }
}

std::vector<Token> tokenize(std::string_view text, const std::vector<RewriteRule>& rules) {
  std::vector<Token> out;
  Token cur;
  bool in_word = false;
  auto flush = [&] {
    if (in_word) out.push_back(std::move(cur));
    cur = Token{};
    in_word = false;
  };

  std::size_t i = 0;
  while (i < text.size()) {
    const RewriteRule* hit = nullptr;
    for (const auto& rule : rules) {
      if (matches_at(text, i, rule.from) && (!hit || rule.from.size() > hit->from.size())) hit = &rule;
    }
    if (hit) {
      flush();
      for (auto& w : plain_words(hit->to)) out.push_back({std::move(w), i, i + hit->from.size()});
      i += hit->from.size();
      continue;
    }
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_word_byte(c)) {
      if (!in_word) {
        cur.begin = i;
        in_word = true;
      }
      cur.text += lower(c);
      cur.end = i + 1;
    } else {
      flush();
    }
    ++i;
  }
  flush();
  return out;
}

std::string normalize(std::string_view text, const std::vector<RewriteRule>& rules) {
  std::string out;
  for (const auto& tok : tokenize(text, rules)) {
    if (!out.empty()) out += ' ';
    out += tok.text;
  }
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double normalized_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(edit_distance(a, b)) / static_cast<double>(longest);
}

double similarity(std::string_view a, std::string_view b, const std::vector<RewriteRule>& rules) {
  return normalized_similarity(normalize(a, rules), normalize(b, rules));
}

bool meets_threshold(double similarity, double threshold) { return similarity + 1e-9 >= threshold; }

std::vector<std::string> alias_forms(const Entity& entity, const MatchConfig& cfg) {
  std::vector<std::vector<std::string>> prefixes;
  std::vector<std::vector<std::string>> suffixes;
  for (const auto& p : cfg.generic_prefixes) prefixes.push_back(split_words(normalize(p, cfg.rewrites)));
  for (const auto& s : cfg.generic_suffixes) suffixes.push_back(split_words(normalize(s, cfg.rewrites)));

  std::vector<std::string> forms;
  for (const auto& name : entity.names()) push_unique(forms, normalize(name, cfg.rewrites));

  const std::size_t explicit_forms = forms.size();
  for (std::size_t f = 0; f < explicit_forms; ++f) {
    const auto words = split_words(forms[f]);
    std::size_t lo = 0;
    std::size_t hi = words.size();
    for (const auto& p : prefixes) {
      if (!p.empty() && starts_with_words(words, p)) {
        lo = p.size();
        break;
      }
    }
    for (const auto& s : suffixes) {
      if (!s.empty() && ends_with_words(words, s)) {
        hi = words.size() - s.size();
        break;
      }
    }
    if (lo > 0) push_unique(forms, join(words, lo, words.size()));
    if (hi < words.size()) push_unique(forms, join(words, 0, hi));
    if (lo > 0 && hi < words.size() && lo < hi) push_unique(forms, join(words, lo, hi));
  }
  return forms;
}

std::vector<std::string> domain_forms(std::string_view domain, const MatchConfig& cfg) {
  std::vector<std::string> forms;
  push_unique(forms, normalize(domain, cfg.rewrites));
  for (const auto& [synonym, target] : cfg.domain_synonyms) {
    if (target == domain) push_unique(forms, normalize(synonym, cfg.rewrites));
  }
  return forms;
}

std::vector<SpanMatch> find_fuzzy_spans(const std::vector<Token>& tokens, std::string_view alias, double threshold) {
  std::vector<SpanMatch> out;
  if (alias.empty() || tokens.empty()) return out;
  const std::size_t alias_words = static_cast<std::size_t>(std::count(alias.begin(), alias.end(), ' ')) + 1;
  const std::size_t min_n = alias_words > 1 ? alias_words - 1 : 1;
  const std::size_t max_n = std::min(alias_words + 1, tokens.size());

  std::string span;
  for (std::size_t n = min_n; n <= max_n; ++n) {
    for (std::size_t s = 0; s + n <= tokens.size(); ++s) {
      span.clear();
      for (std::size_t k = s; k < s + n; ++k) {
        if (k > s) span += ' ';
        span += tokens[k].text;
      }
      // Length difference alone bounds the edit distance from below.
      const double longest = static_cast<double>(std::max(span.size(), alias.size()));
      const double gap = static_cast<double>(span.size() > alias.size() ? span.size() - alias.size()
                                                                        : alias.size() - span.size());
      if (!meets_threshold(1.0 - gap / longest, threshold)) continue;
      const double sim = normalized_similarity(span, alias);
      if (meets_threshold(sim, threshold)) out.push_back({s, s + n, sim});
    }
  }
  return out;
}

std::vector<Mention> match_entities(const ContextWindow& window, const KnowledgeBase& kb,
                                    const std::optional<std::string>& domain_filter, const MatchConfig& cfg) {
  if (domain_filter && !kb.has_domain(*domain_filter))
    throw std::invalid_argument("unknown domain filter '" + *domain_filter + "'");
  std::vector<Target> targets;
  for (const Entity* e : kb.entities(domain_filter ? std::string_view(*domain_filter) : std::string_view{})) {
    targets.push_back({{e->domain, e->entity_id}, alias_forms(*e, cfg)});
  }
  return scan(window, targets, cfg);
}

std::vector<Mention> match_domains(const ContextWindow& window, const KnowledgeBase& kb, const MatchConfig& cfg) {
  std::vector<Target> targets;
  for (const auto& d : kb.domain_wide_domains()) targets.push_back({{d, std::nullopt}, domain_forms(d, cfg)});
  return scan(window, targets, cfg);
}

}  // namespace kgd
