// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include "kgd/eval_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace kgd {
namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Ngram, std::size_t> out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++out[Ngram(tokens.begin() + i, tokens.begin() + i + n)];
  return out;
}

std::vector<std::string> non_empty_tokens(std::string_view text, const char* what) {
  auto t = metric_tokens(text);
  if (t.empty()) throw std::invalid_argument(std::string(what) + " has no tokens");
  return t;
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::vector<std::string> metric_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur += static_cast<char>(std::tolower(c));
    }
  }
  flush();
  return out;
}

DetectionMetrics detection_metrics(const std::vector<bool>& predictions, const std::vector<bool>& golds) {
  if (predictions.size() != golds.size()) throw std::invalid_argument("detection predictions and golds differ in length");
  if (predictions.empty()) throw std::invalid_argument("detection metrics over an empty set");
  DetectionMetrics m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] && golds[i]) ++m.tp;
    else if (predictions[i]) ++m.fp;
    else if (golds[i]) ++m.fn;
    else ++m.tn;
  }
  const double total = static_cast<double>(predictions.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / total;
  m.precision_undefined = m.tp + m.fp == 0;
  m.recall_undefined = m.tp + m.fn == 0;
  m.precision = m.precision_undefined ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  m.recall = m.recall_undefined ? 0.0 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  m.f1 = f1(m.precision, m.recall);
  return m;
}

std::size_t gold_rank(std::span<const SnippetKey> ranked, std::span<const SnippetKey> golds) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (std::find(golds.begin(), golds.end(), ranked[i]) != golds.end()) return i + 1;
  }
  return 0;
}

SelectionMetrics selection_metrics(const std::vector<std::vector<SnippetKey>>& ranked,
                                   const std::vector<std::vector<SnippetKey>>& golds, std::size_t k) {
  if (ranked.size() != golds.size()) throw std::invalid_argument("ranked lists and golds differ in length");
  if (k == 0) throw std::invalid_argument("selection cutoff must be at least 1");
  SelectionMetrics m;
  m.turns = ranked.size();
  if (ranked.empty()) {
    m.empty = true;
    return m;
  }
  double rr = 0.0, r1 = 0.0, rk = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto r = gold_rank(ranked[i], golds[i]);
    if (r == 0 || r > k) continue;
    rr += 1.0 / static_cast<double>(r);
    rk += 1.0;
    if (r == 1) r1 += 1.0;
  }
  const double n = static_cast<double>(ranked.size());
  m.mrr_at_5 = rr / n;
  m.recall_at_1 = r1 / n;
  m.recall_at_5 = rk / n;
  return m;
}

double bleu(std::string_view candidate, const std::vector<std::string>& references, int max_n) {
  if (max_n < 1 || max_n > 4) throw std::invalid_argument("BLEU order must lie in 1..4");
  if (references.empty()) throw std::invalid_argument("BLEU needs at least one reference");
  const auto cand = non_empty_tokens(candidate, "BLEU candidate");
  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(metric_tokens(r));

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto counts = ngram_counts(cand, static_cast<std::size_t>(n));
    std::map<Ngram, std::size_t> max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, c] : ngram_counts(r, static_cast<std::size_t>(n))) max_ref[g] = std::max(max_ref[g], c);
    }
    std::size_t clipped = 0, total = 0;
    for (const auto& [g, c] : counts) {
      total += c;
      if (auto it = max_ref.find(g); it != max_ref.end()) clipped += std::min(c, it->second);
    }
    double p = total ? static_cast<double>(clipped) / static_cast<double>(total) : 0.0;
    if (p == 0.0) p = kBleuEpsilon;
    log_sum += std::log(p);
  }

  const auto c = cand.size();
  std::size_t r = refs.front().size();
  for (const auto& ref : refs) {
    const auto d = std::abs(static_cast<long>(ref.size()) - static_cast<long>(c));
    const auto best = std::abs(static_cast<long>(r) - static_cast<long>(c));
    if (d < best || (d == best && ref.size() < r)) r = ref.size();
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * std::exp(log_sum / max_n);
}

double rouge(std::string_view candidate, std::string_view reference, RougeVariant variant) {
  const auto cand = non_empty_tokens(candidate, "ROUGE candidate");
  const auto ref = non_empty_tokens(reference, "ROUGE reference");
  if (variant == RougeVariant::L) {
    const double l = static_cast<double>(lcs_length(cand, ref));
    return f1(l / static_cast<double>(cand.size()), l / static_cast<double>(ref.size()));
  }
  const std::size_t n = variant == RougeVariant::One ? 1 : 2;
  const auto cc = ngram_counts(cand, n);
  const auto rc = ngram_counts(ref, n);
  std::size_t overlap = 0, ctotal = 0, rtotal = 0;
  for (const auto& [g, c] : cc) {
    ctotal += c;
    if (auto it = rc.find(g); it != rc.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [g, c] : rc) rtotal += c;
  if (overlap == 0) return 0.0;
  return f1(static_cast<double>(overlap) / static_cast<double>(ctotal),
            static_cast<double>(overlap) / static_cast<double>(rtotal));
}

double meteor_simplified(std::string_view candidate, std::string_view reference) {
  const auto cand = non_empty_tokens(candidate, "METEOR candidate");
  const auto ref = non_empty_tokens(reference, "METEOR reference");
  std::vector<bool> used(ref.size(), false);
  std::vector<long> align(cand.size(), -1);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!used[j] && ref[j] == cand[i]) {
        used[j] = true;
        align[i] = static_cast<long>(j);
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;

  std::size_t chunks = 0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (align[i] < 0) continue;
    const bool continues = i > 0 && align[i - 1] >= 0 && align[i - 1] + 1 == align[i];
    if (!continues) ++chunks;
  }
  const double m = static_cast<double>(matches);
  const double p = m / static_cast<double>(cand.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
  return fmean * (1.0 - penalty);
}

GenerationMetrics generation_metrics(const std::vector<std::string>& candidates,
                                     const std::vector<std::string>& references) {
  if (candidates.size() != references.size()) throw std::invalid_argument("candidates and references differ in length");
  GenerationMetrics g;
  g.count = candidates.size();
  if (candidates.empty()) return g;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::vector<std::string> refs{references[i]};
    for (int n = 1; n <= 4; ++n) g.bleu[static_cast<std::size_t>(n - 1)] += bleu(candidates[i], refs, n);
    g.meteor += meteor_simplified(candidates[i], references[i]);
    g.rouge_1 += rouge(candidates[i], references[i], RougeVariant::One);
    g.rouge_2 += rouge(candidates[i], references[i], RougeVariant::Two);
    g.rouge_l += rouge(candidates[i], references[i], RougeVariant::L);
  }
  const double n = static_cast<double>(candidates.size());
  for (auto& b : g.bleu) b /= n;
  g.meteor /= n;
  g.rouge_1 /= n;
  g.rouge_2 /= n;
  g.rouge_l /= n;
  return g;
}

std::string_view to_string(CaseLabel label) {
  switch (label) {
    case CaseLabel::Case1: return "case1";
    case CaseLabel::Case2: return "case2";
    case CaseLabel::Case3: return "case3";
  }
  return "unknown";
}

CaseLabel categorize_case(std::span<const SnippetKey> ranked, std::span<const SnippetKey> golds, std::size_t n) {
  const auto r = gold_rank(ranked, golds);
  if (r == 1) return CaseLabel::Case1;
  if (r >= 2 && r <= n) return CaseLabel::Case2;
  return CaseLabel::Case3;
}

}  // namespace kgd
