// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgd/kb_store.hpp"

namespace kgd {

/// Lowercased words; every punctuation character is a token of its own.
std::vector<std::string> metric_tokens(std::string_view text);

struct DetectionMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // no positive predictions
  bool recall_undefined = false;     // no positive golds
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Positive class = knowledge-seeking. Throws std::invalid_argument on empty
/// or mismatched inputs.
DetectionMetrics detection_metrics(const std::vector<bool>& predictions, const std::vector<bool>& golds);

struct SelectionMetrics {
  double mrr_at_5 = 0.0;
  double recall_at_1 = 0.0;
  double recall_at_5 = 0.0;
  std::size_t turns = 0;
  bool empty = false;  // no turns to score
};

/// 1-based position of the first gold key in `ranked`, 0 when absent.
std::size_t gold_rank(std::span<const SnippetKey> ranked, std::span<const SnippetKey> golds);

/// One ranked list per turn; an empty list (e.g. a detection miss) scores 0.
/// `k` is the cutoff for MRR and the second recall value.
SelectionMetrics selection_metrics(const std::vector<std::vector<SnippetKey>>& ranked,
                                   const std::vector<std::vector<SnippetKey>>& golds, std::size_t k = 5);

inline constexpr double kBleuEpsilon = 1e-9;

/// Sentence BLEU with uniform weights up to max_n, clipped counts, and the
/// brevity penalty against the closest reference length (shorter on ties).
/// Zero precisions are replaced by kBleuEpsilon.
double bleu(std::string_view candidate, const std::vector<std::string>& references, int max_n);

enum class RougeVariant { One, Two, L };

/// F1 of n-gram overlap, or of the longest common subsequence for L.
double rouge(std::string_view candidate, std::string_view reference, RougeVariant variant);

/// Exact-match METEOR without stemming or synonyms.
double meteor_simplified(std::string_view candidate, std::string_view reference);

struct GenerationMetrics {
  std::array<double, 4> bleu{};  // bleu[n - 1] = BLEU-n
  double meteor = 0.0;
  double rouge_1 = 0.0;
  double rouge_2 = 0.0;
  double rouge_l = 0.0;
  std::size_t count = 0;
};

/// Means of the per-pair sentence scores. Throws on mismatched lengths.
GenerationMetrics generation_metrics(const std::vector<std::string>& candidates,
                                     const std::vector<std::string>& references);

enum class CaseLabel { Case1, Case2, Case3 };

std::string_view to_string(CaseLabel label);

/// Case1: gold at rank 1, Case2: within ranks 2..n, Case3: elsewhere.
CaseLabel categorize_case(std::span<const SnippetKey> ranked, std::span<const SnippetKey> golds, std::size_t n = 4);

}  // namespace kgd
