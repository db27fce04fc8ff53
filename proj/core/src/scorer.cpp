// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include "kgd/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "kgd/errors.hpp"

namespace kgd {
namespace {

std::set<std::string> token_set(std::string_view text, const std::vector<RewriteRule>& rules) {
  std::set<std::string> out;
  for (auto& tok : tokenize(text, rules)) out.insert(std::move(tok.text));
  return out;
}

}  // namespace

IdfTable IdfTable::build(std::span<const std::string> documents, const std::vector<RewriteRule>& rules) {
  IdfTable table;
  table.rules_ = rules;
  table.documents_ = documents.size();
  std::unordered_map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    for (const auto& tok : token_set(doc, rules)) ++df[tok];
  }
  const double n = static_cast<double>(std::max<std::size_t>(table.documents_, 1));
  for (const auto& [tok, count] : df) table.idf_[tok] = std::log(1.0 + n / static_cast<double>(count));
  table.unseen_ = std::log(1.0 + n);
  return table;
}

double IdfTable::weight(std::string_view token) const {
  auto it = idf_.find(std::string(token));
  return it == idf_.end() ? unseen_ : it->second;
}

double lexical_score(std::string_view premise, std::string_view hypothesis, const IdfTable& idf) {
  const auto hyp = token_set(hypothesis, idf.rules());
  if (hyp.empty()) return 0.0;
  const auto prem = token_set(premise, idf.rules());
  double shared = 0.0;
  double total = 0.0;
  for (const auto& tok : hyp) {
    const double w = idf.weight(tok);
    total += w;
    if (prem.count(tok)) shared += w;
  }
  if (total <= 0.0) return 0.0;
  return std::clamp(shared / total, 0.0, 1.0);
}

LexicalScorer::LexicalScorer(std::shared_ptr<const IdfTable> idf) : idf_(std::move(idf)) {
  if (!idf_) throw std::invalid_argument("LexicalScorer needs an IDF table");
}

std::vector<double> LexicalScorer::score_pairs(std::span<const TextPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(lexical_score(p.premise, p.hypothesis, *idf_));
  return out;
}

std::vector<double> FunctionScorer::score_pairs(std::span<const TextPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(fn_(p));
  check_scores(out, pairs.size(), name_);
  return out;
}

std::vector<double> softmax_over(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("softmax over an empty score list");
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - top);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

void check_scores(std::span<const double> scores, std::size_t expected, std::string_view backend) {
  if (scores.size() != expected)
    throw BackendError(std::string(backend) + ": returned " + std::to_string(scores.size()) + " scores for " +
                           std::to_string(expected) + " pairs",
                       false);
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0))
      throw BackendError(std::string(backend) + ": score " + std::to_string(s) + " outside [0, 1]", false);
  }
}

}  // namespace kgd
