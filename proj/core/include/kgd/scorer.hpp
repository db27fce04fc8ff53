// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgd/kb_store.hpp"
#include "kgd/surface_matcher.hpp"

namespace kgd {

struct TextPair {
  std::string premise;
  std::string hypothesis;
};

/// Entailment-style scorer: one probability in [0, 1] per (premise,
/// hypothesis) pair, in input order. Implementations must be deterministic
/// and safe to call from several threads at once.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> score_pairs(std::span<const TextPair> pairs) const = 0;
  virtual std::string name() const = 0;
};

struct SnippetText {
  std::string title;
  std::string body;
  std::string domain;  // not sent over the wire
};

struct GeneratorRequest {
  std::vector<DialogTurn> history;
  std::vector<SnippetText> snippets;  // rank order
};

/// Response generator: non-empty text or an exception.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string generate(const GeneratorRequest& request) const = 0;
  virtual std::string name() const = 0;
};

/// Inverse document frequencies, ln(1 + N / df), over normalized tokens.
/// Tokens never seen in the corpus weigh as if they occurred once, so every
/// non-empty text carries positive weight.
class IdfTable {
 public:
  IdfTable() = default;
  static IdfTable build(std::span<const std::string> documents,
                        const std::vector<RewriteRule>& rules = default_rewrites());

  double weight(std::string_view token) const;
  std::size_t document_count() const noexcept { return documents_; }
  const std::vector<RewriteRule>& rules() const noexcept { return rules_; }

 private:
  std::unordered_map<std::string, double> idf_;
  std::size_t documents_ = 0;
  double unseen_ = 0.6931471805599453;  // ln 2, same as an empty corpus
  std::vector<RewriteRule> rules_ = default_rewrites();
};

/// IDF mass of the hypothesis tokens that also occur in the premise, divided
/// by the IDF mass of all hypothesis tokens (distinct tokens, normalized).
double lexical_score(std::string_view premise, std::string_view hypothesis, const IdfTable& idf);

class LexicalScorer final : public Scorer {
 public:
  explicit LexicalScorer(std::shared_ptr<const IdfTable> idf);
  std::vector<double> score_pairs(std::span<const TextPair> pairs) const override;
  std::string name() const override { return "lexical"; }

 private:
  std::shared_ptr<const IdfTable> idf_;
};

/// Wraps a pure function; handy for oracle scorers in evaluation harnesses.
class FunctionScorer final : public Scorer {
 public:
  using Fn = std::function<double(const TextPair&)>;
  FunctionScorer(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
  std::vector<double> score_pairs(std::span<const TextPair> pairs) const override;
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Fn fn_;
};

/// Numerically stable softmax. Throws std::invalid_argument on empty input.
std::vector<double> softmax_over(std::span<const double> scores);

/// Rejects score batches of the wrong length or with values outside [0, 1].
void check_scores(std::span<const double> scores, std::size_t expected, std::string_view backend);

}  // namespace kgd
