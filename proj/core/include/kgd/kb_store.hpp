// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace kgd {

/// Reserved entity id marking domain-wide snippets in the knowledge file.
inline constexpr std::string_view kDomainWideEntity = "*";

/// Compares identifiers so that all-digit ids sort numerically ("2" < "10")
/// and everything else sorts lexicographically.
std::strong_ordering compare_ids(std::string_view a, std::string_view b);

/// Identifies a snippet inside a knowledge base. A missing entity id means the
/// snippet is attached to the domain as a whole.
struct SnippetKey {
  std::string domain;
  std::optional<std::string> entity_id;
  std::string doc_id;

  friend bool operator==(const SnippetKey&, const SnippetKey&) = default;
  friend std::strong_ordering operator<=>(const SnippetKey& a, const SnippetKey& b);
};

struct SnippetKeyHash {
  std::size_t operator()(const SnippetKey& key) const noexcept;
};

/// "domain/entity/doc", with "*" standing in for a missing entity.
std::string to_string(const SnippetKey& key);

struct KnowledgeSnippet {
  SnippetKey key;
  std::string title;  // the FAQ question
  std::string body;   // the FAQ answer
};

struct Entity {
  std::string domain;
  std::string entity_id;
  std::string canonical_name;
  std::vector<std::string> aliases;

  /// Canonical name followed by the explicit aliases, without duplicates.
  std::vector<std::string> names() const;
};

/// Immutable FAQ knowledge base. Every domain is either domain-wide (only
/// entity-less snippets) or entity-specific (only entity-bearing snippets).
class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  /// Builds from the documented knowledge layout
  /// `{domain: {entity_id: {name, aliases?, docs: {doc_id: {title, body}}}}}`.
  /// Throws DataError on any invariant violation.
  static KnowledgeBase from_json(const nlohmann::json& doc, std::set<std::string> training_domains);

  const std::set<std::string>& domains() const noexcept { return domains_; }
  const std::set<std::string>& domain_wide_domains() const noexcept { return domain_wide_; }
  const std::set<std::string>& entity_specific_domains() const noexcept { return entity_specific_; }
  const std::set<std::string>& training_domains() const noexcept { return training_domains_; }

  bool has_domain(std::string_view domain) const;
  bool is_domain_wide(std::string_view domain) const;
  bool is_entity_specific(std::string_view domain) const;
  bool is_in_domain(std::string_view domain) const;  // seen during training

  std::size_t snippet_count() const noexcept { return snippets_.size(); }

  /// All snippets in (domain, entity_id, doc_id) order.
  const std::vector<KnowledgeSnippet>& snippets() const noexcept { return snippets_; }

  const KnowledgeSnippet* find(const SnippetKey& key) const;
  const KnowledgeSnippet& at(const SnippetKey& key) const;

  const Entity* find_entity(std::string_view domain, std::string_view entity_id) const;
  const Entity& entity(std::string_view domain, std::string_view entity_id) const;

  /// Entities of one domain (or every entity when `domain` is empty), ordered by id.
  std::vector<const Entity*> entities(std::string_view domain = {}) const;

  /// Snippets under `domain` (and `entity_id` for entity-specific domains),
  /// ordered by doc_id. Throws std::out_of_range for unknown domains/entities
  /// and std::invalid_argument when the entity argument does not fit the domain kind.
  std::vector<const KnowledgeSnippet*> snippets_for(std::string_view domain,
                                                    const std::optional<std::string>& entity_id) const;

  /// Serializes back to the knowledge file layout.
  nlohmann::json to_json() const;

 private:
  struct EntityLess {
    using is_transparent = void;
    bool operator()(const std::pair<std::string, std::string>& a,
                    const std::pair<std::string, std::string>& b) const;
  };
  using GroupKey = std::pair<std::string, std::optional<std::string>>;

  std::set<std::string> domains_;
  std::set<std::string> domain_wide_;
  std::set<std::string> entity_specific_;
  std::set<std::string> training_domains_;
  std::vector<KnowledgeSnippet> snippets_;
  std::unordered_map<SnippetKey, std::size_t, SnippetKeyHash> index_;
  std::map<std::pair<std::string, std::string>, Entity, EntityLess> entities_;
  std::map<GroupKey, std::vector<std::size_t>> groups_;
};

/// {hotel, restaurant, train, taxi}: the domains of the original training split.
std::set<std::string> default_training_domains();

KnowledgeBase parse_knowledge_base(std::string_view text, std::set<std::string> training_domains);
KnowledgeBase load_knowledge_base(const std::filesystem::path& path,
                                  std::set<std::string> training_domains = default_training_domains());

struct DatabaseRecord {
  std::string domain;  // empty when the file does not say
  std::string entity_name;
  std::vector<std::pair<std::string, std::string>> attributes;  // file order, includes "name"
};

/// Accepts either a list of attribute maps (an optional "domain" key is lifted
/// out of the attributes) or an object mapping domain -> list of attribute maps.
std::vector<DatabaseRecord> parse_database(std::string_view text);
std::vector<DatabaseRecord> load_database(const std::filesystem::path& path);

enum class Speaker { User, Assistant };

std::string_view speaker_name(Speaker speaker);

struct DialogTurn {
  Speaker speaker = Speaker::User;
  std::string text;

  friend bool operator==(const DialogTurn&, const DialogTurn&) = default;
};

using Dialog = std::vector<DialogTurn>;

/// Label for the final turn of a logged dialog.
struct TurnLabel {
  bool target = false;
  std::vector<SnippetKey> gold_snippets;
  std::optional<std::string> gold_response;
};

struct DialogDataset {
  std::vector<Dialog> dialogs;
  std::optional<std::vector<TurnLabel>> labels;
};

/// Gold snippet references are resolved against `kb`.
DialogDataset parse_dialogs(std::string_view logs_text, const std::optional<std::string>& labels_text,
                            const KnowledgeBase& kb);
DialogDataset load_dialogs(const std::filesystem::path& logs_path,
                           const std::optional<std::filesystem::path>& labels_path, const KnowledgeBase& kb);

}  // namespace kgd
