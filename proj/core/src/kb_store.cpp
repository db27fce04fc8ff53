// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include "kgd/kb_store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "kgd/errors.hpp"

namespace kgd {
namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::string_view strip_leading_zeros(std::string_view s) {
  while (s.size() > 1 && s.front() == '0') s.remove_prefix(1);
  return s;
}

std::string read_file(const std::filesystem::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string(what) + ": cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

template <typename Json>
Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string(what) + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

// Ids in labels may be written as strings or integers.
std::optional<std::string> id_field(const nlohmann::json& obj, const char* field, bool optional_field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    if (optional_field) return std::nullopt;
    throw DataError(std::string("labels: missing field '") + field + "'");
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw DataError(std::string("labels: field '") + field + "' must be a string or integer");
}

std::string scalar_to_string(const nlohmann::ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

}  // namespace

std::strong_ordering compare_ids(std::string_view a, std::string_view b) {
  if (all_digits(a) && all_digits(b)) {
    auto sa = strip_leading_zeros(a);
    auto sb = strip_leading_zeros(b);
    if (sa.size() != sb.size()) return sa.size() <=> sb.size();
    if (auto c = sa.compare(sb); c != 0) return c <=> 0;
    return a.compare(b) <=> 0;  // "01" vs "1": fall back to raw text
  }
  return a.compare(b) <=> 0;
}

std::strong_ordering operator<=>(const SnippetKey& a, const SnippetKey& b) {
  if (auto c = a.domain <=> b.domain; c != 0) return c;
  if (a.entity_id.has_value() != b.entity_id.has_value()) return a.entity_id.has_value() ? std::strong_ordering::greater
                                                                                        : std::strong_ordering::less;
  if (a.entity_id) {
    if (auto c = compare_ids(*a.entity_id, *b.entity_id); c != 0) return c;
  }
  return compare_ids(a.doc_id, b.doc_id);
}

std::size_t SnippetKeyHash::operator()(const SnippetKey& key) const noexcept {
  std::hash<std::string> h;
  std::size_t seed = h(key.domain);
  auto mix = [&seed](std::size_t v) { seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2); };
  mix(key.entity_id ? h(*key.entity_id) : 0x51ed27u);
  mix(h(key.doc_id));
  return seed;
}

std::string to_string(const SnippetKey& key) {
  return key.domain + "/" + (key.entity_id ? *key.entity_id : std::string(kDomainWideEntity)) + "/" + key.doc_id;
}

std::vector<std::string> Entity::names() const {
  std::vector<std::string> out{canonical_name};
  for (const auto& alias : aliases) {
    if (!alias.empty() && std::find(out.begin(), out.end(), alias) == out.end()) out.push_back(alias);
  }
  return out;
}

bool KnowledgeBase::EntityLess::operator()(const std::pair<std::string, std::string>& a,
                                           const std::pair<std::string, std::string>& b) const {
  if (auto c = a.first <=> b.first; c != 0) return c < 0;
  return compare_ids(a.second, b.second) < 0;
}

std::set<std::string> default_training_domains() { return {"hotel", "restaurant", "train", "taxi"}; }

KnowledgeBase KnowledgeBase::from_json(const nlohmann::json& doc, std::set<std::string> training_domains) {
  if (!doc.is_object()) throw DataError("knowledge: top level must be an object of domains");

  KnowledgeBase kb;
  kb.training_domains_ = std::move(training_domains);

  for (const auto& [domain, entities] : doc.items()) {
    if (domain.empty()) throw DataError("knowledge: empty domain name");
    if (!entities.is_object() || entities.empty())
      throw DataError("knowledge: domain '" + domain + "' must map entity ids to entities");

    bool has_wide = false;
    bool has_specific = false;
    for (const auto& [entity_id, entity] : entities.items()) {
      const bool wide = entity_id == kDomainWideEntity;
      (wide ? has_wide : has_specific) = true;
      if (has_wide && has_specific)
        throw DataError("knowledge: domain '" + domain + "' mixes domain-wide and entity-specific snippets");
      if (!entity.is_object()) throw DataError("knowledge: entity '" + domain + "/" + entity_id + "' must be an object");

      std::optional<std::string> eid;
      if (!wide) {
        if (entity_id.empty()) throw DataError("knowledge: empty entity id in domain '" + domain + "'");
        Entity e;
        e.domain = domain;
        e.entity_id = entity_id;
        auto name = entity.find("name");
        if (name == entity.end() || !name->is_string() || name->get<std::string>().empty())
          throw DataError("knowledge: entity '" + domain + "/" + entity_id + "' needs a non-empty name");
        e.canonical_name = name->get<std::string>();
        if (auto aliases = entity.find("aliases"); aliases != entity.end() && !aliases->is_null()) {
          if (!aliases->is_array()) throw DataError("knowledge: aliases of '" + e.canonical_name + "' must be a list");
          for (const auto& a : *aliases) {
            if (!a.is_string()) throw DataError("knowledge: aliases of '" + e.canonical_name + "' must be strings");
            e.aliases.push_back(a.get<std::string>());
          }
        }
        kb.entities_.emplace(std::make_pair(domain, entity_id), std::move(e));
        eid = entity_id;
      }

      auto docs = entity.find("docs");
      if (docs == entity.end() || !docs->is_object())
        throw DataError("knowledge: entity '" + domain + "/" + entity_id + "' needs a 'docs' object");
      for (const auto& [doc_id, snippet] : docs->items()) {
        const std::string where = "knowledge: snippet '" + domain + "/" + entity_id + "/" + doc_id + "'";
        if (!snippet.is_object()) throw DataError(where + " must be an object");
        auto title = snippet.find("title");
        auto body = snippet.find("body");
        if (title == snippet.end() || !title->is_string() || title->get<std::string>().empty())
          throw DataError(where + " (doc_id " + doc_id + ") has an empty or missing title");
        if (body == snippet.end() || !body->is_string() || body->get<std::string>().empty())
          throw DataError(where + " (doc_id " + doc_id + ") has an empty or missing body");
        kb.snippets_.push_back({SnippetKey{domain, eid, doc_id}, title->get<std::string>(), body->get<std::string>()});
      }
    }
    kb.domains_.insert(domain);
    (has_wide ? kb.domain_wide_ : kb.entity_specific_).insert(domain);
  }

  std::sort(kb.snippets_.begin(), kb.snippets_.end(),
            [](const KnowledgeSnippet& a, const KnowledgeSnippet& b) { return a.key < b.key; });
  for (std::size_t i = 0; i < kb.snippets_.size(); ++i) {
    const auto& key = kb.snippets_[i].key;
    if (!kb.index_.emplace(key, i).second) throw DataError("knowledge: duplicate snippet " + to_string(key));
    kb.groups_[{key.domain, key.entity_id}].push_back(i);
  }
  return kb;
}

bool KnowledgeBase::has_domain(std::string_view domain) const { return domains_.count(std::string(domain)) > 0; }

bool KnowledgeBase::is_domain_wide(std::string_view domain) const {
  return domain_wide_.count(std::string(domain)) > 0;
}

bool KnowledgeBase::is_entity_specific(std::string_view domain) const {
  return entity_specific_.count(std::string(domain)) > 0;
}

bool KnowledgeBase::is_in_domain(std::string_view domain) const {
  return training_domains_.count(std::string(domain)) > 0;
}

const KnowledgeSnippet* KnowledgeBase::find(const SnippetKey& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &snippets_[it->second];
}

const KnowledgeSnippet& KnowledgeBase::at(const SnippetKey& key) const {
  if (const auto* s = find(key)) return *s;
  throw std::out_of_range("unknown snippet " + to_string(key));
}

const Entity* KnowledgeBase::find_entity(std::string_view domain, std::string_view entity_id) const {
  auto it = entities_.find(std::make_pair(std::string(domain), std::string(entity_id)));
  return it == entities_.end() ? nullptr : &it->second;
}

const Entity& KnowledgeBase::entity(std::string_view domain, std::string_view entity_id) const {
  if (const auto* e = find_entity(domain, entity_id)) return *e;
  throw std::out_of_range("unknown entity " + std::string(domain) + "/" + std::string(entity_id));
}

std::vector<const Entity*> KnowledgeBase::entities(std::string_view domain) const {
  std::vector<const Entity*> out;
  for (const auto& [key, e] : entities_) {
    if (domain.empty() || key.first == domain) out.push_back(&e);
  }
  return out;
}

std::vector<const KnowledgeSnippet*> KnowledgeBase::snippets_for(std::string_view domain,
                                                                 const std::optional<std::string>& entity_id) const {
  if (!has_domain(domain)) throw std::out_of_range("unknown domain '" + std::string(domain) + "'");
  if (is_domain_wide(domain) && entity_id)
    throw std::invalid_argument("domain '" + std::string(domain) + "' is domain-wide; no entity expected");
  if (is_entity_specific(domain)) {
    if (!entity_id) throw std::invalid_argument("domain '" + std::string(domain) + "' needs an entity id");
    if (!find_entity(domain, *entity_id))
      throw std::out_of_range("unknown entity " + std::string(domain) + "/" + *entity_id);
  }
  std::vector<const KnowledgeSnippet*> out;
  if (auto it = groups_.find({std::string(domain), entity_id}); it != groups_.end()) {
    for (auto i : it->second) out.push_back(&snippets_[i]);
  }
  return out;
}

nlohmann::json KnowledgeBase::to_json() const {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& domain : domains_) doc[domain] = nlohmann::json::object();
  for (const auto& [key, e] : entities_) {
    auto& node = doc[key.first][key.second];
    node["name"] = e.canonical_name;
    if (!e.aliases.empty()) node["aliases"] = e.aliases;
    node["docs"] = nlohmann::json::object();
  }
  for (const auto& d : domain_wide_) doc[d][std::string(kDomainWideEntity)]["docs"] = nlohmann::json::object();
  for (const auto& s : snippets_) {
    const std::string eid = s.key.entity_id ? *s.key.entity_id : std::string(kDomainWideEntity);
    doc[s.key.domain][eid]["docs"][s.key.doc_id] = {{"title", s.title}, {"body", s.body}};
  }
  return doc;
}

KnowledgeBase parse_knowledge_base(std::string_view text, std::set<std::string> training_domains) {
  return KnowledgeBase::from_json(parse_json<nlohmann::json>(text, "knowledge"), std::move(training_domains));
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& path, std::set<std::string> training_domains) {
  return parse_knowledge_base(read_file(path, "knowledge"), std::move(training_domains));
}

namespace {

DatabaseRecord parse_record(const nlohmann::ordered_json& entry, std::string domain, std::size_t index) {
  const std::string where = "database: record " + std::to_string(index);
  if (!entry.is_object()) throw DataError(where + " must be an object");
  DatabaseRecord rec;
  rec.domain = std::move(domain);
  for (const auto& [attr, value] : entry.items()) {
    if (attr == "domain" && value.is_string()) {
      rec.domain = value.get<std::string>();
      continue;
    }
    if (value.is_null()) continue;
    rec.attributes.emplace_back(attr, scalar_to_string(value));
  }
  auto name = std::find_if(rec.attributes.begin(), rec.attributes.end(),
                           [](const auto& kv) { return kv.first == "name"; });
  if (name == rec.attributes.end() || name->second.empty()) throw DataError(where + " is missing a name attribute");
  rec.entity_name = name->second;
  return rec;
}

}  // namespace

std::vector<DatabaseRecord> parse_database(std::string_view text) {
  auto doc = parse_json<nlohmann::ordered_json>(text, "database");
  std::vector<DatabaseRecord> out;
  if (doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(parse_record(doc[i], "", i));
  } else if (doc.is_object()) {
    for (const auto& [domain, records] : doc.items()) {
      if (!records.is_array()) throw DataError("database: domain '" + domain + "' must map to a list of records");
      for (const auto& r : records) out.push_back(parse_record(r, domain, out.size()));
    }
  } else {
    throw DataError("database: expected a list of records or an object of domain -> records");
  }
  return out;
}

std::vector<DatabaseRecord> load_database(const std::filesystem::path& path) {
  return parse_database(read_file(path, "database"));
}

std::string_view speaker_name(Speaker speaker) { return speaker == Speaker::User ? "User" : "Assistant"; }

DialogDataset parse_dialogs(std::string_view logs_text, const std::optional<std::string>& labels_text,
                            const KnowledgeBase& kb) {
  auto logs = parse_json<nlohmann::json>(logs_text, "logs");
  if (!logs.is_array()) throw DataError("logs: top level must be a list of dialogs");

  DialogDataset ds;
  for (std::size_t d = 0; d < logs.size(); ++d) {
    const auto& turns = logs[d];
    if (!turns.is_array()) throw DataError("logs: dialog " + std::to_string(d) + " must be a list of turns");
    Dialog dialog;
    for (std::size_t t = 0; t < turns.size(); ++t) {
      const auto& turn = turns[t];
      const std::string where = "logs: dialog " + std::to_string(d) + " turn " + std::to_string(t);
      if (!turn.is_object()) throw DataError(where + " must be an object");
      auto speaker = turn.find("speaker");
      auto text = turn.find("text");
      if (speaker == turn.end() || !speaker->is_string()) throw DataError(where + " has no speaker");
      if (text == turn.end() || !text->is_string() || text->get<std::string>().empty())
        throw DataError(where + " has empty text");
      std::string tag = speaker->get<std::string>();
      std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char c) { return std::tolower(c); });
      Speaker who;
      if (tag == "u" || tag == "user") {
        who = Speaker::User;
      } else if (tag == "s" || tag == "system" || tag == "assistant") {
        who = Speaker::Assistant;
      } else {
        throw DataError(where + " has unknown speaker tag '" + speaker->get<std::string>() + "'");
      }
      dialog.push_back({who, text->get<std::string>()});
    }
    ds.dialogs.push_back(std::move(dialog));
  }

  if (!labels_text) return ds;

  auto labels = parse_json<nlohmann::json>(*labels_text, "labels");
  if (!labels.is_array()) throw DataError("labels: top level must be a list");
  if (labels.size() != ds.dialogs.size())
    throw DataError("labels: " + std::to_string(labels.size()) + " labels for " + std::to_string(ds.dialogs.size()) +
                    " dialogs");

  std::vector<TurnLabel> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    const std::string where = "labels: entry " + std::to_string(i);
    if (!l.is_object()) throw DataError(where + " must be an object");
    auto target = l.find("target");
    if (target == l.end() || !target->is_boolean()) throw DataError(where + " needs a boolean 'target'");
    TurnLabel label;
    label.target = target->get<bool>();
    if (auto k = l.find("knowledge"); k != l.end() && !k->is_null()) {
      if (!k->is_array()) throw DataError(where + ": 'knowledge' must be a list");
      for (const auto& ref : *k) {
        if (!ref.is_object()) throw DataError(where + ": knowledge refs must be objects");
        auto domain = ref.find("domain");
        if (domain == ref.end() || !domain->is_string()) throw DataError(where + ": knowledge ref without domain");
        SnippetKey key{domain->get<std::string>(), id_field(ref, "entity_id", true), *id_field(ref, "doc_id", false)};
        if (key.entity_id == kDomainWideEntity) key.entity_id.reset();
        if (!kb.find(key)) throw DataError(where + ": gold snippet " + to_string(key) + " not in knowledge base");
        label.gold_snippets.push_back(std::move(key));
      }
    }
    if (label.target == label.gold_snippets.empty())
      throw DataError(where + ": knowledge refs must be present exactly when target is true");
    if (auto r = l.find("response"); r != l.end() && !r->is_null()) {
      if (!r->is_string()) throw DataError(where + ": 'response' must be a string");
      label.gold_response = r->get<std::string>();
    }
    out.push_back(std::move(label));
  }
  ds.labels = std::move(out);
  return ds;
}

DialogDataset load_dialogs(const std::filesystem::path& logs_path,
                           const std::optional<std::filesystem::path>& labels_path, const KnowledgeBase& kb) {
  std::optional<std::string> labels;
  if (labels_path) labels = read_file(*labels_path, "labels");
  return parse_dialogs(read_file(logs_path, "logs"), labels, kb);
}

}  // namespace kgd
