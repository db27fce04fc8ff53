// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include "kgd/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <thread>

#include "kgd/errors.hpp"

namespace kgd {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void check_keys(const ojson& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
void read(const ojson& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_path(const ojson& obj, const char* key, fs::path& out) {
  if (obj.contains(key)) out = obj.at(key).get<std::string>();
}

bool is_remote(std::string_view binding) { return binding == "remote" || binding.rfind("remote:", 0) == 0; }

std::string remote_url(std::string_view binding, const RemoteOptions& remote) {
  if (binding.size() > 7) return std::string(binding.substr(7));
  if (!remote.base_url.empty()) return remote.base_url;
  if (const char* env = std::getenv(kRemoteUrlEnv); env && *env) return env;
  return {};
}

void check_binding(std::string_view what, std::string_view binding, bool allow_lexical, bool allow_template,
                   const RemoteOptions& remote) {
  if ((allow_lexical && binding == "lexical") || (allow_template && binding == "template")) return;
  if (!is_remote(binding)) throw ConfigError("unknown binding '" + std::string(binding) + "' for " + std::string(what));
  if (remote_url(binding, remote).empty())
    throw ConfigError(std::string(what) + " is bound to a remote backend but no URL is configured (set remote.url or " +
                      kRemoteUrlEnv + ")");
}

ojson key_json(const SnippetKey& k) {
  return ojson{{"domain", k.domain},
               {"entity_id", k.entity_id ? ojson(*k.entity_id) : ojson(nullptr)},
               {"doc_id", k.doc_id}};
}

ojson keys_json(const std::vector<SnippetKey>& keys) {
  ojson out = ojson::array();
  for (const auto& k : keys) out.push_back(key_json(k));
  return out;
}

std::vector<SnippetKey> keys_of(const std::vector<RankedSnippet>& ranked) {
  std::vector<SnippetKey> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(r.snippet);
  return out;
}

ojson detection_metrics_json(const DetectionMetrics& m) {
  return ojson{{"accuracy", m.accuracy},
               {"precision", m.precision},
               {"recall", m.recall},
               {"f1", m.f1},
               {"precision_undefined", m.precision_undefined},
               {"recall_undefined", m.recall_undefined},
               {"tp", m.tp},
               {"fp", m.fp},
               {"fn", m.fn},
               {"tn", m.tn}};
}

ojson selection_metrics_json(const SelectionMetrics& m) {
  return ojson{{"mrr@5", m.mrr_at_5}, {"r@1", m.recall_at_1}, {"r@5", m.recall_at_5}, {"turns", m.turns}, {"empty", m.empty}};
}

ojson generation_metrics_json(const GenerationMetrics& g) {
  return ojson{{"count", g.count},           {"bleu-1", g.bleu[0]},   {"bleu-2", g.bleu[1]},
               {"bleu-3", g.bleu[2]},        {"bleu-4", g.bleu[3]},   {"meteor_simplified", g.meteor},
               {"rouge-1", g.rouge_1},       {"rouge-2", g.rouge_2},  {"rouge-l", g.rouge_l}};
}

ojson accounting_json(const Accounting& a) {
  return ojson{{"true_knowledge_turns", a.true_knowledge_turns},
               {"task1_false_negatives", a.task1_false_negatives},
               {"task2_top1_errors", a.task2_top1_errors},
               {"recall_at_1_loss_turns", a.recall_at_1_loss_turns}};
}

// Re-raises whatever escaped a stage with the stage name in front, keeping its kind.
template <typename Fn>
auto staged(std::string_view stage, Fn&& fn) -> decltype(fn()) {
  const std::string tag = std::string(stage) + " stage: ";
  try {
    return fn();
  } catch (const BackendError& e) {
    throw BackendError(tag + e.what(), e.retryable());
  } catch (const Error& e) {
    throw Error(e.kind(), tag + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::Internal, tag + e.what());
  }
}

}  // namespace

const std::vector<std::string>& scorer_roles() {
  static const std::vector<std::string> roles{std::string(kRoleDomainNli), std::string(kRoleCandidateRank),
                                              std::string(kRoleDeRefine), std::string(kRoleDomainProb),
                                              std::string(kRoleKnowledgeProb)};
  return roles;
}

PipelineConfig PipelineConfig::from_json(const ojson& doc, const fs::path& base_dir) {
  PipelineConfig c;
  c.base_dir = base_dir;
  try {
    check_keys(doc,
               {"data", "training_domains", "scorers", "generator", "window_size", "detection", "matching", "selection",
                "generation", "remote", "workers", "output_dir", "seed"},
               "config");
    if (doc.contains("data")) {
      const auto& d = doc.at("data");
      check_keys(d, {"knowledge", "database", "logs", "labels"}, "data");
      read_path(d, "knowledge", c.data.knowledge);
      read_path(d, "database", c.data.database);
      read_path(d, "logs", c.data.logs);
      read_path(d, "labels", c.data.labels);
    }
    read(doc, "training_domains", c.training_domains);
    read(doc, "scorers", c.scorers);
    read(doc, "generator", c.generator);
    read(doc, "window_size", c.window_size);

    if (doc.contains("matching")) {
      const auto& m = doc.at("matching");
      check_keys(m, {"threshold", "recency_decay", "rewrites", "generic_prefixes", "generic_suffixes", "domain_synonyms"},
                 "matching");
      read(m, "threshold", c.match.similarity_threshold);
      read(m, "recency_decay", c.match.recency_decay);
      if (m.contains("rewrites")) {
        c.match.rewrites.clear();
        for (const auto& r : m.at("rewrites")) {
          c.match.rewrites.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>()});
        }
      }
      read(m, "generic_prefixes", c.match.generic_prefixes);
      read(m, "generic_suffixes", c.match.generic_suffixes);
      read(m, "domain_synonyms", c.match.domain_synonyms);
    }

    if (doc.contains("detection")) {
      const auto& d = doc.at("detection");
      check_keys(d,
                 {"domain_n_dialog", "domain_template", "rank_n_dialog", "rank_template", "pseudo_candidates", "domains",
                  "knowledge_text", "attribute_labels"},
                 "detection");
      read(d, "domain_n_dialog", c.detection.domain_premise.n_dialog);
      read(d, "domain_template", c.detection.domain_premise.use_template);
      read(d, "rank_n_dialog", c.detection.rank_premise.n_dialog);
      read(d, "rank_template", c.detection.rank_premise.use_template);
      read(d, "pseudo_candidates", c.detection.pseudo_candidates);
      read(d, "domains", c.detection.domains);
      if (d.contains("knowledge_text")) {
        const auto kt = d.at("knowledge_text").get<std::string>();
        if (kt == "body") c.detection.pool.knowledge_text = KnowledgeText::Body;
        else if (kt == "title") c.detection.pool.knowledge_text = KnowledgeText::Title;
        else throw ConfigError("detection.knowledge_text must be \"body\" or \"title\"");
      }
      if (d.contains("attribute_labels")) {
        c.detection.pool.attribute_labels.clear();
        for (const auto& [k, v] : d.at("attribute_labels").items()) c.detection.pool.attribute_labels[k] = v.get<std::string>();
      }
    }

    if (doc.contains("selection")) {
      const auto& s = doc.at("selection");
      check_keys(s, {"k", "gating", "domain_labels"}, "selection");
      read(s, "k", c.selection.k);
      read(s, "domain_labels", c.selection.domain_labels);
      if (s.contains("gating")) {
        const auto g = s.at("gating").get<std::string>();
        if (g == "detection") c.gating = Gating::Detection;
        else if (g == "gold") c.gating = Gating::Gold;
        else throw ConfigError("selection.gating must be \"detection\" or \"gold\"");
      }
    }

    if (doc.contains("generation")) {
      const auto& g = doc.at("generation");
      check_keys(g,
                 {"n_snippets", "ratio", "history_tokens", "snippet_tokens", "prompt_cues", "domain_prompts",
                  "generic_prompt"},
                 "generation");
      read(g, "n_snippets", c.generation.n_snippets);
      read(g, "ratio", c.generation.ratio);
      read(g, "history_tokens", c.generation.budget.history_tokens);
      read(g, "snippet_tokens", c.generation.budget.snippet_tokens);
      read(g, "prompt_cues", c.generation.prompt_cues);
      if (g.contains("domain_prompts")) {
        c.domain_prompts.clear();
        for (const auto& [k, v] : g.at("domain_prompts").items()) c.domain_prompts[k] = v.get<std::string>();
      }
      read(g, "generic_prompt", c.generic_prompt);
    }

    if (doc.contains("remote")) {
      const auto& r = doc.at("remote");
      check_keys(r, {"url", "timeout_ms", "retries", "batch_size", "max_in_flight"}, "remote");
      read(r, "url", c.remote.base_url);
      if (r.contains("timeout_ms")) c.remote.timeout = std::chrono::milliseconds(r.at("timeout_ms").get<long>());
      read(r, "retries", c.remote.retries);
      read(r, "batch_size", c.remote.batch_size);
      read(r, "max_in_flight", c.remote.max_in_flight);
    }

    read(doc, "workers", c.workers);
    read_path(doc, "output_dir", c.output_dir);
    read(doc, "seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  c.detection.match = c.match;
  c.detection.pool.rewrites = c.match.rewrites;
  c.selection.match = c.match;
  return c;
}

ojson PipelineConfig::to_json() const {
  ojson rewrites = ojson::array();
  for (const auto& r : match.rewrites) rewrites.push_back(ojson::array({r.from, r.to}));
  ojson labels = ojson::object();
  for (const auto& [k, v] : detection.pool.attribute_labels) labels[k] = v;
  ojson prompts = ojson::object();
  for (const auto& [k, v] : domain_prompts) prompts[k] = v;
  ojson synonyms = ojson::object();
  for (const auto& [k, v] : match.domain_synonyms) synonyms[k] = v;
  ojson scorer_map = ojson::object();
  for (const auto& [k, v] : scorers) scorer_map[k] = v;

  return ojson{
      {"data",
       {{"knowledge", data.knowledge.generic_string()},
        {"database", data.database.generic_string()},
        {"logs", data.logs.generic_string()},
        {"labels", data.labels.generic_string()}}},
      {"training_domains", training_domains},
      {"scorers", scorer_map},
      {"generator", generator},
      {"window_size", window_size},
      {"detection",
       {{"domain_n_dialog", detection.domain_premise.n_dialog},
        {"domain_template", detection.domain_premise.use_template},
        {"rank_n_dialog", detection.rank_premise.n_dialog},
        {"rank_template", detection.rank_premise.use_template},
        {"pseudo_candidates", detection.pseudo_candidates},
        {"domains", detection.domains},
        {"knowledge_text", detection.pool.knowledge_text == KnowledgeText::Body ? "body" : "title"},
        {"attribute_labels", labels}}},
      {"matching",
       {{"threshold", match.similarity_threshold},
        {"recency_decay", match.recency_decay},
        {"rewrites", rewrites},
        {"generic_prefixes", match.generic_prefixes},
        {"generic_suffixes", match.generic_suffixes},
        {"domain_synonyms", synonyms}}},
      {"selection",
       {{"k", selection.k},
        {"gating", gating == Gating::Detection ? "detection" : "gold"},
        {"domain_labels", selection.domain_labels}}},
      {"generation",
       {{"n_snippets", generation.n_snippets},
        {"ratio", generation.ratio},
        {"history_tokens", generation.budget.history_tokens},
        {"snippet_tokens", generation.budget.snippet_tokens},
        {"prompt_cues", generation.prompt_cues},
        {"domain_prompts", prompts},
        {"generic_prompt", generic_prompt}}},
      {"remote",
       {{"url", remote.base_url},
        {"timeout_ms", remote.timeout.count()},
        {"retries", remote.retries},
        {"batch_size", remote.batch_size},
        {"max_in_flight", remote.max_in_flight}}},
      {"workers", workers},
      {"output_dir", output_dir.generic_string()},
      {"seed", seed}};
}

fs::path PipelineConfig::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

std::string PipelineConfig::binding(std::string_view role) const {
  const auto it = scorers.find(std::string(role));
  return it == scorers.end() ? "lexical" : it->second;
}

void PipelineConfig::validate() const {
  auto require_file = [&](const fs::path& p, const char* what, bool required) {
    if (p.empty()) {
      if (required) throw ConfigError(std::string("data.") + what + " is required");
      return;
    }
    if (!fs::is_regular_file(resolve(p)))
      throw ConfigError(std::string("data.") + what + " does not exist: " + resolve(p).string());
  };
  require_file(data.knowledge, "knowledge", true);
  require_file(data.logs, "logs", true);
  require_file(data.database, "database", false);
  require_file(data.labels, "labels", false);

  if (window_size == 0) throw ConfigError("window_size must be at least 1");
  if (selection.k == 0) throw ConfigError("selection.k must be at least 1");
  if (generation.n_snippets == 0) throw ConfigError("generation.n_snippets must be at least 1");
  if (!(generation.ratio > 1.0)) throw ConfigError("generation.ratio must exceed 1");
  if (detection.domain_premise.n_dialog == 0 || detection.rank_premise.n_dialog == 0)
    throw ConfigError("detection n_dialog values must be at least 1");
  if (workers == 0) throw ConfigError("workers must be at least 1");
  if (remote.batch_size == 0 || remote.max_in_flight == 0 || remote.retries < 0)
    throw ConfigError("remote batch_size and max_in_flight must be positive, retries non-negative");
  try {
    match.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("matching: ") + e.what());
  }
  for (const auto& [role, b] : scorers) {
    const auto& roles = scorer_roles();
    if (std::find(roles.begin(), roles.end(), role) == roles.end()) throw ConfigError("unknown scorer role '" + role + "'");
    check_binding("scorer role " + role, b, true, false, remote);
  }
  check_binding("generator", generator, false, true, remote);
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ojson doc;
  try {
    doc = ojson::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON at byte " + std::to_string(e.byte));
  }
  return PipelineConfig::from_json(doc, fs::absolute(path).parent_path());
}

std::vector<std::string> idf_corpus(const KnowledgeBase& kb, const std::vector<DatabaseRecord>& db,
                                    const std::vector<std::string>& pseudo) {
  std::vector<std::string> docs;
  for (const auto& s : kb.snippets()) docs.push_back(s.title + " " + s.body);
  for (const auto& r : db) {
    for (auto& sentence : format_db_record(r)) docs.push_back(std::move(sentence));
  }
  docs.insert(docs.end(), pseudo.begin(), pseudo.end());
  return docs;
}

Backends make_backends(const PipelineConfig& cfg, const KnowledgeBase& kb, const std::vector<DatabaseRecord>& db) {
  std::shared_ptr<const Scorer> lexical;
  std::map<std::string, std::shared_ptr<const Scorer>> remotes;
  auto scorer_for = [&](std::string_view role) -> std::shared_ptr<const Scorer> {
    const auto b = cfg.binding(role);
    if (b == "lexical") {
      if (!lexical) {
        auto idf = std::make_shared<const IdfTable>(
            IdfTable::build(idf_corpus(kb, db, cfg.detection.pseudo_candidates), cfg.match.rewrites));
        lexical = std::make_shared<LexicalScorer>(std::move(idf));
      }
      return lexical;
    }
    const auto url = remote_url(b, cfg.remote);
    auto& slot = remotes[url];
    if (!slot) {
      auto opts = cfg.remote;
      opts.base_url = url;
      slot = std::make_shared<RemoteScorer>(opts);
    }
    return slot;
  };

  Backends out;
  out.domain_nli = scorer_for(kRoleDomainNli);
  out.candidate_rank = scorer_for(kRoleCandidateRank);
  out.de_refine = scorer_for(kRoleDeRefine);
  out.domain_prob = scorer_for(kRoleDomainProb);
  out.knowledge_prob = scorer_for(kRoleKnowledgeProb);
  if (cfg.generator == "template") {
    out.generator = std::make_shared<TemplateGenerator>(cfg.domain_prompts, cfg.generic_prompt);
  } else {
    auto opts = cfg.remote;
    opts.base_url = remote_url(cfg.generator, cfg.remote);
    out.generator = std::make_shared<RemoteGenerator>(opts);
  }
  return out;
}

Accounting account(const std::vector<TurnSelection>& selections) {
  Accounting a;
  for (const auto& s : selections) {
    if (!s.gold_target.value_or(false)) continue;
    ++a.true_knowledge_turns;
    if (!s.ran) {
      ++a.task1_false_negatives;
    } else if (gold_rank(keys_of(s.ranked), s.gold) != 1) {
      ++a.task2_top1_errors;
    }
  }
  a.recall_at_1_loss_turns = a.task1_false_negatives + a.task2_top1_errors;
  return a;
}

Pipeline::Pipeline(PipelineConfig cfg, KnowledgeBase kb, std::vector<DatabaseRecord> db, DialogDataset data,
                   Backends backends)
    : cfg_(std::move(cfg)), kb_(std::move(kb)), db_(std::move(db)), data_(std::move(data)), backends_(std::move(backends)) {
  for (std::size_t i = 0; i < data_.dialogs.size(); ++i) {
    const auto& d = data_.dialogs[i];
    if (d.empty() || d.back().speaker != Speaker::User)
      throw DataError("dialog " + std::to_string(i) + " must end with a user turn");
  }
  if (!backends_.domain_nli || !backends_.candidate_rank || !backends_.de_refine || !backends_.domain_prob ||
      !backends_.knowledge_prob || !backends_.generator)
    throw std::invalid_argument("every backend role must be bound");
}

Pipeline Pipeline::load(const PipelineConfig& cfg) {
  cfg.validate();
  auto kb = load_knowledge_base(cfg.resolve(cfg.data.knowledge), cfg.training_domains);
  std::vector<DatabaseRecord> db;
  if (!cfg.data.database.empty()) db = load_database(cfg.resolve(cfg.data.database));
  std::optional<fs::path> labels;
  if (!cfg.data.labels.empty()) labels = cfg.resolve(cfg.data.labels);
  auto data = load_dialogs(cfg.resolve(cfg.data.logs), labels, kb);
  auto backends = make_backends(cfg, kb, db);
  return Pipeline(cfg, std::move(kb), std::move(db), std::move(data), std::move(backends));
}

ContextWindow Pipeline::window_for(std::size_t dialog) const {
  const auto& d = data_.dialogs.at(dialog);
  return context_window(d, d.size() - 1, cfg_.window_size);
}

template <typename Fn>
auto Pipeline::parallel_map(std::size_t n, Fn fn) const -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min(cfg_.workers, n);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  // Report the lowest-index failure so diagnostics do not depend on scheduling.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<TurnDetection> Pipeline::detect_all() const {
  return parallel_map(data_.dialogs.size(), [&](std::size_t i) {
    TurnDetection t;
    t.dialog = i;
    t.turn = data_.dialogs[i].size() - 1;
    t.result = detect(window_for(i), kb_, db_, *backends_.domain_nli, *backends_.candidate_rank, cfg_.detection);
    if (data_.labels) t.gold = (*data_.labels)[i].target;
    return t;
  });
}

std::vector<TurnSelection> Pipeline::select_all(Gating gating, const std::vector<TurnDetection>* detections) const {
  if (gating == Gating::Gold && !data_.labels) throw ConfigError("gold gating needs a labels file");
  if (gating == Gating::Detection && (!detections || detections->size() != data_.dialogs.size()))
    throw std::invalid_argument("detection gating needs one detection per dialog");

  return parallel_map(data_.dialogs.size(), [&](std::size_t i) {
    TurnSelection s;
    s.dialog = i;
    if (data_.labels) {
      s.gold = (*data_.labels)[i].gold_snippets;
      s.gold_target = (*data_.labels)[i].target;
    }
    if (gating == Gating::Detection) {
      s.predicted_target = (*detections)[i].result.target;
      s.ran = *s.predicted_target;
    } else {
      s.ran = *s.gold_target;
    }
    if (!s.ran) return s;

    const auto window = window_for(i);
    s.candidates = select_de_candidates(window, kb_, *backends_.de_refine, cfg_.match);
    const bool any_snippets = std::any_of(s.candidates.begin(), s.candidates.end(), [&](const DECandidate& c) {
      return !kb_.snippets_for(c.domain, c.entity_id).empty();
    });
    if (any_snippets)
      s.ranked = rank_snippets(window, kb_, s.candidates, *backends_.domain_prob, *backends_.knowledge_prob,
                               cfg_.selection);
    return s;
  });
}

std::vector<TurnGeneration> Pipeline::generate_all(const std::vector<TurnSelection>& selections,
                                                   const ComposerConfig& composer) const {
  auto all = parallel_map(selections.size(), [&](std::size_t i) -> std::optional<TurnGeneration> {
    const auto& s = selections[i];
    if (!s.ran || s.ranked.empty()) return std::nullopt;
    TurnGeneration g;
    g.dialog = s.dialog;
    g.result = respond(window_for(s.dialog), kb_, s.ranked, *backends_.generator, composer);
    if (data_.labels) g.reference = (*data_.labels)[s.dialog].gold_response;
    if (s.gold_target.value_or(false)) g.case_label = categorize_case(keys_of(s.ranked), s.gold, 4);
    return g;
  });
  std::vector<TurnGeneration> out;
  for (auto& g : all) {
    if (g) out.push_back(std::move(*g));
  }
  return out;
}

namespace {

ojson detection_section(const std::vector<TurnDetection>& detections, bool labelled) {
  ojson turns = ojson::array();
  std::vector<bool> preds, golds;
  for (const auto& d : detections) {
    const auto& r = d.result;
    ojson top = ojson::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(3, r.ranked.size()); ++i) {
      const auto& c = r.ranked[i];
      top.push_back({{"source", to_string(c.candidate.source)}, {"text", c.candidate.text}, {"probability", c.probability}});
    }
    turns.push_back({{"dialog", d.dialog},
                     {"turn", d.turn},
                     {"target", r.target},
                     {"gold", d.gold ? ojson(*d.gold) : ojson(nullptr)},
                     {"domain", r.domain},
                     {"entity_id", r.entity_id ? ojson(*r.entity_id) : ojson(nullptr)},
                     {"entity_name", r.entity_name ? ojson(*r.entity_name) : ojson(nullptr)},
                     {"entity_fallback", r.entity_fallback},
                     {"empty_pool", r.empty_pool},
                     {"top_candidates", top}});
    preds.push_back(r.target);
    golds.push_back(d.gold.value_or(false));
  }
  ojson out{{"available", labelled && !detections.empty()}};
  out["metrics"] = labelled && !detections.empty() ? detection_metrics_json(detection_metrics(preds, golds)) : ojson(nullptr);
  out["turns"] = std::move(turns);
  return out;
}

ojson selection_section(const std::vector<TurnSelection>& selections, Gating gating, bool labelled) {
  ojson turns = ojson::array();
  std::vector<std::vector<SnippetKey>> ranked_lists, golds;
  for (const auto& s : selections) {
    ojson cands = ojson::array();
    for (const auto& c : s.candidates) {
      cands.push_back({{"domain", c.domain},
                       {"entity_id", c.entity_id ? ojson(*c.entity_id) : ojson(nullptr)},
                       {"provenance", to_string(c.provenance)}});
    }
    ojson ranked = ojson::array();
    for (const auto& r : s.ranked) {
      auto k = key_json(r.snippet);
      k["domain_prob"] = r.domain_prob;
      k["knowledge_prob"] = r.knowledge_prob;
      k["confidence"] = r.confidence;
      ranked.push_back(std::move(k));
    }
    const auto keys = keys_of(s.ranked);
    turns.push_back({{"dialog", s.dialog},
                     {"ran", s.ran},
                     {"candidates", cands},
                     {"ranked", ranked},
                     {"gold", keys_json(s.gold)},
                     {"gold_rank", s.gold_target.value_or(false) ? ojson(gold_rank(keys, s.gold)) : ojson(nullptr)}});
    if (s.gold_target.value_or(false)) {
      ranked_lists.push_back(s.ran ? keys : std::vector<SnippetKey>{});
      golds.push_back(s.gold);
    }
  }
  ojson out{{"gating", gating == Gating::Detection ? "detection" : "gold"}, {"available", labelled}};
  out["metrics"] = labelled ? selection_metrics_json(selection_metrics(ranked_lists, golds, 5)) : ojson(nullptr);
  out["accounting"] = labelled ? accounting_json(account(selections)) : ojson(nullptr);
  out["turns"] = std::move(turns);
  return out;
}

GenerationMetrics metrics_over(const std::vector<TurnGeneration>& gens, const std::optional<CaseLabel>& only) {
  std::vector<std::string> cands, refs;
  for (const auto& g : gens) {
    if (!g.reference) continue;
    if (only && g.case_label != only) continue;
    cands.push_back(g.result.response);
    refs.push_back(*g.reference);
  }
  return generation_metrics(cands, refs);
}

ojson generation_section(const std::vector<TurnGeneration>& gens) {
  ojson turns = ojson::array();
  for (const auto& g : gens) {
    turns.push_back({{"dialog", g.dialog},
                     {"response", g.result.response},
                     {"branch", to_string(g.result.decision.branch)},
                     {"reason", to_string(g.result.decision.reason)},
                     {"used_snippets", keys_json(g.result.used_snippets)},
                     {"reference", g.reference ? ojson(*g.reference) : ojson(nullptr)},
                     {"case", g.case_label ? ojson(to_string(*g.case_label)) : ojson(nullptr)}});
  }
  const auto overall = metrics_over(gens, std::nullopt);
  ojson out{{"available", overall.count > 0}, {"metrics", generation_metrics_json(overall)}};

  ojson cases = ojson::object();
  std::size_t evaluated = 0;
  for (auto label : {CaseLabel::Case1, CaseLabel::Case2, CaseLabel::Case3}) {
    const auto count = static_cast<std::size_t>(
        std::count_if(gens.begin(), gens.end(), [&](const TurnGeneration& g) { return g.case_label == label; }));
    evaluated += count;
    const auto m = metrics_over(gens, label);
    cases[std::string(to_string(label))] = {{"count", count},
                                            {"metrics", m.count ? generation_metrics_json(m) : ojson(nullptr)}};
  }
  out["cases"] = std::move(cases);
  out["evaluated_knowledge_turns"] = evaluated;
  out["turns"] = std::move(turns);
  return out;
}

}  // namespace

ojson Pipeline::run_detect() const {
  auto det = staged("detect", [&] { return detect_all(); });
  return ojson{{"command", "detect"}, {"config", cfg_.to_json()},
               {"detection", detection_section(det, data_.labels.has_value())}};
}

ojson Pipeline::run_select() const {
  ojson report{{"command", "select"}, {"config", cfg_.to_json()}};
  std::vector<TurnDetection> det;
  if (cfg_.gating == Gating::Detection) {
    det = staged("detect", [&] { return detect_all(); });
    report["detection"] = detection_section(det, data_.labels.has_value());
  }
  auto sel = staged("select", [&] { return select_all(cfg_.gating, &det); });
  report["selection"] = selection_section(sel, cfg_.gating, data_.labels.has_value());
  return report;
}

ojson Pipeline::run_generate() const {
  auto report = run_pipeline();
  report["command"] = "generate";
  if (cfg_.gating == Gating::Gold) report.erase("detection");
  return report;
}

ojson Pipeline::run_pipeline() const {
  const bool labelled = data_.labels.has_value();
  auto det = staged("detect", [&] { return detect_all(); });
  auto sel = staged("select", [&] { return select_all(cfg_.gating, &det); });
  auto gen = staged("generate", [&] { return generate_all(sel, cfg_.generation); });
  ojson report{{"command", "pipeline"}, {"config", cfg_.to_json()}};
  report["detection"] = detection_section(det, labelled);
  report["selection"] = selection_section(sel, cfg_.gating, labelled);
  report["generation"] = generation_section(gen);
  return report;
}

ojson Pipeline::run_sweep_n(std::size_t max_n) const {
  std::vector<TurnDetection> det;
  if (cfg_.gating == Gating::Detection) det = staged("detect", [&] { return detect_all(); });
  auto sel = staged("select", [&] { return select_all(cfg_.gating, &det); });
  ojson rows = ojson::array();
  for (std::size_t n = 1; n <= max_n; ++n) {
    auto composer = cfg_.generation;
    composer.n_snippets = n;
    auto gen = staged("generate", [&] { return generate_all(sel, composer); });
    rows.push_back({{"n", n}, {"metrics", generation_metrics_json(metrics_over(gen, std::nullopt))}});
  }
  return ojson{{"command", "sweep-n"}, {"config", cfg_.to_json()}, {"sweep", rows}};
}

fs::path write_report(const PipelineConfig& cfg, std::string_view command, const ojson& report) {
  const auto dir = cfg.resolve(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto path = dir / (std::string(command) + ".json");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report " + path.string());
  out << report.dump(2) << '\n';
  return path;
}

}  // namespace kgd
