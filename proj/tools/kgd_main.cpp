// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kgd/errors.hpp"
#include "kgd/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kBackend = 4, kInternal = 5 };

int exit_code(kgd::ErrorKind kind) {
  switch (kind) {
    case kgd::ErrorKind::Config: return kConfig;
    case kgd::ErrorKind::Data: return kData;
    case kgd::ErrorKind::Backend: return kBackend;
    case kgd::ErrorKind::Internal: return kInternal;
  }
  return kInternal;
}

struct Overrides {
  std::string config;
  std::string knowledge, logs, labels, database, out, generator, gating;
  std::vector<std::string> scorers;
  std::optional<std::size_t> n_snippets, workers;
  std::optional<double> ratio;
};

kgd::PipelineConfig build_config(const Overrides& o) {
  kgd::PipelineConfig cfg;
  if (!o.config.empty()) {
    cfg = kgd::load_config(o.config);
  } else {
    cfg.base_dir = fs::current_path();
  }
  auto path = [](const std::string& p) { return fs::absolute(p); };
  if (!o.knowledge.empty()) cfg.data.knowledge = path(o.knowledge);
  if (!o.logs.empty()) cfg.data.logs = path(o.logs);
  if (!o.labels.empty()) cfg.data.labels = path(o.labels);
  if (!o.database.empty()) cfg.data.database = path(o.database);
  if (!o.out.empty()) cfg.output_dir = path(o.out);
  if (!o.generator.empty()) cfg.generator = o.generator;
  for (const auto& s : o.scorers) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw kgd::ConfigError("--scorer expects <role>=<binding>, got '" + s + "'");
    cfg.scorers[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (o.n_snippets) cfg.generation.n_snippets = *o.n_snippets;
  if (o.ratio) cfg.generation.ratio = *o.ratio;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.gating.empty()) {
    if (o.gating == "detection") cfg.gating = kgd::Gating::Detection;
    else if (o.gating == "gold") cfg.gating = kgd::Gating::Gold;
    else throw kgd::ConfigError("--gating must be detection or gold");
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-grounded dialog pipeline: detection, selection, generation and evaluation."};
  app.require_subcommand(1);

  Overrides o;
  app.add_option("--config", o.config, "JSON pipeline configuration");
  app.add_option("--knowledge", o.knowledge, "knowledge snippet file");
  app.add_option("--logs", o.logs, "dialog logs");
  app.add_option("--labels", o.labels, "labels for the last turn of each dialog");
  app.add_option("--database", o.database, "structured database records");
  app.add_option("--scorer", o.scorers, "<role>=<lexical|remote|remote:URL>, repeatable");
  app.add_option("--generator", o.generator, "template | remote | remote:URL");
  app.add_option("--n-snippets", o.n_snippets, "snippets passed to the generator")->check(CLI::PositiveNumber);
  app.add_option("--ratio", o.ratio, "ensemble confidence ratio");
  app.add_option("--gating", o.gating, "selection gating: detection | gold");
  app.add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "output directory for reports");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"detect", "knowledge-seeking turn detection"},
      {"select", "knowledge snippet selection"},
      {"generate", "response generation"},
      {"pipeline", "detect, select and generate in one run"},
      {"sweep-n", "generation metrics for n = 1..5 snippets"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }
  const auto command = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = build_config(o);
    const auto pipeline = kgd::Pipeline::load(cfg);
    nlohmann::ordered_json report;
    if (command == "detect") report = pipeline.run_detect();
    else if (command == "select") report = pipeline.run_select();
    else if (command == "generate") report = pipeline.run_generate();
    else if (command == "pipeline") report = pipeline.run_pipeline();
    else report = pipeline.run_sweep_n();
    std::cout << kgd::write_report(cfg, command, report).string() << '\n';
    return kOk;
  } catch (const kgd::Error& e) {
    std::cerr << "kgd: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "kgd: internal error: " << e.what() << '\n';
    return kInternal;
  }
}
