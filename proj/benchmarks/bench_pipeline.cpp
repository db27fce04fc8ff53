// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <filesystem>

#include "kgd/pipeline.hpp"

namespace {

void BM_MiniPipeline(benchmark::State& state) {
  auto cfg = kgd::load_config(std::filesystem::path(KGD_MINI_DATA_DIR) / "config.json");
  cfg.workers = static_cast<std::size_t>(state.range(0));
  const auto p = kgd::Pipeline::load(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(p.run_pipeline());
}
BENCHMARK(BM_MiniPipeline)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
