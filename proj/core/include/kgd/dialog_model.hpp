// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgd/kb_store.hpp"

namespace kgd {

/// The most recent `w` turns of a dialog ending at user turn `t`.
struct ContextWindow {
  std::vector<DialogTurn> turns;
  std::size_t t = 0;  // index of the current user turn in the source dialog
  std::size_t w = 0;

  bool empty() const noexcept { return turns.empty(); }
  std::size_t size() const noexcept { return turns.size(); }
  const DialogTurn& current() const { return turns.back(); }
};

/// Throws std::out_of_range if `t` is past the end and std::invalid_argument
/// if turn `t` is not a user turn or `w` is zero.
ContextWindow context_window(std::span<const DialogTurn> dialog, std::size_t t, std::size_t w);

struct PremiseSpec {
  std::size_t n_dialog = 2;  // trailing turns rendered into the premise
  bool use_template = true;  // "Assistant says ..." / "User says ..."
};

/// With the template each turn becomes "<Speaker> says <text>" and turns are
/// joined by ". "; without it the raw texts are joined by a single space.
/// Windows shorter than n_dialog render every turn they have.
std::string render_premise(const ContextWindow& window, const PremiseSpec& spec);

/// Raw text of the whole window, turns joined by a space.
std::string window_text(const ContextWindow& window);

/// "The user is asking about <domain>."
std::string render_domain_hypothesis(std::string_view domain);

}  // namespace kgd
