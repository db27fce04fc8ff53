// Copyright 2026 The kgd Authors
// SPDX-License-Identifier: Apache-2.0

#include "kgd/dialog_model.hpp"

#include <algorithm>
#include <stdexcept>

namespace kgd {

ContextWindow context_window(std::span<const DialogTurn> dialog, std::size_t t, std::size_t w) {
  if (w == 0) throw std::invalid_argument("context window size must be at least 1");
  if (t >= dialog.size())
    throw std::out_of_range("turn " + std::to_string(t) + " out of range for a dialog of " +
                            std::to_string(dialog.size()) + " turns");
  if (dialog[t].speaker != Speaker::User) throw std::invalid_argument("turn " + std::to_string(t) + " is not a user turn");

  const std::size_t count = std::min(w, t + 1);
  ContextWindow window;
  window.t = t;
  window.w = w;
  window.turns.assign(dialog.begin() + static_cast<std::ptrdiff_t>(t + 1 - count),
                      dialog.begin() + static_cast<std::ptrdiff_t>(t + 1));
  return window;
}

std::string render_premise(const ContextWindow& window, const PremiseSpec& spec) {
  if (window.empty()) throw std::invalid_argument("cannot render a premise from an empty window");
  if (spec.n_dialog == 0) throw std::invalid_argument("n_dialog must be at least 1");

  const std::size_t count = std::min(spec.n_dialog, window.size());
  std::string out;
  for (std::size_t i = window.size() - count; i < window.size(); ++i) {
    const auto& turn = window.turns[i];
    if (!out.empty()) out += spec.use_template ? ". " : " ";
    if (spec.use_template) {
      out += speaker_name(turn.speaker);
      out += " says ";
    }
    out += turn.text;
  }
  return out;
}

std::string window_text(const ContextWindow& window) {
  std::string out;
  for (const auto& turn : window.turns) {
    if (!out.empty()) out += ' ';
    out += turn.text;
  }
  return out;
}

std::string render_domain_hypothesis(std::string_view domain) {
  if (domain.empty()) throw std::invalid_argument("domain name must not be empty");
  return "The user is asking about " + std::string(domain) + ".";
}

}  // namespace kgd
