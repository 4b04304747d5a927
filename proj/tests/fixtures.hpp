#ifndef UTTPROBE_TESTS_FIXTURES_HPP
#define UTTPROBE_TESTS_FIXTURES_HPP

// Synthetic corpora built on top of the injectors, for end-to-end runs.

#include <string>
#include <vector>

#include "uttprobe/synth.hpp"

namespace testing_support {

/// Drops the restart filler so the abandoned fragment carries the restart flag alone.
inline uttprobe::synth::Injected without_restart_filler(const uttprobe::synth::Injected& x) {
  using uttprobe::synth::Injected;
  Injected out;
  out.tree.dialogue_id = x.tree.dialogue_id;
  out.tree.turn_index = x.tree.turn_index;
  out.tree.speaker = x.tree.speaker;
  std::vector<int> remap(x.tree.size() + 1, 0);
  int next = 1;
  for (std::size_t i = 0; i < x.tree.size(); ++i) {
    const auto& f = x.truth[i];
    if (f.restart && f.discourse) continue;
    remap[i + 1] = next++;
  }
  for (std::size_t i = 0; i < x.tree.size(); ++i) {
    if (!remap[i + 1]) {
      if (i > 0 && remap[i]) out.tree.tokens.back().space_after = x.tree.tokens[i].space_after;
      continue;
    }
    auto tok = x.tree.tokens[i];
    tok.id = remap[i + 1];
    tok.head = tok.head == 0 ? 0 : remap[static_cast<std::size_t>(tok.head)];
    out.tree.tokens.push_back(tok);
    out.truth.push_back(x.truth[i]);
    out.injected.push_back(x.injected[i]);
  }
  return out;
}

inline bool single_flagged(const uttprobe::synth::Injected& x) {
  for (const auto& f : x.truth)
    if (int(f.discourse) + int(f.reparandum) + int(f.restart) > 1) return false;
  return true;
}

/// Turns cycle through discourse-only, reparandum-only and restart-only
/// corruption, so no token carries two flags. Fillers are "(yy)" only, so they
/// can never be confused with the "..." of a truncated form.
inline std::vector<uttprobe::Dialogue> overlap_free_corpus(std::uint64_t seed, int turns, int per_dialogue = 10) {
  using namespace uttprobe::synth;
  Rng rng(seed);
  InjectionSpec discourse;
  discourse.discourse_rate = 0.25;
  discourse.reparandum_rate = discourse.restart_rate = 0.0;
  discourse.filler_inventory = {"(yy)"};
  InjectionSpec reparandum = discourse;
  reparandum.discourse_rate = 0.0;
  reparandum.reparandum_rate = 1.0;
  InjectionSpec restart = discourse;
  restart.discourse_rate = 0.0;
  restart.restart_rate = 1.0;

  std::vector<uttprobe::Dialogue> out;
  for (int k = 0; k < turns; ++k) {
    if (k % per_dialogue == 0) out.push_back({"free_" + std::to_string(k / per_dialogue), {}});
    for (;;) {
      auto base = grammar_turn(rng);
      base.dialogue_id = out.back().id;
      base.turn_index = static_cast<int>(out.back().turns.size());
      Injected x;
      switch (k % 3) {
        case 0: x = inject_discourse(base, discourse, rng); break;
        case 1: x = inject_reparandum(Injected::from_clean(base), reparandum, rng, DisfluencyKind::Substitution); break;
        default: x = without_restart_filler(inject_restart(base, restart, rng)); break;
      }
      if (x.record().tokens.empty()) continue;
      if (!single_flagged(x) || !aligns_unambiguously(x)) continue;
      if (uttprobe::build_turn(x.tree) != x.ground_truth()) continue;
      out.back().turns.push_back(x.tree);
      break;
    }
  }
  return out;
}

}  // namespace testing_support

#endif  // UTTPROBE_TESTS_FIXTURES_HPP
