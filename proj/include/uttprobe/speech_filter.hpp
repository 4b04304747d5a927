#ifndef UTTPROBE_SPEECH_FILTER_HPP
#define UTTPROBE_SPEECH_FILTER_HPP

// Speech-phenomenon regions of a turn tree and the well-structured utterance
// that remains once they are filtered out.
//
//   discourse  = union of subtree(t) over tokens labelled exactly "discourse"
//   reparandum = union of subtree(t) over tokens labelled "reparandum"
//   restart    = for each edge h -> r labelled "parataxis:restart":
//                subtree(h) minus every parataxis:restart subtree strictly
//                below h; unioned over all such edges
//
// Subtyped labels such as "discourse:interj" are content, not noise.

#include <string>
#include <string_view>
#include <vector>

#include "uttprobe/conllu.hpp"

namespace uttprobe {

inline constexpr std::string_view kDiscourse = "discourse";
inline constexpr std::string_view kReparandum = "reparandum";
inline constexpr std::string_view kRestart = "parataxis:restart";

struct PhenomenonFlags {
  bool discourse = false;
  bool reparandum = false;
  bool restart = false;

  bool any() const { return discourse || reparandum || restart; }
  int count() const { return int(discourse) + int(reparandum) + int(restart); }

  PhenomenonFlags& operator|=(const PhenomenonFlags& o) {
    discourse |= o.discourse;
    reparandum |= o.reparandum;
    restart |= o.restart;
    return *this;
  }
  bool operator==(const PhenomenonFlags&) const = default;
};

struct TokenStatus {
  bool status = true;  // true = part of the well-structured utterance
  PhenomenonFlags flags;

  bool operator==(const TokenStatus&) const = default;
};

inline std::vector<PhenomenonFlags> phenomenon_flags(const TurnTree& tree) {
  const std::size_t n = tree.size();
  std::vector<PhenomenonFlags> flags(n);
  auto kids = detail::children_of(tree);

  // Marks subtree(id) into `mark`, skipping the subtrees rooted at tokens for
  // which `stop` returns true (the root itself is never skipped).
  auto mark_subtree = [&](int id, auto&& stop, auto&& mark) {
    std::vector<int> stack{id};
    std::vector<char> seen(n + 1, 0);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      if (seen[static_cast<std::size_t>(v)]) continue;
      seen[static_cast<std::size_t>(v)] = 1;
      if (v != id && stop(v)) continue;
      mark(flags[static_cast<std::size_t>(v - 1)]);
      for (int c : kids[static_cast<std::size_t>(v)]) stack.push_back(c);
    }
  };
  auto never = [](int) { return false; };

  for (const auto& t : tree.tokens) {
    if (t.deprel == kDiscourse) mark_subtree(t.id, never, [](PhenomenonFlags& f) { f.discourse = true; });
    if (t.deprel == kReparandum) mark_subtree(t.id, never, [](PhenomenonFlags& f) { f.reparandum = true; });
    if (t.deprel == kRestart && t.head > 0) {
      auto is_restart = [&](int v) { return tree.at(v).deprel == kRestart; };
      mark_subtree(t.head, is_restart, [](PhenomenonFlags& f) { f.restart = true; });
    }
  }
  return flags;
}

inline std::vector<TokenStatus> token_status(const TurnTree& tree) {
  auto flags = phenomenon_flags(tree);
  std::vector<TokenStatus> out;
  out.reserve(flags.size());
  for (const auto& f : flags) out.push_back({!f.any(), f});
  return out;
}

/// Status-true tokens in surface order.
inline std::vector<SurfaceToken> extract_clean(const TurnTree& tree) {
  auto status = token_status(tree);
  std::vector<SurfaceToken> out;
  for (std::size_t i = 0; i < tree.size(); ++i)
    if (status[i].status) out.push_back(tree.tokens[i]);
  return out;
}

inline std::string clean_text(const TurnTree& tree) { return detokenize(extract_clean(tree)); }

/// The full noisy turn as running text.
inline std::string turn_text(const TurnTree& tree) { return detokenize(tree.tokens); }

}  // namespace uttprobe

#endif  // UTTPROBE_SPEECH_FILTER_HPP
