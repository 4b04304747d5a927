#ifndef UTTPROBE_SYNTH_HPP
#define UTTPROBE_SYNTH_HPP

// Synthetic noisy dialogues with known ground truth. Clean UD turns are
// corrupted by three injectors, applied in the order restart -> reparandum ->
// discourse so fillers can land inside earlier regions and carry several
// flags at once. Each injector tracks the intended flags of every token; the
// emitted probe dataset is that bookkeeping, never a recomputation.
//
// Placement is uniform over eligible positions. Nothing here models where
// disfluencies occur in real speech.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "uttprobe/align.hpp"
#include "uttprobe/conllu.hpp"
#include "uttprobe/error.hpp"
#include "uttprobe/probe_dataset.hpp"
#include "uttprobe/speech_filter.hpp"
#include "uttprobe/unicode.hpp"

namespace uttprobe::synth {

using Rng = std::mt19937_64;

struct InjectionSpec {
  std::uint64_t seed = 0;
  double discourse_rate = 0.08;   // per eligible gap
  double reparandum_rate = 0.3;   // per clause head
  double restart_rate = 0.15;     // per turn
  std::vector<std::string> filler_inventory{"...", "(yy)", "(...)"};

  void check() const {
    for (double r : {discourse_rate, reparandum_rate, restart_rate})
      if (!(r >= 0.0 && r <= 1.0)) throw ArgumentError("injection rates must lie in [0, 1]");
    if (filler_inventory.empty()) throw ArgumentError("filler inventory must not be empty");
  }
};

struct InjectedToken {
  int position = 0;  // 1-based id in the final tree
  PhenomenonFlags flags;

  bool operator==(const InjectedToken&) const = default;
};

struct InjectionRecord {
  std::vector<InjectedToken> tokens;

  bool operator==(const InjectionRecord&) const = default;
};

/// A turn under construction: the tree plus, per token, the intended flags
/// and whether the token was injected.
struct Injected {
  TurnTree tree;
  std::vector<PhenomenonFlags> truth;
  std::vector<char> injected;

  static Injected from_clean(const TurnTree& clean) {
    return {clean, std::vector<PhenomenonFlags>(clean.size()), std::vector<char>(clean.size(), 0)};
  }

  InjectionRecord record() const {
    InjectionRecord r;
    for (std::size_t i = 0; i < tree.size(); ++i)
      if (injected[i]) r.tokens.push_back({static_cast<int>(i) + 1, truth[i]});
    return r;
  }

  ProbeTurn ground_truth() const {
    ProbeTurn turn;
    for (std::size_t i = 0; i < tree.size(); ++i) turn.push_back(make_probe_token(tree.tokens[i], truth[i]));
    return turn;
  }
};

/// An abandoned clause prefix. heads are 1-based within the fragment, 0 marks
/// the fragment root.
struct RestartFragment {
  std::vector<std::string> forms;
  std::vector<int> heads;
  std::vector<std::string> deprels;
};

inline const std::vector<RestartFragment>& restart_fragments() {
  static const std::vector<RestartFragment> kFragments = {
      {{"To", "niech", "pani"}, {3, 3, 0}, {"advmod:emph", "aux:imp", "root"}},
      {{"Ja", "chciałem"}, {2, 0}, {"nsubj", "root"}},
      {{"Bo"}, {0}, {"root"}},
      {{"To", "teraz", "część"}, {3, 3, 0}, {"advmod:emph", "advmod", "root"}},
      {{"A", "czy"}, {2, 0}, {"cc", "root"}},
      {{"Ja", "nie", "mam", "takiego"}, {3, 3, 0, 3}, {"nsubj", "advmod:neg", "root", "obj"}},
      {{"Chodzi", "o", "to", "żeby"}, {0, 3, 1, 1}, {"root", "case", "obl", "mark"}},
      {{"W", "tym", "momencie", "system", "jeszcze", "nie"}, {3, 3, 0, 3, 6, 3},
       {"case", "det", "root", "nmod", "advmod", "advmod:neg"}},
      {{"Czy", "mogłaby", "pani", "mi", "jeszcze", "raz", "podać"}, {2, 0, 2, 7, 6, 7, 2},
       {"advmod", "root", "nsubj", "iobj", "advmod", "obl", "xcomp"}},
      {{"Bo", "tutaj", "jest", "taka"}, {3, 3, 0, 3}, {"mark", "advmod", "root", "nsubj"}},
  };
  return kFragments;
}

namespace detail {

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline bool bernoulli(Rng& rng, double p) { return p > 0.0 && uniform01(rng) < p; }
inline std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

// Node list with stable keys so insertions never have to patch head ids by hand.
struct Node {
  int key = 0;
  std::string form;
  int head_key = 0;  // 0 = root
  std::string deprel;
  std::optional<bool> space_after;
  PhenomenonFlags truth;
  bool injected = false;
};

struct Workspace {
  std::vector<Node> nodes;  // surface order
  int next_key = 1;
  bool spacing_known = false;
  std::string dialogue_id;
  int turn_index = 0;
  std::optional<std::string> speaker;

  explicit Workspace(const Injected& in) {
    dialogue_id = in.tree.dialogue_id;
    turn_index = in.tree.turn_index;
    speaker = in.tree.speaker;
    for (std::size_t i = 0; i < in.tree.size(); ++i) {
      const auto& t = in.tree.tokens[i];
      nodes.push_back({t.id, t.form, t.head, t.deprel, t.space_after, in.truth[i], in.injected[i] != 0});
      spacing_known |= t.space_after.has_value();
    }
    next_key = static_cast<int>(nodes.size()) + 1;
  }

  std::size_t position_of(int key) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].key == key) return i;
    return nodes.size();
  }

  Node make(std::string form, int head_key, std::string deprel, PhenomenonFlags truth) {
    Node n;
    n.key = next_key++;
    n.form = std::move(form);
    n.head_key = head_key;
    n.deprel = std::move(deprel);
    if (spacing_known) n.space_after = true;
    n.truth = truth;
    n.injected = true;
    return n;
  }

  Injected finish() const {
    Injected out;
    out.tree.dialogue_id = dialogue_id;
    out.tree.turn_index = turn_index;
    out.tree.speaker = speaker;
    std::vector<int> pos_of_key(static_cast<std::size_t>(next_key), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) pos_of_key[static_cast<std::size_t>(nodes[i].key)] = static_cast<int>(i) + 1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      out.tree.tokens.push_back({static_cast<int>(i) + 1, n.form,
                                 n.head_key == 0 ? 0 : pos_of_key[static_cast<std::size_t>(n.head_key)], n.deprel,
                                 n.space_after});
      out.truth.push_back(n.truth);
      out.injected.push_back(n.injected ? 1 : 0);
    }
    return out;
  }
};

inline bool is_filler(const Node& n, const InjectionSpec& spec) {
  return n.deprel == kDiscourse ||
         std::find(spec.filler_inventory.begin(), spec.filler_inventory.end(), n.form) != spec.filler_inventory.end();
}

inline std::string truncate_form(const std::string& form) {
  auto cps = unicode::to_u32(form);
  std::size_t keep = cps.size() <= 1 ? cps.size() : (cps.size() + 1) / 2;
  return unicode::from_u32(std::u32string_view(cps).substr(0, keep)) + "...";
}

}  // namespace detail

/// Prepends an abandoned clause (fragment words + a "..." filler) whose root
/// becomes the turn root; the original root hangs off it via parataxis:restart.
inline Injected inject_restart(const Injected& in, const InjectionSpec& spec, Rng& rng,
                               const RestartFragment* forced = nullptr) {
  const RestartFragment* frag = forced;
  if (!frag) {
    if (!detail::bernoulli(rng, spec.restart_rate)) return in;
    const auto& all = restart_fragments();
    frag = &all[detail::pick(rng, all.size())];
  }
  detail::Workspace ws(in);
  auto root_it = std::find_if(ws.nodes.begin(), ws.nodes.end(), [](const detail::Node& n) { return n.head_key == 0; });
  if (root_it == ws.nodes.end()) return in;

  PhenomenonFlags restart_flag;
  restart_flag.restart = true;
  std::vector<detail::Node> added;
  const int base = ws.next_key;
  int frag_root_key = 0;
  for (std::size_t i = 0; i < frag->forms.size(); ++i) {
    int head = frag->heads[i] == 0 ? 0 : base + frag->heads[i] - 1;
    added.push_back(ws.make(frag->forms[i], head, frag->deprels[i], restart_flag));
    if (frag->heads[i] == 0) frag_root_key = added.back().key;
  }
  if (ws.spacing_known) added.back().space_after = false;
  PhenomenonFlags filler_flag = restart_flag;
  filler_flag.discourse = true;
  added.push_back(ws.make("...", frag_root_key, std::string(kDiscourse), filler_flag));

  root_it->head_key = frag_root_key;
  root_it->deprel = std::string(kRestart);
  ws.nodes.insert(ws.nodes.begin(), added.begin(), added.end());
  return ws.finish();
}

enum class DisfluencyKind { Repetition, Substitution, Reformulation };

inline constexpr bool is_clause_label(std::string_view deprel) {
  return deprel == "root" || deprel == "conj" || deprel == "parataxis" || deprel == "ccomp" || deprel == "advcl" ||
         deprel == "xcomp" || deprel == "acl" || deprel == kRestart;
}

/// Clones a 1-3 token prefix of subtree(t) in front of that subtree. The clone
/// root depends on t via "reparandum". Repetitions are verbatim and followed
/// by a "..." filler; substitutions and reformulations truncate the last
/// cloned form ("sytuacją" -> "sytu...").
inline Injected inject_reparandum(const Injected& in, const InjectionSpec& spec, Rng& rng,
                                  std::optional<DisfluencyKind> forced_kind = std::nullopt,
                                  std::optional<int> forced_target = std::nullopt) {
  Injected cur = in;
  std::vector<int> clause_keys;
  for (const auto& t : in.tree.tokens)
    if (is_clause_label(t.deprel) && !in.injected[static_cast<std::size_t>(t.id - 1)] &&
        !in.truth[static_cast<std::size_t>(t.id - 1)].any())
      clause_keys.push_back(t.id);

  // Original tokens keep their identity through `origin`: position -> id in `in` (0 = injected).
  std::vector<int> origin(in.tree.size());
  for (std::size_t i = 0; i < origin.size(); ++i) origin[i] = in.injected[i] ? 0 : static_cast<int>(i) + 1;
  std::set<int> used_targets;

  std::vector<int> trials = clause_keys;
  if (forced_target) trials = {*forced_target};

  for (int clause_orig : trials) {
    if (!forced_target && !detail::bernoulli(rng, spec.reparandum_rate)) continue;
    const TurnTree& tree = cur.tree;
    auto pos_of_orig = [&](int orig) {
      for (std::size_t i = 0; i < origin.size(); ++i)
        if (origin[i] == orig) return static_cast<int>(i) + 1;
      return 0;
    };
    const int clause_id = pos_of_orig(clause_orig);
    if (clause_id == 0) continue;

    auto clean_original = [&](int id) {
      auto i = static_cast<std::size_t>(id - 1);
      return origin[i] != 0 && !cur.truth[i].any();
    };

    std::vector<int> candidates;
    for (int t : forced_target ? std::vector<int>{clause_id} : subtree(tree, clause_id)) {
      if (!clean_original(t) || tree.at(t).deprel == "punct" || used_targets.count(origin[static_cast<std::size_t>(t - 1)]))
        continue;
      auto sub = subtree(tree, t);
      bool ok = std::all_of(sub.begin(), sub.end(), clean_original) &&
                sub.back() - sub.front() + 1 == static_cast<int>(sub.size()) &&
                tree.at(sub.front()).deprel != "punct";
      if (ok) candidates.push_back(t);
    }
    if (candidates.empty()) continue;
    const int target = candidates[detail::pick(rng, candidates.size())];
    auto span = subtree(tree, target);

    std::size_t usable = 0;
    while (usable < span.size() && usable < 3 && tree.at(span[usable]).deprel != "punct") ++usable;
    const std::size_t k = 1 + detail::pick(rng, usable);
    std::vector<int> prefix(span.begin(), span.begin() + static_cast<std::ptrdiff_t>(k));

    DisfluencyKind kind = forced_kind ? *forced_kind : static_cast<DisfluencyKind>(detail::pick(rng, 3));

    // Clone root: the prefix token nearest to the target.
    auto depth = [&](int id) {
      int d = 0;
      while (id != target && id != 0) {
        id = tree.at(id).head;
        ++d;
      }
      return d;
    };
    int clone_root_orig = *std::min_element(prefix.begin(), prefix.end(),
                                            [&](int a, int b) { return depth(a) < depth(b); });

    detail::Workspace ws(cur);  // keys of a fresh workspace are the current ids
    PhenomenonFlags rep;
    rep.reparandum = true;
    std::vector<detail::Node> clone;
    const int base = ws.next_key;
    auto key_of_prefix = [&](int id) -> int {
      for (std::size_t i = 0; i < prefix.size(); ++i)
        if (prefix[i] == id) return base + static_cast<int>(i);
      return 0;
    };
    for (int p : prefix) {
      const auto& src = tree.at(p);
      int head_key;
      std::string deprel = src.deprel;
      if (p == clone_root_orig) {
        head_key = target;
        deprel = std::string(kReparandum);
      } else if (int hk = key_of_prefix(src.head)) {
        head_key = hk;
      } else {
        head_key = base + static_cast<int>(std::find(prefix.begin(), prefix.end(), clone_root_orig) - prefix.begin());
      }
      clone.push_back(ws.make(src.form, head_key, deprel, rep));
    }
    if (kind == DisfluencyKind::Repetition) {
      if (ws.spacing_known) clone.back().space_after = false;
      PhenomenonFlags filler = rep;
      filler.discourse = true;
      int root_key = base + static_cast<int>(std::find(prefix.begin(), prefix.end(), clone_root_orig) - prefix.begin());
      clone.push_back(ws.make("...", root_key, std::string(kDiscourse), filler));
    } else {
      clone.back().form = detail::truncate_form(clone.back().form);
    }

    const auto insert_at = static_cast<std::ptrdiff_t>(span.front() - 1);
    ws.nodes.insert(ws.nodes.begin() + insert_at, clone.begin(), clone.end());
    origin.insert(origin.begin() + insert_at, clone.size(), 0);
    used_targets.insert(origin[static_cast<std::size_t>(insert_at) + clone.size() +
                               static_cast<std::size_t>(target - span.front())]);
    cur = ws.finish();
  }
  return cur;
}

/// Inserts fillers into eligible gaps. A filler depends via "discourse" on the
/// nearest following content token, or on the root at the end of the turn.
inline Injected inject_discourse(const Injected& in, const InjectionSpec& spec, Rng& rng) {
  detail::Workspace ws(in);
  const auto& nodes = ws.nodes;
  const std::size_t n = nodes.size();

  auto eligible = [&](std::size_t g) {
    if (g > 0 && detail::is_filler(nodes[g - 1], spec)) return false;
    if (g < n && (detail::is_filler(nodes[g], spec) || nodes[g].deprel == "punct")) return false;
    return true;
  };

  std::vector<std::size_t> gaps;
  for (std::size_t g = 0; g <= n; ++g)
    if (eligible(g) && detail::bernoulli(rng, spec.discourse_rate)) gaps.push_back(g);
  if (gaps.empty()) return in;

  int root_key = 0;
  for (const auto& nd : nodes)
    if (nd.head_key == 0) root_key = nd.key;

  std::vector<std::pair<std::size_t, detail::Node>> inserts;
  for (std::size_t g : gaps) {
    const detail::Node* head = nullptr;
    for (std::size_t i = g; i < n && !head; ++i)
      if (!detail::is_filler(nodes[i], spec) && nodes[i].deprel != "punct") head = &nodes[i];
    int head_key = head ? head->key : root_key;
    const PhenomenonFlags& ht = head ? head->truth : nodes[ws.position_of(root_key)].truth;
    PhenomenonFlags f;
    f.discourse = true;
    f.reparandum = ht.reparandum;
    f.restart = ht.restart;
    const auto& form = spec.filler_inventory[detail::pick(rng, spec.filler_inventory.size())];
    inserts.emplace_back(g, ws.make(form, head_key, std::string(kDiscourse), f));
  }
  for (auto it = inserts.rbegin(); it != inserts.rend(); ++it)
    ws.nodes.insert(ws.nodes.begin() + static_cast<std::ptrdiff_t>(it->first), it->second);
  return ws.finish();
}

inline Injected inject_discourse(const TurnTree& t, const InjectionSpec& s, Rng& r) {
  return inject_discourse(Injected::from_clean(t), s, r);
}
inline Injected inject_reparandum(const TurnTree& t, const InjectionSpec& s, Rng& r) {
  return inject_reparandum(Injected::from_clean(t), s, r);
}
inline Injected inject_restart(const TurnTree& t, const InjectionSpec& s, Rng& r,
                               const RestartFragment* forced = nullptr) {
  return inject_restart(Injected::from_clean(t), s, r, forced);
}

/// True when the clean utterance aligns onto the noisy turn exactly at the
/// status-true tokens, i.e. a perfect extraction scores perfectly.
inline bool aligns_unambiguously(const Injected& x) {
  std::vector<std::string> forms;
  std::vector<SurfaceToken> clean;
  for (std::size_t i = 0; i < x.tree.size(); ++i) {
    forms.push_back(x.tree.tokens[i].form);
    if (!x.truth[i].any()) clean.push_back(x.tree.tokens[i]);
  }
  auto ta = align_turn(forms, detokenize(clean));
  for (std::size_t i = 0; i < forms.size(); ++i)
    if (ta.kept[i] != !x.truth[i].any()) return false;
  return ta.pieces.oov.empty();
}

/// Clean-turn grammar over a made-up lexicon, for volume beyond the templates.
inline TurnTree grammar_turn(Rng& rng) {
  static const std::vector<std::string> nouns{"malo", "keti", "suran", "bodi", "lemik", "tarus", "vena", "poli",
                                              "rendu", "sakim"};
  static const std::vector<std::string> verbs{"dakto", "semir", "lunat", "feru", "mavis", "korel"};
  static const std::vector<std::string> adjs{"rona", "tive", "glasi", "upen"};
  static const std::vector<std::string> cases{"na", "ko", "wu"};
  static const std::vector<std::string> dets{"ta", "li"};
  static const std::vector<std::string> ccs{"e", "o"};
  auto any = [&](const std::vector<std::string>& v) { return v[detail::pick(rng, v.size())]; };

  TurnTree t;
  auto add = [&](std::string form, int head, std::string deprel) {
    t.tokens.push_back({static_cast<int>(t.tokens.size()) + 1, std::move(form), head, std::move(deprel), std::nullopt});
    return static_cast<int>(t.tokens.size());
  };
  // Heads are patched once the verb position is known.
  auto clause = [&](int verb_head, const std::string& verb_rel, bool with_cc) {
    std::vector<int> to_verb;
    if (with_cc) to_verb.push_back(add(any(ccs), -1, "cc"));
    if (detail::bernoulli(rng, 0.4)) {
      int det = add(any(dets), -2, "det");
      int subj = add(any(nouns), -1, "nsubj");
      t.tokens[static_cast<std::size_t>(det - 1)].head = subj;
      to_verb.push_back(subj);
    } else {
      to_verb.push_back(add(any(nouns), -1, "nsubj"));
    }
    int verb = add(any(verbs), verb_head, verb_rel);
    for (int id : to_verb) t.tokens[static_cast<std::size_t>(id - 1)].head = verb;
    if (detail::bernoulli(rng, 0.8)) {
      int obj = add(any(nouns), verb, "obj");
      if (detail::bernoulli(rng, 0.4)) add(any(adjs), obj, "amod");
    }
    if (detail::bernoulli(rng, 0.5)) {
      int cs = add(any(cases), -1, "case");
      int obl = add(any(nouns), verb, "obl");
      t.tokens[static_cast<std::size_t>(cs - 1)].head = obl;
    }
    return verb;
  };
  int root = clause(0, "root", false);
  if (detail::bernoulli(rng, 0.35)) clause(root, "conj", true);
  add(".", root, "punct");
  return t;
}

struct CorpusPlan {
  int dialogues = 10;
  int turns_per_dialogue = 10;
  double grammar_share = 0.5;  // probability a turn comes from the grammar rather than a template
  std::optional<int> total_turns;  // stop early once this many turns exist
};

struct SynthCorpus {
  std::vector<Dialogue> noisy;
  std::vector<Dialogue> clean;
  ProbeDataset truth;
  std::vector<InjectionRecord> records;  // per turn, corpus order
};

inline Injected inject_all(const TurnTree& clean, const InjectionSpec& spec, Rng& rng) {
  constexpr int kAttempts = 16;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Injected x = Injected::from_clean(clean);
    x = inject_restart(x, spec, rng);
    x = inject_reparandum(x, spec, rng);
    x = inject_discourse(x, spec, rng);
    if (aligns_unambiguously(x)) return x;
  }
  return Injected::from_clean(clean);
}

inline SynthCorpus generate_corpus(const std::vector<TurnTree>& templates, const InjectionSpec& spec,
                                   const CorpusPlan& plan = {}) {
  spec.check();
  if (plan.dialogues < 0 || plan.turns_per_dialogue < 0 || plan.total_turns.value_or(0) < 0)
    throw ArgumentError("corpus plan sizes must be >= 0");
  Rng rng(spec.seed);
  SynthCorpus out;
  int produced = 0;
  const int budget = plan.total_turns.value_or(plan.dialogues * plan.turns_per_dialogue);
  for (int d = 0; d < plan.dialogues && produced < budget; ++d) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%03d", d + 1);
    Dialogue noisy{id, {}}, clean{id, {}};
    ProbeDialogue truth{id, {}};
    for (int k = 0; k < plan.turns_per_dialogue && produced < budget; ++k, ++produced) {
      TurnTree base = templates.empty() || detail::bernoulli(rng, plan.grammar_share)
                          ? grammar_turn(rng)
                          : templates[detail::pick(rng, templates.size())];
      base.dialogue_id = id;
      base.turn_index = k;
      base.speaker = k % 2 == 0 ? "A" : "B";
      Injected x = inject_all(base, spec, rng);
      clean.turns.push_back(base);
      noisy.turns.push_back(x.tree);
      truth.turns.push_back(x.ground_truth());
      out.records.push_back(x.record());
    }
    out.noisy.push_back(std::move(noisy));
    out.clean.push_back(std::move(clean));
    out.truth.dialogues.push_back(std::move(truth));
  }
  return out;
}

}  // namespace uttprobe::synth

#endif  // UTTPROBE_SYNTH_HPP
