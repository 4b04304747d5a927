#ifndef UTTPROBE_CONLLU_HPP
#define UTTPROBE_CONLLU_HPP

// CoNLL-U dialogue treebanks: one sentence block per turn, keyed by
// `# sent_id = <dialogue_id>-<turn_index>`. Only the columns the toolkit uses
// (ID, FORM, HEAD, DEPREL, MISC:SpaceAfter) are kept.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uttprobe/error.hpp"

namespace uttprobe {

struct SurfaceToken {
  int id = 0;
  std::string form;
  int head = 0;
  std::string deprel;
  // nullopt when the source carried no spacing information for this token.
  std::optional<bool> space_after;

  bool operator==(const SurfaceToken&) const = default;
};

struct TurnTree {
  std::string dialogue_id;
  int turn_index = 0;
  std::optional<std::string> speaker;
  std::vector<SurfaceToken> tokens;

  std::size_t size() const { return tokens.size(); }
  const SurfaceToken& at(int id) const { return tokens.at(static_cast<std::size_t>(id - 1)); }

  bool operator==(const TurnTree&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<TurnTree> turns;

  bool operator==(const Dialogue&) const = default;
};

struct Diagnostic {
  int token_id = 0;
  std::string rule;
  std::string message;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::optional<int> to_int(std::string_view s) {
  int value = 0;
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::vector<int>> children_of(const TurnTree& tree) {
  const int n = static_cast<int>(tree.size());
  std::vector<std::vector<int>> kids(static_cast<std::size_t>(n + 1));
  for (const auto& t : tree.tokens)
    if (t.head >= 0 && t.head <= n && t.head != t.id) kids[static_cast<std::size_t>(t.head)].push_back(t.id);
  return kids;
}

}  // namespace detail

/// Structural diagnostics for a turn tree. Empty iff every tree invariant holds.
inline std::vector<Diagnostic> validate(const TurnTree& tree) {
  std::vector<Diagnostic> out;
  const int n = static_cast<int>(tree.size());

  bool ids_ok = true;
  for (int i = 0; i < n; ++i) {
    if (tree.tokens[static_cast<std::size_t>(i)].id != i + 1) {
      out.push_back({tree.tokens[static_cast<std::size_t>(i)].id, "non-contiguous id",
                     "expected id " + std::to_string(i + 1)});
      ids_ok = false;
    }
  }
  if (!ids_ok) return out;

  std::vector<int> roots;
  bool heads_ok = true;
  for (const auto& t : tree.tokens) {
    if (t.head < 0 || t.head > n) {
      out.push_back({t.id, "head out of range", "head " + std::to_string(t.head)});
      heads_ok = false;
    } else if (t.head == t.id) {
      out.push_back({t.id, "self head", "token heads itself"});
      heads_ok = false;
    } else if (t.head == 0) {
      roots.push_back(t.id);
    }
  }
  if (roots.empty())
    out.push_back({0, "no root", "no token has head 0"});
  else if (roots.size() > 1)
    out.push_back({roots[1], "multiple roots", std::to_string(roots.size()) + " tokens have head 0"});
  if (!heads_ok) return out;

  // Cycles: walk every head chain; a chain that revisits a node on the
  // current walk closes a cycle. Each cycle is reported once, by its smallest id.
  std::vector<int> state(static_cast<std::size_t>(n + 1), 0);  // 0 new, 1 on walk, 2 done
  std::vector<char> on_cycle(static_cast<std::size_t>(n + 1), 0);
  for (int start = 1; start <= n; ++start) {
    std::vector<int> walk;
    int cur = start;
    while (cur != 0 && state[static_cast<std::size_t>(cur)] == 0) {
      state[static_cast<std::size_t>(cur)] = 1;
      walk.push_back(cur);
      cur = tree.at(cur).head;
    }
    if (cur != 0 && state[static_cast<std::size_t>(cur)] == 1) {
      auto it = std::find(walk.begin(), walk.end(), cur);
      std::vector<int> cycle(it, walk.end());
      for (int c : cycle) on_cycle[static_cast<std::size_t>(c)] = 1;
      int first = *std::min_element(cycle.begin(), cycle.end());
      out.push_back({first, "cycle", "head relation cycles through " + std::to_string(cycle.size()) + " tokens"});
    }
    for (int w : walk) state[static_cast<std::size_t>(w)] = 2;
  }

  if (roots.size() == 1) {
    auto kids = detail::children_of(tree);
    std::vector<char> seen(static_cast<std::size_t>(n + 1), 0);
    std::vector<int> stack{roots[0]};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      if (seen[static_cast<std::size_t>(v)]) continue;
      seen[static_cast<std::size_t>(v)] = 1;
      for (int c : kids[static_cast<std::size_t>(v)]) stack.push_back(c);
    }
    for (int i = 1; i <= n; ++i)
      if (!seen[static_cast<std::size_t>(i)] && !on_cycle[static_cast<std::size_t>(i)])
        out.push_back({i, "unreachable", "token not reachable from the root"});
  }
  return out;
}

/// The token itself plus all of its transitive dependents, in ascending id order.
inline std::vector<int> subtree(const TurnTree& tree, int token_id) {
  const int n = static_cast<int>(tree.size());
  if (token_id < 1 || token_id > n)
    throw ArgumentError("subtree: token id " + std::to_string(token_id) + " outside [1, " + std::to_string(n) + "]");
  auto kids = detail::children_of(tree);
  std::vector<char> seen(static_cast<std::size_t>(n + 1), 0);
  std::vector<int> stack{token_id};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(v)]) continue;
    seen[static_cast<std::size_t>(v)] = 1;
    for (int c : kids[static_cast<std::size_t>(v)]) stack.push_back(c);
  }
  std::vector<int> out;
  for (int i = 1; i <= n; ++i)
    if (seen[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

inline int root_of(const TurnTree& tree) {
  for (const auto& t : tree.tokens)
    if (t.head == 0) return t.id;
  return 0;
}

inline std::string sent_id(const TurnTree& tree) {
  return tree.dialogue_id + "-" + std::to_string(tree.turn_index);
}

/// Parse a CoNLL-U document into dialogues. Multiword-token ranges and empty
/// nodes are skipped; a note is appended to `warnings` when given.
inline std::vector<Dialogue> parse_conllu(std::string_view text,
                                          std::vector<std::string>* warnings = nullptr) {
  struct Block {
    std::size_t first_line = 0;
    std::optional<std::string> sent_id;
    std::optional<std::string> speaker;
    bool has_text = false;
    std::vector<SurfaceToken> tokens;
    std::vector<std::size_t> lines;
  };

  std::vector<Block> blocks;
  Block cur;
  bool open = false;

  auto close_block = [&]() {
    if (open && !cur.tokens.empty()) blocks.push_back(std::move(cur));
    cur = Block{};
    open = false;
  };

  auto lines = detail::split(text, '\n');
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::size_t lineno = li + 1;
    std::string_view line = lines[li];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::strip(line).empty()) {
      close_block();
      continue;
    }
    if (!open) {
      open = true;
      cur.first_line = lineno;
    }
    if (line.front() == '#') {
      std::string_view body = detail::strip(line.substr(1));
      auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      std::string_view key = detail::strip(body.substr(0, eq));
      std::string_view value = detail::strip(body.substr(eq + 1));
      if (key == "sent_id") cur.sent_id = std::string(value);
      else if (key == "speaker") cur.speaker = std::string(value);
      else if (key == "text") cur.has_text = true;
      continue;
    }

    auto cols = detail::split(line, '\t');
    if (cols.size() != 10)
      throw ParseError(lineno, "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) {
      if (warnings)
        warnings->push_back("line " + std::to_string(lineno) + ": skipped multiword token or empty node '" +
                            std::string(cols[0]) + "'");
      continue;
    }
    auto id = detail::to_int(cols[0]);
    if (!id) throw ParseError(lineno, "non-integer id '" + std::string(cols[0]) + "'");
    auto head = detail::to_int(cols[6]);
    if (!head) throw ParseError(lineno, "non-integer head '" + std::string(cols[6]) + "'");

    SurfaceToken tok;
    tok.id = *id;
    tok.form = std::string(cols[1]);
    tok.head = *head;
    tok.deprel = std::string(cols[7]);
    for (auto item : detail::split(cols[9], '|')) {
      if (item == "SpaceAfter=No") tok.space_after = false;
      else if (item == "SpaceAfter=Yes") tok.space_after = true;
    }
    cur.tokens.push_back(std::move(tok));
    cur.lines.push_back(lineno);
  }
  close_block();

  std::vector<Dialogue> dialogues;
  std::unordered_map<std::string, std::size_t> index;
  std::map<std::pair<std::size_t, int>, std::size_t> seen_turns;  // (dialogue, turn) -> line

  for (auto& b : blocks) {
    if (!b.sent_id) throw ParseError(b.first_line, "sentence block without '# sent_id'");
    auto dash = b.sent_id->rfind('-');
    std::optional<int> turn_index;
    if (dash != std::string::npos && dash > 0) turn_index = detail::to_int(std::string_view(*b.sent_id).substr(dash + 1));
    if (!turn_index || *turn_index < 0)
      throw ParseError(b.first_line, "sent_id '" + *b.sent_id + "' does not match <dialogue_id>-<turn_index>");

    TurnTree tree;
    tree.dialogue_id = b.sent_id->substr(0, dash);
    tree.turn_index = *turn_index;
    tree.speaker = b.speaker;
    tree.tokens = std::move(b.tokens);

    const bool spacing_known =
        b.has_text || std::any_of(tree.tokens.begin(), tree.tokens.end(),
                                  [](const SurfaceToken& t) { return t.space_after.has_value(); });
    for (auto& t : tree.tokens)
      if (spacing_known && !t.space_after) t.space_after = true;

    const int n = static_cast<int>(tree.size());
    for (std::size_t i = 0; i < tree.tokens.size(); ++i) {
      const auto& t = tree.tokens[i];
      if (t.id != static_cast<int>(i) + 1)
        throw ParseError(b.lines[i], "token ids must be contiguous from 1 (found " + std::to_string(t.id) + ")");
      if (t.head < 0 || t.head > n)
        throw ParseError(b.lines[i], "head out of range (" + std::to_string(t.head) + " not in [0, " +
                                         std::to_string(n) + "])");
      if (t.head == t.id) throw ParseError(b.lines[i], "token heads itself");
    }
    auto diags = validate(tree);
    if (!diags.empty()) {
      const auto& d = diags.front();
      std::size_t where = d.token_id >= 1 && d.token_id <= n ? b.lines[static_cast<std::size_t>(d.token_id - 1)]
                                                             : b.first_line;
      throw ParseError(where, d.rule + " in turn " + sent_id(tree) + ": " + d.message);
    }

    auto [it, inserted] = index.try_emplace(tree.dialogue_id, dialogues.size());
    if (inserted) dialogues.push_back(Dialogue{tree.dialogue_id, {}});
    auto key = std::make_pair(it->second, tree.turn_index);
    if (seen_turns.count(key))
      throw ParseError(b.first_line, "duplicate turn index " + std::to_string(tree.turn_index) +
                                         " in dialogue '" + tree.dialogue_id + "'");
    seen_turns[key] = b.first_line;
    dialogues[it->second].turns.push_back(std::move(tree));
  }

  for (auto& d : dialogues) {
    std::sort(d.turns.begin(), d.turns.end(),
              [](const TurnTree& a, const TurnTree& b) { return a.turn_index < b.turn_index; });
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
      if (d.turns[i].turn_index != static_cast<int>(i)) {
        auto line = seen_turns[{index[d.id], d.turns[i].turn_index}];
        throw ParseError(line, "turn indices of dialogue '" + d.id + "' are not contiguous from 0 (missing " +
                                   std::to_string(i) + ")");
      }
    }
  }
  return dialogues;
}

namespace detail {

inline bool no_space_before(std::string_view form) {
  return form == "," || form == "." || form == "?" || form == "!" || form == "..." || form == ":" ||
         form == ")" || form == "]" || form == "}";
}

inline bool no_space_after(std::string_view form) { return form == "(" || form == "[" || form == "{"; }

}  // namespace detail

/// Join token forms into running text. A token's explicit SpaceAfter decides
/// the gap that follows it; tokens without spacing metadata fall back to the
/// punctuation rule (no space before , . ? ! ... : or closing brackets, none
/// after opening brackets).
inline std::string detokenize(const std::vector<SurfaceToken>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) {
      const auto& prev = tokens[i - 1];
      bool space = prev.space_after
                       ? *prev.space_after
                       : !(detail::no_space_before(tokens[i].form) || detail::no_space_after(prev.form));
      if (space) out += ' ';
    }
    out += tokens[i].form;
  }
  return out;
}

/// Inverse of parse_conllu for the columns the toolkit keeps.
inline std::string serialize_conllu(const std::vector<Dialogue>& dialogues) {
  std::ostringstream out;
  for (const auto& d : dialogues) {
    for (const auto& turn : d.turns) {
      out << "# sent_id = " << sent_id(turn) << '\n';
      if (turn.speaker) out << "# speaker = " << *turn.speaker << '\n';
      const bool spacing_known = std::any_of(turn.tokens.begin(), turn.tokens.end(),
                                             [](const SurfaceToken& t) { return t.space_after.has_value(); });
      if (spacing_known) out << "# text = " << detokenize(turn.tokens) << '\n';
      for (const auto& t : turn.tokens) {
        out << t.id << '\t' << t.form << "\t_\t_\t_\t_\t" << t.head << '\t' << t.deprel << "\t_\t"
            << (t.space_after == false ? "SpaceAfter=No" : "_") << '\n';
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace uttprobe

#endif  // UTTPROBE_CONLLU_HPP
