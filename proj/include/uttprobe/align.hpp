#ifndef UTTPROBE_ALIGN_HPP
#define UTTPROBE_ALIGN_HPP

// Order-preserving alignment of a free-text hypothesis onto the tokens of the
// input turn.
//
// Phase 1 is a longest common subsequence under case-folded equality. When
// several LCS embeddings exist the one using the latest input positions wins:
// disfluent material precedes its repair ("to... to ja", "Dzień... dzień"),
// so a hypothesis word is credited to the repair rather than to the
// abandoned copy.
//
// Phase 2 walks each gap between consecutive phase-1 matches and pairs the
// remaining tokens in order when their normalized edit distance is at most
// 1/3 ("zadzwonię" -> "zadzwoniłem"). Those pairs are `modified` matches.

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "uttprobe/unicode.hpp"

namespace uttprobe {

enum class MatchKind { Exact, Modified };

struct Match {
  std::size_t input = 0;
  std::size_t hyp = 0;
  MatchKind kind = MatchKind::Exact;

  bool operator==(const Match&) const = default;
};

struct Alignment {
  std::vector<Match> matches;  // strictly increasing in both coordinates
  std::vector<bool> kept;      // per input token
  std::vector<std::size_t> oov;  // unmatched hypothesis token indices

  std::size_t exact_count() const {
    return static_cast<std::size_t>(
        std::count_if(matches.begin(), matches.end(), [](const Match& m) { return m.kind == MatchKind::Exact; }));
  }
};

inline constexpr double kFuzzyThreshold = 1.0 / 3.0;

namespace detail {

inline const std::u32string_view kProtected[] = {U"(...)", U"(yy)", U"..."};

inline bool is_detachable(char32_t c) {
  switch (c) {
    case U',': case U'.': case U'?': case U'!': case U':': case U';': case U'"': case U'(': case U')':
      return true;
    default:
      return false;
  }
}

inline void split_word(std::u32string_view w, std::vector<std::string>& out) {
  for (auto p : kProtected)
    if (w == p) {
      out.push_back(unicode::from_u32(w));
      return;
    }

  std::vector<std::string> lead, trail;
  auto protected_prefix = [&](std::u32string_view s) -> std::size_t {
    for (auto p : kProtected)
      if (s.size() > p.size() && s.substr(0, p.size()) == p) return p.size();
    return 0;
  };
  auto protected_suffix = [&](std::u32string_view s) -> std::size_t {
    for (auto p : kProtected)
      if (s.size() > p.size() && s.substr(s.size() - p.size()) == p) return p.size();
    return 0;
  };

  while (!w.empty()) {
    if (std::size_t k = protected_prefix(w)) {
      lead.push_back(unicode::from_u32(w.substr(0, k)));
      w.remove_prefix(k);
    } else if (w.size() > 1 && is_detachable(w.front())) {
      lead.push_back(unicode::from_u32(w.substr(0, 1)));
      w.remove_prefix(1);
    } else {
      break;
    }
  }
  while (!w.empty()) {
    if (std::size_t k = protected_suffix(w)) {
      trail.push_back(unicode::from_u32(w.substr(w.size() - k)));
      w.remove_suffix(k);
    } else if (w.size() > 1 && is_detachable(w.back())) {
      trail.push_back(unicode::from_u32(w.substr(w.size() - 1)));
      w.remove_suffix(1);
    } else {
      break;
    }
  }
  out.insert(out.end(), lead.begin(), lead.end());
  if (!w.empty()) out.push_back(unicode::from_u32(w));
  out.insert(out.end(), trail.rbegin(), trail.rend());
}

inline std::size_t edit_distance(const std::u32string& a, const std::u32string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace detail

/// Whitespace split, then leading/trailing , . ? ! : ; " ( ) are detached as
/// separate tokens. "...", "(yy)" and "(...)" are never broken up.
inline std::vector<std::string> tokenize_hypothesis(std::string_view text) {
  std::u32string cps = unicode::to_u32(unicode::nfc(text));
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && unicode::is_space(cps[i])) ++i;
    std::size_t j = i;
    while (j < cps.size() && !unicode::is_space(cps[j])) ++j;
    if (j > i) detail::split_word(std::u32string_view(cps).substr(i, j - i), out);
    i = j;
  }
  return out;
}

/// Case-folded edit distance divided by the longer length.
inline double normalized_edit_distance(std::string_view a, std::string_view b) {
  auto fa = unicode::to_u32(unicode::fold_case(unicode::nfc(a)));
  auto fb = unicode::to_u32(unicode::fold_case(unicode::nfc(b)));
  std::size_t len = std::max(fa.size(), fb.size());
  if (len == 0) return 0.0;
  return static_cast<double>(detail::edit_distance(fa, fb)) / static_cast<double>(len);
}

inline Alignment align(const std::vector<std::string>& input, const std::vector<std::string>& hyp) {
  const std::size_t n = input.size(), m = hyp.size();
  std::vector<std::string> a(n), b(m);
  for (std::size_t i = 0; i < n; ++i) a[i] = unicode::fold_case(unicode::nfc(input[i]));
  for (std::size_t j = 0; j < m; ++j) b[j] = unicode::fold_case(unicode::nfc(hyp[j]));

  // Prefix LCS table, then backtrack from the end: whenever the last tokens
  // are equal they are matched, which yields the latest-position embedding.
  std::vector<std::vector<unsigned>> L(n + 1, std::vector<unsigned>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      L[i][j] = a[i - 1] == b[j - 1] ? L[i - 1][j - 1] + 1 : std::max(L[i - 1][j], L[i][j - 1]);

  std::vector<Match> exact;
  for (std::size_t i = n, j = m; i > 0 && j > 0;) {
    if (a[i - 1] == b[j - 1]) {
      exact.push_back({i - 1, j - 1, MatchKind::Exact});
      --i;
      --j;
    } else if (L[i][j - 1] >= L[i - 1][j]) {
      --j;
    } else {
      --i;
    }
  }
  std::reverse(exact.begin(), exact.end());

  Alignment out;
  out.kept.assign(n, false);
  std::vector<bool> hyp_used(m, false);

  std::size_t in_lo = 0, hyp_lo = 0;
  auto fuzzy_gap = [&](std::size_t in_hi, std::size_t hyp_hi) {
    std::size_t cursor = in_lo;
    for (std::size_t j = hyp_lo; j < hyp_hi; ++j) {
      for (std::size_t i = cursor; i < in_hi; ++i) {
        if (normalized_edit_distance(input[i], hyp[j]) <= kFuzzyThreshold) {
          out.matches.push_back({i, j, MatchKind::Modified});
          cursor = i + 1;
          break;
        }
      }
    }
  };
  for (const auto& e : exact) {
    fuzzy_gap(e.input, e.hyp);
    out.matches.push_back(e);
    in_lo = e.input + 1;
    hyp_lo = e.hyp + 1;
  }
  fuzzy_gap(n, m);

  for (const auto& mt : out.matches) {
    out.kept[mt.input] = true;
    hyp_used[mt.hyp] = true;
  }
  for (std::size_t j = 0; j < m; ++j)
    if (!hyp_used[j]) out.oov.push_back(j);
  return out;
}

/// Alignment of a hypothesis text against the gold token forms of one turn.
/// Gold forms are split with the hypothesis tokenizer ("siedmio..." becomes
/// "siedmio" + "..."); a gold token is kept when any of its pieces is matched.
struct TurnAlignment {
  std::vector<std::string> input_pieces;
  std::vector<std::size_t> owner;  // gold token index of each input piece
  std::vector<std::string> hyp_tokens;
  Alignment pieces;
  std::vector<bool> kept;  // per gold token
};

inline TurnAlignment align_turn(const std::vector<std::string>& gold_forms, std::string_view hypothesis) {
  TurnAlignment ta;
  for (std::size_t g = 0; g < gold_forms.size(); ++g) {
    auto parts = tokenize_hypothesis(gold_forms[g]);
    if (parts.empty()) parts.push_back(gold_forms[g]);
    for (auto& p : parts) {
      ta.input_pieces.push_back(std::move(p));
      ta.owner.push_back(g);
    }
  }
  ta.hyp_tokens = tokenize_hypothesis(hypothesis);
  ta.pieces = align(ta.input_pieces, ta.hyp_tokens);
  ta.kept.assign(gold_forms.size(), false);
  for (std::size_t i = 0; i < ta.input_pieces.size(); ++i)
    if (ta.pieces.kept[i]) ta.kept[ta.owner[i]] = true;
  return ta;
}

}  // namespace uttprobe

#endif  // UTTPROBE_ALIGN_HPP
