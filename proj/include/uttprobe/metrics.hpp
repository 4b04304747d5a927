#ifndef UTTPROBE_METRICS_HPP
#define UTTPROBE_METRICS_HPP

// Token-level scoring of extracted utterances against the probe dataset.
// Status-true tokens are positives: kept -> TP, removed -> FN. Status-false
// tokens are negatives: removed -> TN, kept -> FP. Ratios with an empty
// denominator are undefined (nullopt), never 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uttprobe/align.hpp"
#include "uttprobe/error.hpp"
#include "uttprobe/probe_dataset.hpp"
#include "uttprobe/unicode.hpp"

namespace uttprobe {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  bool operator==(const ConfusionCounts&) const = default;
};

struct Scores {
  std::optional<double> accuracy, precision, recall, f1, tnr;
};

struct MetricsReport {
  ConfusionCounts counts;
  Scores micro;
  Scores macro;  // per-turn scores averaged over the turns where each is defined
  std::optional<double> cpt;
  std::optional<double> gold_cpt;
  std::size_t oov_total = 0;
};

inline std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline std::optional<double> harmonic_mean(std::optional<double> p, std::optional<double> r) {
  if (!p || !r) return std::nullopt;
  if (*p + *r == 0.0) return 0.0;
  return 2.0 * *p * *r / (*p + *r);
}

inline Scores scores(const ConfusionCounts& c) {
  Scores s;
  s.accuracy = ratio(c.tp + c.tn, c.total());
  s.precision = ratio(c.tp, c.tp + c.fp);
  s.recall = ratio(c.tp, c.tp + c.fn);
  s.tnr = ratio(c.tn, c.tn + c.fp);
  s.f1 = harmonic_mean(s.precision, s.recall);
  return s;
}

inline ConfusionCounts score_turn(const std::vector<bool>& kept, const std::vector<bool>& statuses) {
  if (kept.size() != statuses.size())
    throw ArgumentError("score_turn: " + std::to_string(kept.size()) + " alignment tokens vs " +
                        std::to_string(statuses.size()) + " gold statuses");
  ConfusionCounts c;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (statuses[i]) (kept[i] ? c.tp : c.fn) += 1;
    else (kept[i] ? c.fp : c.tn) += 1;
  }
  return c;
}

inline ConfusionCounts score_turn(const TurnAlignment& a, const ProbeTurn& gold) {
  std::vector<bool> statuses;
  for (const auto& t : gold) statuses.push_back(t.status);
  return score_turn(a.kept, statuses);
}

/// Micro scores over the summed counts plus the macro average of per-turn scores.
inline MetricsReport aggregate(const std::vector<ConfusionCounts>& turns) {
  MetricsReport r;
  for (const auto& c : turns) r.counts += c;
  r.micro = scores(r.counts);

  std::array<double, 5> sum{};
  std::array<std::size_t, 5> n{};
  for (const auto& c : turns) {
    Scores s = scores(c);
    const std::array<std::optional<double>, 5> v{s.accuracy, s.precision, s.recall, s.f1, s.tnr};
    for (std::size_t k = 0; k < 5; ++k)
      if (v[k]) {
        sum[k] += *v[k];
        ++n[k];
      }
  }
  auto mean = [&](std::size_t k) -> std::optional<double> {
    if (n[k] == 0) return std::nullopt;
    return sum[k] / static_cast<double>(n[k]);
  };
  r.macro = {mean(0), mean(1), mean(2), mean(3), mean(4)};
  return r;
}

/// Mean number of characters (code points) per turn after trimming.
inline std::optional<double> cpt(const std::vector<std::string>& texts) {
  if (texts.empty()) return std::nullopt;
  double total = 0.0;
  for (const auto& t : texts) total += static_cast<double>(unicode::length(unicode::trim(unicode::nfc(t))));
  return total / static_cast<double>(texts.size());
}

// ---------------------------------------------------------------------------
// Corpus-level joins

/// One scored turn: the hypothesis and its alignment onto the gold tokens.
struct TurnResult {
  std::string dialogue_id;
  int turn_index = 0;
  std::string hypothesis;
  TurnAlignment alignment;
};

enum class Phenomenon { Discourse, Reparandum, Restart };
inline constexpr std::array<Phenomenon, 3> kPhenomena{Phenomenon::Discourse, Phenomenon::Reparandum,
                                                      Phenomenon::Restart};

inline std::string_view name(Phenomenon p) {
  switch (p) {
    case Phenomenon::Discourse: return "discourse";
    case Phenomenon::Reparandum: return "reparandum";
    case Phenomenon::Restart: return "restart";
  }
  return "";
}

inline bool flagged(const ProbeToken& t, Phenomenon p) {
  if (!t.speech_type) return false;
  switch (p) {
    case Phenomenon::Discourse: return t.speech_type->discourse;
    case Phenomenon::Reparandum: return t.speech_type->reparandum;
    case Phenomenon::Restart: return t.speech_type->restart;
  }
  return false;
}

enum class Task { WellStructure, Discourse, Reparandum, Restart, All };

inline std::string_view name(Task t) {
  switch (t) {
    case Task::WellStructure: return "well-structure";
    case Task::Discourse: return "discourse";
    case Task::Reparandum: return "reparandum";
    case Task::Restart: return "restart";
    case Task::All: return "all";
  }
  return "";
}

inline std::optional<Task> parse_task(std::string_view s) {
  for (Task t : {Task::WellStructure, Task::Discourse, Task::Reparandum, Task::Restart, Task::All})
    if (name(t) == s) return t;
  return std::nullopt;
}

struct PhenomenonRow {
  Phenomenon phenomenon = Phenomenon::Discourse;
  std::size_t tokens_total = 0;
  std::size_t tokens_filtered = 0;
  std::optional<double> ratio;  // percent
  bool headline = false;
};

struct PhenomenonReport {
  std::array<PhenomenonRow, 3> rows;
};

inline const ProbeTurn& gold_turn(const ProbeDataset& ds, const TurnResult& r) {
  const auto* turn = ds.find(r.dialogue_id, r.turn_index);
  if (!turn)
    throw ArgumentError("no gold turn for " + r.dialogue_id + "-" + std::to_string(r.turn_index));
  if (turn->size() != r.alignment.kept.size())
    throw ArgumentError("alignment of " + r.dialogue_id + "-" + std::to_string(r.turn_index) +
                        " does not cover the gold turn");
  return *turn;
}

inline PhenomenonReport phenomenon_ratios(const std::vector<TurnResult>& results, const ProbeDataset& ds,
                                          Task task) {
  PhenomenonReport rep;
  for (std::size_t k = 0; k < 3; ++k) {
    rep.rows[k].phenomenon = kPhenomena[k];
    rep.rows[k].headline = task == Task::WellStructure || task == Task::All ||
                           static_cast<int>(task) - 1 == static_cast<int>(kPhenomena[k]);
  }
  for (const auto& r : results) {
    const auto& gold = gold_turn(ds, r);
    for (std::size_t i = 0; i < gold.size(); ++i)
      for (std::size_t k = 0; k < 3; ++k)
        if (flagged(gold[i], kPhenomena[k])) {
          ++rep.rows[k].tokens_total;
          if (!r.alignment.kept[i]) ++rep.rows[k].tokens_filtered;
        }
  }
  for (auto& row : rep.rows) {
    auto q = ratio(row.tokens_filtered, row.tokens_total);
    if (q) row.ratio = 100.0 * *q;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Dependency-category omissions

enum class Category { Core, NonCore, Nominal, Function, Other };
inline constexpr std::array<Category, 5> kCategories{Category::Core, Category::NonCore, Category::Nominal,
                                                     Category::Function, Category::Other};

inline std::string_view name(Category c) {
  switch (c) {
    case Category::Core: return "core arguments";
    case Category::NonCore: return "non-core dependents";
    case Category::Nominal: return "nominal dependents";
    case Category::Function: return "function words";
    case Category::Other: return "other dependents";
  }
  return "";
}

inline const std::vector<std::string_view>& members(Category c) {
  static const std::vector<std::string_view> core{"ccomp", "iobj", "nsubj", "obj", "xcomp"};
  static const std::vector<std::string_view> noncore{"advcl", "advmod", "discourse:interj", "expl", "obl", "vocative"};
  static const std::vector<std::string_view> nominal{"acl", "amod", "appos", "nmod", "nummod"};
  static const std::vector<std::string_view> function{"aux", "case", "cop", "det", "mark"};
  static const std::vector<std::string_view> other{"cc",     "conj",   "dep",       "fixed", "flat",
                                                   "list",   "orphan", "parataxis", "punct", "root"};
  switch (c) {
    case Category::Core: return core;
    case Category::NonCore: return noncore;
    case Category::Nominal: return nominal;
    case Category::Function: return function;
    case Category::Other: return other;
  }
  return other;
}

/// The member label a deprel counts under: the full label when a category
/// lists it with its subtype, otherwise the base label before ':'.
inline std::string member_label(std::string_view deprel) {
  for (Category c : kCategories)
    for (auto m : members(c))
      if (m == deprel) return std::string(deprel);
  return std::string(deprel.substr(0, deprel.find(':')));
}

inline Category category_of(std::string_view deprel) {
  const std::string label = member_label(deprel);
  for (Category c : kCategories)
    for (auto m : members(c))
      if (m == label) return c;
  return Category::Other;
}

struct CategoryRow {
  Category category = Category::Core;
  std::size_t gold_tokens = 0;  // status-true tokens in the category
  std::size_t missing = 0;
  double avg = 0.0;             // missing / number of listed member labels
  std::optional<double> ratio;  // percent of gold tokens missing
};

struct CategoryOmissionReport {
  std::array<CategoryRow, 5> rows;
  std::map<std::string, std::size_t> missing_by_label;  // raw counts, keyed by member label
  std::map<std::string, std::size_t> gold_by_label;
};

inline CategoryOmissionReport category_omissions(const std::vector<TurnResult>& results, const ProbeDataset& ds) {
  CategoryOmissionReport rep;
  for (std::size_t k = 0; k < 5; ++k) rep.rows[k].category = kCategories[k];
  for (const auto& r : results) {
    const auto& gold = gold_turn(ds, r);
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (!gold[i].status) continue;
      auto label = member_label(gold[i].dep_type);
      auto& row = rep.rows[static_cast<std::size_t>(category_of(gold[i].dep_type))];
      ++row.gold_tokens;
      ++rep.gold_by_label[label];
      if (!r.alignment.kept[i]) {
        ++row.missing;
        ++rep.missing_by_label[label];
      }
    }
  }
  for (auto& row : rep.rows) {
    row.avg = static_cast<double>(row.missing) / static_cast<double>(members(row.category).size());
    auto q = ratio(row.missing, row.gold_tokens);
    if (q) row.ratio = 100.0 * *q;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Out-of-vocabulary output

struct OOVSample {
  std::string dialogue_id;
  int turn_index = 0;
  std::string hypothesis_token;
  std::string input_token;  // set for modified matches
};

struct OOVReport {
  std::size_t total = 0;
  std::size_t modified_match = 0;
  std::size_t pure_insertion = 0;
  // Unmatched punctuation-only tokens; tracked, but not OOV words.
  std::size_t punct_insertions = 0;
  std::vector<OOVSample> modified_samples;
  std::vector<OOVSample> insertion_samples;
};

inline constexpr std::size_t kOOVSampleCap = 50;

inline OOVReport oov_report(const std::vector<TurnResult>& results) {
  OOVReport rep;
  for (const auto& r : results) {
    const auto& a = r.alignment;
    for (const auto& m : a.pieces.matches) {
      if (m.kind != MatchKind::Modified) continue;
      ++rep.modified_match;
      if (rep.modified_samples.size() < kOOVSampleCap)
        rep.modified_samples.push_back({r.dialogue_id, r.turn_index, a.hyp_tokens[m.hyp], a.input_pieces[m.input]});
    }
    for (std::size_t j : a.pieces.oov) {
      if (!unicode::has_alnum(a.hyp_tokens[j])) {
        ++rep.punct_insertions;
        continue;
      }
      ++rep.pure_insertion;
      if (rep.insertion_samples.size() < kOOVSampleCap)
        rep.insertion_samples.push_back({r.dialogue_id, r.turn_index, a.hyp_tokens[j], {}});
    }
  }
  rep.total = rep.modified_match + rep.pure_insertion;
  return rep;
}

// ---------------------------------------------------------------------------
// Correlation

struct Correlation {
  std::optional<double> pearson;
  std::optional<double> spearman;
};

inline std::optional<double> pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto n = static_cast<double>(xs.size());
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

/// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline Correlation correlation(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ArgumentError("correlation: series lengths differ");
  if (xs.size() < 2) throw ArgumentError("correlation: need at least two points");
  return {pearson(xs, ys), pearson(average_ranks(xs), average_ranks(ys))};
}

}  // namespace uttprobe

#endif  // UTTPROBE_METRICS_HPP
