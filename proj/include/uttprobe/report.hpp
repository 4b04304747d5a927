#ifndef UTTPROBE_REPORT_HPP
#define UTTPROBE_REPORT_HPP

// Scoring of a set of per-turn hypotheses and the report files:
//
//   report.json   everything, plus a per-turn appendix
//   table1.csv    accuracy, precision, recall, F1, TNR, CPT (+ gold CPT, OOV)
//   table2.csv    dependency-category omissions
//   table3.csv    per-phenomenon filtering ratios
//   report.md     the three tables for reading
//
// Undefined values are null in JSON, empty in CSV and "n/a" in markdown.

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uttprobe/align.hpp"
#include "uttprobe/metrics.hpp"
#include "uttprobe/probe_dataset.hpp"

namespace uttprobe {

struct TurnHypothesis {
  std::string dialogue_id;
  int turn_index = 0;
  std::string text;
  bool degraded = false;
};

struct ScoredRun {
  std::string model;
  std::string template_id;
  Task task = Task::WellStructure;
  std::vector<TurnResult> results;  // probe dataset order
  std::vector<ConfusionCounts> counts;
  std::vector<bool> degraded;
  MetricsReport metrics;
  PhenomenonReport phenomena;
  CategoryOmissionReport categories;
  OOVReport oov;
  std::vector<std::string> unmatched;  // "dialogue:turn" with no hypothesis, or hypotheses with no gold turn
};

/// Gold clean text of a turn: status-true tokens with default spacing.
inline std::string gold_text(const ProbeTurn& turn) {
  std::vector<SurfaceToken> toks;
  for (const auto& t : turn)
    if (t.status) toks.push_back({static_cast<int>(toks.size()) + 1, t.token, 0, t.dep_type, std::nullopt});
  return detokenize(toks);
}

inline std::vector<std::string> gold_forms(const ProbeTurn& turn) {
  std::vector<std::string> forms;
  forms.reserve(turn.size());
  for (const auto& t : turn) forms.push_back(t.token);
  return forms;
}

inline ScoredRun score_run(const std::vector<TurnHypothesis>& hyps, const ProbeDataset& ds, Task task,
                           std::string model = {}, std::string template_id = {}) {
  ScoredRun run;
  run.model = std::move(model);
  run.template_id = std::move(template_id);
  run.task = task;

  std::map<std::pair<std::string, int>, const TurnHypothesis*> by_addr;
  for (const auto& h : hyps) {
    if (!ds.find(h.dialogue_id, h.turn_index)) run.unmatched.push_back(h.dialogue_id + ":" + std::to_string(h.turn_index));
    by_addr[{h.dialogue_id, h.turn_index}] = &h;
  }

  std::vector<std::string> hyp_texts, gold_texts;
  for (const auto& d : ds.dialogues) {
    for (std::size_t ti = 0; ti < d.turns.size(); ++ti) {
      const auto& gold = d.turns[ti];
      const int turn_index = static_cast<int>(ti);
      auto it = by_addr.find({d.id, turn_index});
      if (it == by_addr.end()) {
        run.unmatched.push_back(d.id + ":" + std::to_string(turn_index));
        continue;
      }
      const auto& h = *it->second;
      TurnResult r{d.id, turn_index, h.text, align_turn(gold_forms(gold), h.text)};
      run.counts.push_back(score_turn(r.alignment, gold));
      run.degraded.push_back(h.degraded);
      hyp_texts.push_back(h.text);
      gold_texts.push_back(gold_text(gold));
      run.results.push_back(std::move(r));
    }
  }

  run.metrics = aggregate(run.counts);
  run.metrics.cpt = cpt(hyp_texts);
  run.metrics.gold_cpt = cpt(gold_texts);
  run.phenomena = phenomenon_ratios(run.results, ds, task);
  run.categories = category_omissions(run.results, ds);
  run.oov = oov_report(run.results);
  run.metrics.oov_total = run.oov.total;
  return run;
}

namespace detail {

inline nlohmann::ordered_json opt(std::optional<double> v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline std::string fixed(std::optional<double> v, int digits, std::string_view undefined) {
  if (!v) return std::string(undefined);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline nlohmann::ordered_json scores_json(const Scores& s) {
  nlohmann::ordered_json j;
  j["accuracy"] = opt(s.accuracy);
  j["precision"] = opt(s.precision);
  j["recall"] = opt(s.recall);
  j["f1"] = opt(s.f1);
  j["tnr"] = opt(s.tnr);
  return j;
}

inline nlohmann::ordered_json counts_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

inline nlohmann::ordered_json samples_json(const std::vector<OOVSample>& v) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : v) {
    nlohmann::ordered_json j;
    j["dialogue_id"] = s.dialogue_id;
    j["turn_index"] = s.turn_index;
    j["hypothesis_token"] = s.hypothesis_token;
    if (!s.input_token.empty()) j["input_token"] = s.input_token;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const ScoredRun& run) {
  nlohmann::ordered_json j;
  j["model"] = run.model;
  j["template"] = run.template_id;
  j["task"] = std::string(name(run.task));
  j["turns"] = run.results.size();

  auto& m = j["metrics"];
  m["counts"] = detail::counts_json(run.metrics.counts);
  m["micro"] = detail::scores_json(run.metrics.micro);
  m["macro"] = detail::scores_json(run.metrics.macro);
  m["cpt"] = detail::opt(run.metrics.cpt);
  m["gold_cpt"] = detail::opt(run.metrics.gold_cpt);
  m["oov_total"] = run.metrics.oov_total;

  auto phen = nlohmann::ordered_json::array();
  for (const auto& row : run.phenomena.rows) {
    nlohmann::ordered_json r;
    r["phenomenon"] = std::string(name(row.phenomenon));
    r["tokens_total"] = row.tokens_total;
    r["tokens_filtered"] = row.tokens_filtered;
    r["ratio"] = detail::opt(row.ratio);
    r["headline"] = row.headline;
    phen.push_back(std::move(r));
  }
  j["phenomena"] = std::move(phen);

  auto cats = nlohmann::ordered_json::array();
  for (const auto& row : run.categories.rows) {
    nlohmann::ordered_json r;
    r["category"] = std::string(name(row.category));
    auto mem = nlohmann::ordered_json::array();
    for (auto label : members(row.category)) mem.push_back(std::string(label));
    r["members"] = std::move(mem);
    r["gold_tokens"] = row.gold_tokens;
    r["missing"] = row.missing;
    r["avg"] = row.avg;
    r["ratio"] = detail::opt(row.ratio);
    cats.push_back(std::move(r));
  }
  j["categories"] = std::move(cats);
  j["missing_by_label"] = run.categories.missing_by_label;
  j["gold_by_label"] = run.categories.gold_by_label;

  auto& o = j["oov"];
  o["total"] = run.oov.total;
  o["modified_match"] = run.oov.modified_match;
  o["pure_insertion"] = run.oov.pure_insertion;
  o["punct_insertions"] = run.oov.punct_insertions;
  o["modified_samples"] = detail::samples_json(run.oov.modified_samples);
  o["insertion_samples"] = detail::samples_json(run.oov.insertion_samples);

  j["unmatched"] = run.unmatched;

  auto turns = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < run.results.size(); ++k) {
    const auto& r = run.results[k];
    nlohmann::ordered_json t;
    t["dialogue_id"] = r.dialogue_id;
    t["turn_index"] = r.turn_index;
    t["hypothesis"] = r.hypothesis;
    t["degraded"] = static_cast<bool>(run.degraded[k]);
    t["counts"] = detail::counts_json(run.counts[k]);
    t["kept"] = r.alignment.kept;
    auto oov = nlohmann::ordered_json::array();
    for (auto idx : r.alignment.pieces.oov) oov.push_back(r.alignment.hyp_tokens[idx]);
    t["oov"] = std::move(oov);
    auto mod = nlohmann::ordered_json::array();
    for (const auto& mt : r.alignment.pieces.matches)
      if (mt.kind == MatchKind::Modified)
        mod.push_back(nlohmann::ordered_json::array({r.alignment.input_pieces[mt.input], r.alignment.hyp_tokens[mt.hyp]}));
    t["modified"] = std::move(mod);
    turns.push_back(std::move(t));
  }
  j["per_turn"] = std::move(turns);
  return j;
}

inline std::string table1_csv(const ScoredRun& run) {
  const auto& s = run.metrics.micro;
  std::ostringstream out;
  out << "model,template,task,accuracy,precision,recall,f1,tnr,cpt,gold_cpt,oov\n";
  out << detail::csv_field(run.model) << ',' << detail::csv_field(run.template_id) << ',' << name(run.task) << ','
      << detail::fixed(s.accuracy, 4, "") << ',' << detail::fixed(s.precision, 4, "") << ','
      << detail::fixed(s.recall, 4, "") << ',' << detail::fixed(s.f1, 4, "") << ',' << detail::fixed(s.tnr, 4, "")
      << ',' << detail::fixed(run.metrics.cpt, 2, "") << ',' << detail::fixed(run.metrics.gold_cpt, 2, "") << ','
      << run.metrics.oov_total << '\n';
  return out.str();
}

inline std::string table2_csv(const ScoredRun& run) {
  std::ostringstream out;
  out << "model,category,avg,ratio,missing,gold_tokens\n";
  for (const auto& row : run.categories.rows)
    out << detail::csv_field(run.model) << ',' << name(row.category) << ',' << detail::fixed(row.avg, 2, "") << ','
        << detail::fixed(row.ratio, 2, "") << ',' << row.missing << ',' << row.gold_tokens << '\n';
  return out.str();
}

inline std::string table3_csv(const ScoredRun& run) {
  std::ostringstream out;
  out << "model,task,phenomenon,ratio,tokens_filtered,tokens_total,headline\n";
  for (const auto& row : run.phenomena.rows)
    out << detail::csv_field(run.model) << ',' << name(run.task) << ',' << name(row.phenomenon) << ','
        << detail::fixed(row.ratio, 1, "") << ',' << row.tokens_filtered << ',' << row.tokens_total << ','
        << (row.headline ? "true" : "false") << '\n';
  return out.str();
}

inline std::string report_md(const ScoredRun& run) {
  const auto& s = run.metrics.micro;
  const std::string na = "n/a";
  std::ostringstream out;
  out << "# " << (run.model.empty() ? "run" : run.model) << " / " << run.template_id << " / " << name(run.task)
      << "\n\n";
  out << "Turns scored: " << run.results.size() << "\n\n";

  out << "## Extraction\n\n";
  out << "| accuracy | precision | recall | F1 | TNR | CPT | gold CPT | OOV |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  out << "| " << detail::fixed(s.accuracy, 4, na) << " | " << detail::fixed(s.precision, 4, na) << " | "
      << detail::fixed(s.recall, 4, na) << " | " << detail::fixed(s.f1, 4, na) << " | "
      << detail::fixed(s.tnr, 4, na) << " | " << detail::fixed(run.metrics.cpt, 1, na) << " | "
      << detail::fixed(run.metrics.gold_cpt, 1, na) << " | " << run.metrics.oov_total << " |\n\n";

  out << "## Missing status-true tokens by dependency category\n\n";
  out << "| category | avg | ratio | missing | gold |\n|---|---|---|---|---|\n";
  for (const auto& row : run.categories.rows)
    out << "| " << name(row.category) << " | " << detail::fixed(row.avg, 2, na) << " | "
        << detail::fixed(row.ratio, 2, na) << " | " << row.missing << " | " << row.gold_tokens << " |\n";
  out << "\n";

  out << "## Filtered speech-specific tokens\n\n";
  out << "| phenomenon | ratio | filtered | total |\n|---|---|---|---|\n";
  for (const auto& row : run.phenomena.rows)
    out << "| " << name(row.phenomenon) << (row.headline ? " *" : "") << " | " << detail::fixed(row.ratio, 1, na)
        << " | " << row.tokens_filtered << " | " << row.tokens_total << " |\n";
  out << "\n";

  out << "## Out-of-vocabulary output\n\n";
  out << "total " << run.oov.total << " (modified match " << run.oov.modified_match << ", insertion "
      << run.oov.pure_insertion << "), punctuation insertions " << run.oov.punct_insertions << "\n";
  if (!run.unmatched.empty()) out << "\nUnmatched turns: " << run.unmatched.size() << "\n";
  return out.str();
}

}  // namespace uttprobe

#endif  // UTTPROBE_REPORT_HPP
