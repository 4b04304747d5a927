#ifndef UTTPROBE_PROMPT_HPP
#define UTTPROBE_PROMPT_HPP

// Few-shot extraction prompts and the parsing of model replies.
//
// Template file layout:
//
//   ---
//   id: en-string
//   language: en
//   mode: string            (string | json)
//   examples_dialogue: ...  (json mode: key of the example dialogue)
//   ---
//   body text with {EXAMPLES} and {INPUT}
//   @@example REPETITION
//   input: (...) Dzień... dzień dobry pani.
//   output: dzień dobry pani.
//
// String mode sends one turn per request; json mode sends a whole dialogue
// as {"<dialogue_id>": ["turn", ...]} and expects the same shape back.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uttprobe/error.hpp"
#include "uttprobe/io.hpp"

namespace uttprobe {

enum class PromptMode { String, Json };

inline std::string_view name(PromptMode m) { return m == PromptMode::String ? "string" : "json"; }

struct FewShotExample {
  std::string label;
  std::string input;
  std::string output;
};

struct PromptTemplate {
  std::string id;
  std::string language = "en";
  PromptMode mode = PromptMode::String;
  std::string body;
  std::vector<FewShotExample> examples;
  std::string examples_dialogue = "example";
  std::map<std::string, std::string> meta;  // every front-matter key, verbatim
};

struct BatchTurn {
  int turn_index = 0;
  std::string text;
};

struct TurnBatch {
  std::string dialogue_id;
  PromptMode mode = PromptMode::String;
  std::vector<BatchTurn> turns;
};

struct Hypothesis {
  int turn_index = 0;
  std::string text;

  bool operator==(const Hypothesis&) const = default;
};

struct ParsedResponse {
  std::vector<Hypothesis> hypotheses;  // always one per batch turn, in batch order
  bool degraded = false;
  bool empty = false;  // no usable text at all
  std::vector<std::string> notes;
};

namespace detail {

inline std::string trim_ascii(std::string_view s) {
  auto issp = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && issp(s.front())) s.remove_prefix(1);
  while (!s.empty() && issp(s.back())) s.remove_suffix(1);
  return std::string(s);
}

inline std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

/// Content of the first ``` fenced block, or the text itself when unfenced.
inline std::string strip_fences(std::string_view raw, bool* stripped = nullptr) {
  std::string text = trim_ascii(raw);
  auto open = text.find("```");
  if (open == std::string::npos) return text;
  auto body_start = text.find('\n', open);
  if (body_start == std::string::npos) return text;
  auto close = text.find("```", body_start + 1);
  if (stripped) *stripped = true;
  std::string inner = close == std::string::npos ? text.substr(body_start + 1)
                                                 : text.substr(body_start + 1, close - body_start - 1);
  return trim_ascii(inner);
}

inline std::string strip_quotes(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  static const std::string open = "„", close = "”";
  if (s.size() >= open.size() + close.size() && s.compare(0, open.size(), open) == 0 &&
      s.compare(s.size() - close.size(), close.size(), close) == 0)
    return s.substr(open.size(), s.size() - open.size() - close.size());
  return s;
}

inline bool structural_line(const std::string& t) {
  if (t.rfind("```", 0) == 0) return true;
  if (std::all_of(t.begin(), t.end(), [](char c) { return c == '{' || c == '}' || c == '[' || c == ']' || c == ',' || c == ' '; }))
    return true;
  std::string u = t;
  while (!u.empty() && (u.back() == ' ')) u.pop_back();
  return u.size() >= 2 && u.back() == '[' && u.find(':') != std::string::npos;
}

/// Complete JSON string literals on one line, object keys excluded.
inline std::vector<std::string> string_literals(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while ((i = line.find('"', i)) != std::string_view::npos) {
    std::size_t j = i + 1;
    while (j < line.size() && line[j] != '"') j += line[j] == '\\' ? 2 : 1;
    if (j >= line.size()) break;
    std::size_t k = j + 1;
    while (k < line.size() && line[k] == ' ') ++k;
    if (k >= line.size() || line[k] != ':') {
      try {
        auto v = nlohmann::json::parse(line.substr(i, j - i + 1));
        if (v.is_string()) out.push_back(v.get<std::string>());
      } catch (const nlohmann::json::exception&) {
      }
    }
    i = j + 1;
  }
  return out;
}

/// Line-by-line recovery of turn texts from a reply that is not usable JSON.
/// Quoted lines must be complete JSON strings; a cut-off string is dropped.
inline std::vector<std::string> recover_lines(std::string_view text) {
  std::vector<std::string> out;
  for (auto& line : lines_of(text)) {
    std::string t = trim_ascii(line);
    if (t.empty() || structural_line(t)) continue;
    if (t.rfind("OUTPUT:", 0) == 0) {
      t = trim_ascii(std::string_view(t).substr(7));
      if (t.empty()) continue;
    }
    if (!t.empty() && t.back() == ',') t.pop_back();
    while (!t.empty() && (t.back() == ']' || t.back() == '}')) t.pop_back();
    t = trim_ascii(t);
    if (t.empty()) continue;
    if (t.front() == '"' || t.front() == '{') {
      auto lits = string_literals(t);
      out.insert(out.end(), lits.begin(), lits.end());
      continue;
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace detail

inline PromptTemplate parse_template(std::string_view text) {
  PromptTemplate t;
  auto lines = detail::lines_of(text);
  std::size_t i = 0;
  if (lines.empty() || detail::trim_ascii(lines[0]) != "---") throw ArgumentError("template: missing front matter");
  for (i = 1; i < lines.size() && detail::trim_ascii(lines[i]) != "---"; ++i) {
    auto colon = lines[i].find(':');
    if (colon == std::string::npos) continue;
    t.meta[detail::trim_ascii(std::string_view(lines[i]).substr(0, colon))] =
        detail::trim_ascii(std::string_view(lines[i]).substr(colon + 1));
  }
  if (i == lines.size()) throw ArgumentError("template: unterminated front matter");
  ++i;

  std::string body;
  for (; i < lines.size() && lines[i].rfind("@@example", 0) != 0; ++i) body += lines[i] + "\n";
  while (!body.empty() && body.back() == '\n') body.pop_back();
  t.body = body;

  for (; i < lines.size(); ++i) {
    const auto& l = lines[i];
    if (l.rfind("@@example", 0) == 0) {
      t.examples.push_back({detail::trim_ascii(std::string_view(l).substr(9)), {}, {}});
    } else if (!t.examples.empty() && l.rfind("input:", 0) == 0) {
      t.examples.back().input = detail::trim_ascii(std::string_view(l).substr(6));
    } else if (!t.examples.empty() && l.rfind("output:", 0) == 0) {
      t.examples.back().output = detail::trim_ascii(std::string_view(l).substr(7));
    }
  }

  auto get = [&](const std::string& k) -> std::optional<std::string> {
    auto it = t.meta.find(k);
    return it == t.meta.end() ? std::nullopt : std::optional(it->second);
  };
  if (!get("id")) throw ArgumentError("template: front matter lacks 'id'");
  t.id = *get("id");
  t.language = get("language").value_or("en");
  auto mode = get("mode").value_or("string");
  if (mode == "string") t.mode = PromptMode::String;
  else if (mode == "json") t.mode = PromptMode::Json;
  else throw ArgumentError("template '" + t.id + "': unknown mode '" + mode + "'");
  t.examples_dialogue = get("examples_dialogue").value_or("example");
  return t;
}

inline PromptTemplate load_template(const std::filesystem::path& path) { return parse_template(read_file(path)); }

/// {"<dialogue_id>": [texts...]} with 4-space indentation.
inline std::string json_turn_list(const std::string& dialogue_id, const std::vector<std::string>& texts) {
  nlohmann::ordered_json j;
  j[dialogue_id] = texts;
  return j.dump(4);
}

inline std::string render_examples(const PromptTemplate& t) {
  if (t.examples.empty()) return "";
  std::ostringstream out;
  if (t.mode == PromptMode::String) {
    for (std::size_t i = 0; i < t.examples.size(); ++i) {
      const auto& e = t.examples[i];
      if (i) out << "\n\n";
      out << "Removal of " << e.label << "\nINPUT:  " << e.input << "\nOUTPUT: " << e.output;
    }
  } else {
    std::vector<std::string> ins, outs;
    for (const auto& e : t.examples) {
      ins.push_back(e.input);
      outs.push_back(e.output);
    }
    out << "INPUT:\n```json\n" << json_turn_list(t.examples_dialogue, ins) << "\n```\n\nOUTPUT:\n```json\n"
        << json_turn_list(t.examples_dialogue, outs) << "\n```";
  }
  return out.str();
}

inline std::string render_input(const PromptTemplate& t, const TurnBatch& batch) {
  if (t.mode == PromptMode::String) return batch.turns.front().text;
  std::vector<std::string> texts;
  for (const auto& bt : batch.turns) texts.push_back(bt.text);
  return "```json\n" + json_turn_list(batch.dialogue_id, texts) + "\n```";
}

inline std::string render(const PromptTemplate& t, const TurnBatch& batch) {
  if (t.mode != batch.mode)
    throw ArgumentError("render: template '" + t.id + "' is " + std::string(name(t.mode)) + " mode but batch is " +
                        std::string(name(batch.mode)));
  if (batch.turns.empty()) throw ArgumentError("render: empty batch");
  if (t.mode == PromptMode::String && batch.turns.size() != 1)
    throw ArgumentError("render: string mode takes exactly one turn per batch");

  const std::string examples = render_examples(t);
  const std::string input = render_input(t, batch);
  // Single left-to-right pass so substituted text is never rescanned.
  std::string out;
  const std::string& b = t.body;
  for (std::size_t i = 0; i < b.size();) {
    if (b.compare(i, 10, "{EXAMPLES}") == 0) {
      out += examples;
      i += 10;
    } else if (b.compare(i, 7, "{INPUT}") == 0) {
      out += input;
      i += 7;
    } else {
      out += b[i++];
    }
  }
  return out;
}

/// The text a prompt carries under its final INPUT marker, fences removed.
inline std::string extract_input_block(std::string_view prompt) {
  auto at = prompt.rfind("INPUT:");
  if (at == std::string_view::npos) return "";
  auto rest = prompt.substr(at + 6);
  auto end = rest.find("\nOUTPUT:");
  if (end != std::string_view::npos) rest = rest.substr(0, end);
  return detail::strip_fences(rest);
}

inline ParsedResponse parse_response(const PromptTemplate& t, const TurnBatch& batch, std::string_view raw) {
  ParsedResponse out;
  const std::size_t want = batch.turns.size();
  auto emit = [&](std::vector<std::string> texts) {
    if (texts.size() != want) {
      out.degraded = true;
      out.notes.push_back("turn count " + std::to_string(texts.size()) + " != " + std::to_string(want) +
                          (texts.size() < want ? ", padded with empty hypotheses" : ", extra lines dropped"));
      texts.resize(want);
    }
    for (std::size_t i = 0; i < want; ++i) out.hypotheses.push_back({batch.turns[i].turn_index, texts[i]});
  };

  if (detail::trim_ascii(raw).empty()) {
    out.empty = true;
    out.degraded = true;
    out.notes.push_back("no response text");
    for (const auto& bt : batch.turns) out.hypotheses.push_back({bt.turn_index, ""});
    return out;
  }

  bool fenced = false;
  std::string text = detail::strip_fences(raw, &fenced);
  if (fenced) out.notes.push_back("markdown fences stripped");

  if (t.mode == PromptMode::String) {
    if (text.rfind("OUTPUT:", 0) == 0) {
      text = detail::trim_ascii(std::string_view(text).substr(7));
      out.notes.push_back("OUTPUT: prefix stripped");
    }
    std::string unq = detail::strip_quotes(text);
    if (unq != text) out.notes.push_back("surrounding quotes stripped");
    std::vector<std::string> texts{unq};
    emit(std::move(texts));
    return out;
  }

  auto open = text.find('{');
  auto close = text.rfind('}');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    try {
      auto j = nlohmann::json::parse(text.substr(open, close - open + 1));
      const nlohmann::json* arr = nullptr;
      if (j.is_object()) {
        if (j.contains(batch.dialogue_id) && j[batch.dialogue_id].is_array()) arr = &j[batch.dialogue_id];
        for (auto it = j.begin(); !arr && it != j.end(); ++it)
          if (it->is_array()) arr = &*it;
      }
      if (arr) {
        std::vector<std::string> texts;
        for (const auto& e : *arr) texts.push_back(e.is_string() ? e.get<std::string>() : e.dump());
        if (texts.size() == want) {
          emit(std::move(texts));
          return out;
        }
        out.notes.push_back("JSON turn count mismatch, falling back to line splitting");
      } else {
        out.notes.push_back("JSON without a turn list, falling back to line splitting");
      }
    } catch (const nlohmann::json::exception&) {
      out.notes.push_back("malformed JSON, falling back to line splitting");
    }
  } else {
    out.notes.push_back("no JSON object found, falling back to line splitting");
  }
  out.degraded = true;
  emit(detail::recover_lines(text));
  return out;
}

}  // namespace uttprobe

#endif  // UTTPROBE_PROMPT_HPP
