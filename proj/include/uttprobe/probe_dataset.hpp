#ifndef UTTPROBE_PROBE_DATASET_HPP
#define UTTPROBE_PROBE_DATASET_HPP

// The probing dataset: per dialogue, a list of turns; per turn, an object
// keyed "1".."n" whose values carry token, status, speech_type and dep_type.
//
//   {
//       "cbiz_tc_53": [
//           {
//               "1": {
//                   "token": "To",
//                   "status": false,
//                   "speech_type": {"discourse": false, "reparandum": false, "restart": true},
//                   "dep_type": "advmod:emph"
//               },
//               ...
//
// Canonical form is UTF-8, 4-space indent, keys in the order shown.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uttprobe/conllu.hpp"
#include "uttprobe/error.hpp"
#include "uttprobe/io.hpp"
#include "uttprobe/speech_filter.hpp"

namespace uttprobe {

struct ProbeToken {
  std::string token;
  bool status = true;
  std::optional<PhenomenonFlags> speech_type;
  std::string dep_type;

  bool operator==(const ProbeToken&) const = default;
};

using ProbeTurn = std::vector<ProbeToken>;  // element i has key "i+1"

struct ProbeDialogue {
  std::string id;
  std::vector<ProbeTurn> turns;

  bool operator==(const ProbeDialogue&) const = default;
};

struct ProbeDataset {
  std::vector<ProbeDialogue> dialogues;  // corpus order

  const ProbeDialogue* find(const std::string& id) const {
    for (const auto& d : dialogues)
      if (d.id == id) return &d;
    return nullptr;
  }
  const ProbeTurn* find(const std::string& id, int turn_index) const {
    const auto* d = find(id);
    if (!d || turn_index < 0 || turn_index >= static_cast<int>(d->turns.size())) return nullptr;
    return &d->turns[static_cast<std::size_t>(turn_index)];
  }
  std::size_t turn_count() const {
    std::size_t n = 0;
    for (const auto& d : dialogues) n += d.turns.size();
    return n;
  }

  bool operator==(const ProbeDataset&) const = default;
};

struct PhenomenonStats {
  std::size_t labels = 0;  // tokens carrying the phenomenon's own dep_type
  std::size_t tokens = 0;  // tokens flagged with the phenomenon
  std::size_t single = 0;  // flagged tokens whose flag set is exactly this phenomenon
};

struct CorpusStats {
  std::size_t turns = 0;
  std::size_t true_tokens = 0;
  std::size_t false_tokens = 0;
  double avg_true_per_turn = 0.0;
  PhenomenonStats discourse;
  PhenomenonStats reparandum;
  PhenomenonStats restart;
};

inline ProbeToken make_probe_token(const SurfaceToken& tok, const PhenomenonFlags& flags) {
  ProbeToken p;
  p.token = tok.form;
  p.status = !flags.any();
  if (flags.any()) p.speech_type = flags;
  p.dep_type = tok.deprel;
  return p;
}

inline ProbeTurn build_turn(const TurnTree& tree) {
  auto flags = phenomenon_flags(tree);
  ProbeTurn turn;
  turn.reserve(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) turn.push_back(make_probe_token(tree.tokens[i], flags[i]));
  return turn;
}

inline ProbeDataset build(const std::vector<Dialogue>& dialogues) {
  ProbeDataset ds;
  for (const auto& d : dialogues) {
    ProbeDialogue pd{d.id, {}};
    for (const auto& turn : d.turns) {
      auto diags = validate(turn);
      if (!diags.empty())
        throw ArgumentError("turn " + sent_id(turn) + " is not a valid tree: " + diags.front().rule);
      pd.turns.push_back(build_turn(turn));
    }
    ds.dialogues.push_back(std::move(pd));
  }
  return ds;
}

inline nlohmann::ordered_json to_json(const ProbeToken& t) {
  nlohmann::ordered_json j;
  j["token"] = t.token;
  j["status"] = t.status;
  if (t.speech_type) {
    nlohmann::ordered_json st;
    st["discourse"] = t.speech_type->discourse;
    st["reparandum"] = t.speech_type->reparandum;
    st["restart"] = t.speech_type->restart;
    j["speech_type"] = std::move(st);
  } else {
    j["speech_type"] = nullptr;
  }
  j["dep_type"] = t.dep_type;
  return j;
}

inline nlohmann::ordered_json to_json(const ProbeDataset& ds) {
  auto root = nlohmann::ordered_json::object();
  for (const auto& d : ds.dialogues) {
    auto turns = nlohmann::ordered_json::array();
    for (const auto& turn : d.turns) {
      auto obj = nlohmann::ordered_json::object();
      for (std::size_t i = 0; i < turn.size(); ++i) obj[std::to_string(i + 1)] = to_json(turn[i]);
      turns.push_back(std::move(obj));
    }
    root[d.id] = std::move(turns);
  }
  return root;
}

inline std::string dump_canonical(const ProbeDataset& ds) { return to_json(ds).dump(4) + "\n"; }

namespace detail {

inline std::optional<std::size_t> token_key(const std::string& key) {
  if (key.empty() || key.size() > 9 || key[0] == '0') return std::nullopt;
  for (char c : key)
    if (c < '0' || c > '9') return std::nullopt;
  return static_cast<std::size_t>(std::stoul(key));
}

}  // namespace detail

/// Parse and validate a probe dataset document.
inline ProbeDataset from_json(const nlohmann::ordered_json& root) {
  if (!root.is_object()) throw SchemaError("probe dataset: top level must be an object");
  ProbeDataset ds;
  for (const auto& [dialogue_id, turns] : root.items()) {
    auto where_d = "dialogue '" + dialogue_id + "'";
    if (!turns.is_array()) throw SchemaError(where_d + ": value must be an array of turns");
    ProbeDialogue pd{dialogue_id, {}};
    for (std::size_t ti = 0; ti < turns.size(); ++ti) {
      const auto& tobj = turns[ti];
      auto where_t = where_d + ", turn " + std::to_string(ti);
      if (!tobj.is_object()) throw SchemaError(where_t + ": turn must be an object keyed by token index");
      ProbeTurn turn(tobj.size());
      std::vector<char> filled(tobj.size(), 0);
      for (const auto& [key, val] : tobj.items()) {
        auto where = where_t + ", token '" + key + "'";
        auto idx = detail::token_key(key);
        if (!idx || *idx < 1 || *idx > tobj.size())
          throw SchemaError(where + ": token keys must be contiguous \"1\"..\"" + std::to_string(tobj.size()) + "\"");
        if (filled[*idx - 1]) throw SchemaError(where + ": duplicate token key");
        filled[*idx - 1] = 1;
        if (!val.is_object() || val.size() != 4)
          throw SchemaError(where + ": token must be an object with token, status, speech_type, dep_type");
        if (!val.contains("token") || !val["token"].is_string())
          throw SchemaError(where + ": 'token' must be a string");
        if (!val.contains("status") || !val["status"].is_boolean())
          throw SchemaError(where + ": 'status' must be a boolean");
        if (!val.contains("dep_type") || !val["dep_type"].is_string())
          throw SchemaError(where + ": 'dep_type' must be a string");
        if (!val.contains("speech_type")) throw SchemaError(where + ": missing 'speech_type'");

        ProbeToken t;
        t.token = val["token"].get<std::string>();
        t.status = val["status"].get<bool>();
        t.dep_type = val["dep_type"].get<std::string>();
        const auto& st = val["speech_type"];
        if (st.is_null()) {
          if (!t.status) throw SchemaError(where + ": speech_type must be non-null when status is false");
        } else {
          if (t.status) throw SchemaError(where + ": speech_type must be null when status is true");
          if (!st.is_object() || st.size() != 3)
            throw SchemaError(where + ": speech_type must have exactly discourse, reparandum, restart");
          PhenomenonFlags f;
          for (auto [name, slot] : {std::pair{"discourse", &f.discourse}, std::pair{"reparandum", &f.reparandum},
                                    std::pair{"restart", &f.restart}}) {
            if (!st.contains(name) || !st[name].is_boolean())
              throw SchemaError(where + ": speech_type." + name + " must be a boolean");
            *slot = st[name].get<bool>();
          }
          if (!f.any()) throw SchemaError(where + ": speech_type must flag at least one phenomenon");
          t.speech_type = f;
        }
        turn[*idx - 1] = std::move(t);
      }
      pd.turns.push_back(std::move(turn));
    }
    ds.dialogues.push_back(std::move(pd));
  }
  return ds;
}

inline ProbeDataset load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open probe dataset '" + path.string() + "'");
  nlohmann::ordered_json root;
  try {
    root = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("probe dataset '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(root);
}

inline void save(const ProbeDataset& ds, const std::filesystem::path& path) {
  write_atomic(path, dump_canonical(ds));
}

inline CorpusStats stats(const ProbeDataset& ds) {
  CorpusStats s;
  for (const auto& d : ds.dialogues) {
    for (const auto& turn : d.turns) {
      ++s.turns;
      for (const auto& t : turn) {
        (t.status ? s.true_tokens : s.false_tokens) += 1;
        if (t.dep_type == kDiscourse) ++s.discourse.labels;
        if (t.dep_type == kReparandum) ++s.reparandum.labels;
        if (t.dep_type == kRestart) ++s.restart.labels;
        if (!t.speech_type) continue;
        const auto& f = *t.speech_type;
        const bool single = f.count() == 1;
        if (f.discourse) {
          ++s.discourse.tokens;
          s.discourse.single += single;
        }
        if (f.reparandum) {
          ++s.reparandum.tokens;
          s.reparandum.single += single;
        }
        if (f.restart) {
          ++s.restart.tokens;
          s.restart.single += single;
        }
      }
    }
  }
  s.avg_true_per_turn = s.turns ? static_cast<double>(s.true_tokens) / static_cast<double>(s.turns) : 0.0;
  return s;
}

}  // namespace uttprobe

#endif  // UTTPROBE_PROBE_DATASET_HPP
