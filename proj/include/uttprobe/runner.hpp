#ifndef UTTPROBE_RUNNER_HPP
#define UTTPROBE_RUNNER_HPP

// The four pipeline commands behind the CLI. Each returns an exit code:
// 0 ok, 1 usage, 2 data error, 3 provider error.
//
// Run directory layout:
//
//   <runs_root>/<name>/manifest.json
//   <runs_root>/<name>/responses/<dialogue>__t<first turn>.json
//   <runs_root>/<name>/reports/{report.json,report.md,table1.csv,table2.csv,table3.csv}
//
// Response files and reports are deterministic for a deterministic provider;
// timestamps, latencies and cache hits live only in the manifest.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "uttprobe/conllu.hpp"
#include "uttprobe/error.hpp"
#include "uttprobe/gateway.hpp"
#include "uttprobe/io.hpp"
#include "uttprobe/metrics.hpp"
#include "uttprobe/probe_dataset.hpp"
#include "uttprobe/prompt.hpp"
#include "uttprobe/report.hpp"
#include "uttprobe/speech_filter.hpp"
#include "uttprobe/synth.hpp"

#ifndef UTTPROBE_DATA_DIR
#define UTTPROBE_DATA_DIR "data"
#endif

namespace uttprobe {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kProviderError = 3 };

namespace fs = std::filesystem;

namespace detail {

inline std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

inline std::size_t estimate_tokens(const std::vector<BatchTurn>& turns) {
  std::size_t n = 0;
  for (const auto& t : turns) n += (unicode::length(t.text) + 3) / 4;
  return n;
}

}  // namespace detail

// ---------------------------------------------------------------- build-dataset

inline int cmd_build_dataset(const fs::path& conllu, const fs::path& out, std::ostream& log) {
  try {
    std::vector<std::string> warnings;
    auto dialogues = parse_conllu(read_file(conllu), &warnings);
    for (const auto& w : warnings) log << "warning: " << w << "\n";
    auto ds = build(dialogues);
    save(ds, out);
    log << "wrote " << out.string() << " (" << ds.dialogues.size() << " dialogues, " << ds.turn_count()
        << " turns)\n";
    return kOk;
  } catch (const ParseError& e) {
    log << "error: " << conllu.string() << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
  }
  return kDataError;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  synth::InjectionSpec spec;
  int turns = 100;
  int turns_per_dialogue = 10;
  double grammar_share = 0.5;
  std::optional<fs::path> templates;  // clean CoNLL-U; default: the shipped template treebank
  fs::path out_dir = "synth";
};

inline void print_stats(const CorpusStats& s, std::ostream& out) {
  out << "turns                " << s.turns << "\n";
  out << "status-true tokens   " << s.true_tokens << "\n";
  out << "status-false tokens  " << s.false_tokens << "\n";
  out << "avg true per turn    " << std::fixed << std::setprecision(2) << s.avg_true_per_turn << "\n";
  out << "phenomenon   labels  tokens  single\n";
  auto row = [&](const char* label, const PhenomenonStats& p) {
    out << std::left << std::setw(12) << label << std::right << std::setw(7) << p.labels << std::setw(8) << p.tokens
        << std::setw(8) << p.single << "\n";
  };
  row("discourse", s.discourse);
  row("reparandum", s.reparandum);
  row("restart", s.restart);
  out.unsetf(std::ios::floatfield);
}

/// Turns whose extracted clean tokens equal the original clean turn.
inline std::size_t round_trip_ok(const synth::SynthCorpus& c) {
  std::size_t ok = 0;
  for (std::size_t d = 0; d < c.noisy.size(); ++d)
    for (std::size_t t = 0; t < c.noisy[d].turns.size(); ++t) {
      auto ex = extract_clean(c.noisy[d].turns[t]);
      const auto& orig = c.clean[d].turns[t].tokens;
      ok += std::equal(ex.begin(), ex.end(), orig.begin(), orig.end(),
                       [](const SurfaceToken& a, const SurfaceToken& b) { return a.form == b.form; });
    }
  return ok;
}

inline int cmd_synth(const SynthOptions& opt, std::ostream& out, std::ostream& log) {
  try {
    opt.spec.check();
    if (opt.turns < 0 || opt.turns_per_dialogue < 1) throw ArgumentError("--turns must be >= 0 and --turns-per-dialogue >= 1");
    if (opt.grammar_share < 0.0 || opt.grammar_share > 1.0) throw ArgumentError("--grammar-share must be in [0, 1]");
  } catch (const ArgumentError& e) {
    log << "error: " << e.what() << "\n";
    return kUsage;
  }
  try {
    fs::path tpath = opt.templates.value_or(fs::path(UTTPROBE_DATA_DIR) / "templates" / "polish_clean.conllu");
    std::vector<TurnTree> templates;
    for (auto& d : parse_conllu(read_file(tpath)))
      for (auto& t : d.turns) {
        auto flags = phenomenon_flags(t);
        if (std::any_of(flags.begin(), flags.end(), [](const PhenomenonFlags& f) { return f.any(); }))
          throw ArgumentError("template turn " + sent_id(t) + " is not clean");
        templates.push_back(std::move(t));
      }

    synth::CorpusPlan plan;
    plan.turns_per_dialogue = opt.turns_per_dialogue;
    plan.dialogues = (opt.turns + opt.turns_per_dialogue - 1) / opt.turns_per_dialogue;
    plan.total_turns = opt.turns;
    plan.grammar_share = opt.grammar_share;
    auto corpus = synth::generate_corpus(templates, opt.spec, plan);

    fs::create_directories(opt.out_dir);
    write_atomic(opt.out_dir / "corpus.conllu", serialize_conllu(corpus.noisy));
    write_atomic(opt.out_dir / "clean.conllu", serialize_conllu(corpus.clean));
    save(corpus.truth, opt.out_dir / "corpus.probe.json");

    auto built = build(corpus.noisy);
    const std::size_t turns = built.turn_count();
    const std::size_t ok = round_trip_ok(corpus);
    print_stats(stats(built), out);
    out << "round trip           " << ok << "/" << turns << "\n";
    out << "matches injector     " << (built == corpus.truth ? "yes" : "no") << "\n";
    log << "wrote " << (opt.out_dir / "corpus.conllu").string() << ", clean.conllu, corpus.probe.json\n";
    return ok == turns && built == corpus.truth ? kOk : kDataError;
  } catch (const ArgumentError& e) {
    log << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
  }
  return kDataError;
}

// ---------------------------------------------------------------- run

struct RunConfig {
  ProviderConfig provider;
  std::string template_ref = "en-string";  // shipped id or a path to a .tmpl file
  fs::path corpus;
  std::optional<fs::path> probe;  // default: built from the corpus
  fs::path runs_root = "runs";
  std::string name = "run";
  Task task = Task::WellStructure;
  std::uint64_t seed = 0;
  fs::path data_dir = UTTPROBE_DATA_DIR;

  fs::path run_dir() const { return runs_root / name; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["provider"] = provider.to_json();
    j["template"] = template_ref;
    j["corpus"] = corpus.string();
    j["probe"] = probe ? nlohmann::ordered_json(probe->string()) : nlohmann::ordered_json(nullptr);
    j["runs_root"] = runs_root.string();
    j["name"] = name;
    j["task"] = std::string(uttprobe::name(task));
    j["seed"] = seed;
    return j;
  }
};

/// Applies the keys present in a config document; unknown keys are errors.
inline void apply_config(RunConfig& cfg, const nlohmann::json& j) {
  auto str = [&](const nlohmann::json& obj, const char* key) -> std::optional<std::string> {
    if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
    if (!obj[key].is_string()) throw ArgumentError(std::string("config key '") + key + "' must be a string");
    return obj[key].get<std::string>();
  };
  auto integer = [&](const nlohmann::json& obj, const char* key) -> std::optional<long long> {
    if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
    if (!obj[key].is_number_integer()) throw ArgumentError(std::string("config key '") + key + "' must be an integer");
    return obj[key].get<long long>();
  };
  static const std::vector<std::string> top{"provider", "template", "corpus", "probe", "runs_root",
                                            "name",     "task",     "seed",   "data_dir"};
  static const std::vector<std::string> prov{"kind",       "base_url",    "model",      "api_key_env",
                                             "timeout_s",  "max_retries", "max_parallel", "max_tokens",
                                             "system_prompt", "script",   "cache_dir"};
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(top.begin(), top.end(), it.key()) == top.end())
      throw ArgumentError("unknown config key '" + it.key() + "'");

  if (j.contains("provider")) {
    const auto& p = j["provider"];
    if (!p.is_object()) throw ArgumentError("config key 'provider' must be an object");
    for (auto it = p.begin(); it != p.end(); ++it)
      if (std::find(prov.begin(), prov.end(), it.key()) == prov.end())
        throw ArgumentError("unknown config key 'provider." + it.key() + "'");
    if (auto v = str(p, "kind")) {
      auto k = parse_provider_kind(*v);
      if (!k) throw ArgumentError("unknown provider kind '" + *v + "'");
      cfg.provider.kind = *k;
    }
    if (auto v = str(p, "base_url")) cfg.provider.base_url = *v;
    if (auto v = str(p, "model")) cfg.provider.model = *v;
    if (auto v = str(p, "api_key_env")) cfg.provider.api_key_env = *v;
    if (auto v = integer(p, "timeout_s")) cfg.provider.timeout = std::chrono::seconds(*v);
    if (auto v = integer(p, "max_retries")) cfg.provider.max_retries = static_cast<int>(*v);
    if (auto v = integer(p, "max_parallel")) cfg.provider.max_parallel = static_cast<int>(*v);
    if (auto v = integer(p, "max_tokens")) cfg.provider.max_tokens = static_cast<int>(*v);
    if (auto v = str(p, "system_prompt")) cfg.provider.system_prompt = *v;
    if (auto v = str(p, "cache_dir")) cfg.provider.cache_dir = *v;
    if (p.contains("script")) {
      if (!p["script"].is_object()) throw ArgumentError("config key 'provider.script' must be an object");
      cfg.provider.script.clear();
      for (auto it = p["script"].begin(); it != p["script"].end(); ++it) {
        if (!it->is_string()) throw ArgumentError("script entries must be strings");
        cfg.provider.script[it.key()] = it->get<std::string>();
      }
    }
  }
  if (auto v = str(j, "template")) cfg.template_ref = *v;
  if (auto v = str(j, "corpus")) cfg.corpus = *v;
  if (auto v = str(j, "probe")) cfg.probe = fs::path(*v);
  if (auto v = str(j, "runs_root")) cfg.runs_root = *v;
  if (auto v = str(j, "name")) cfg.name = *v;
  if (auto v = str(j, "data_dir")) cfg.data_dir = *v;
  if (auto v = str(j, "task")) {
    auto t = parse_task(*v);
    if (!t) throw ArgumentError("unknown task '" + *v + "'");
    cfg.task = *t;
  }
  if (auto v = integer(j, "seed")) cfg.seed = static_cast<std::uint64_t>(*v);
}

/// A shipped template id ("en-json") or a path to a template file.
inline PromptTemplate resolve_template(const std::string& ref, const fs::path& data_dir) {
  fs::path p(ref);
  if (p.has_extension() && fs::exists(p)) return load_template(p);
  fs::path shipped = data_dir / "prompts" / (ref + ".tmpl");
  if (!fs::exists(shipped)) throw ArgumentError("no template '" + ref + "' (looked for " + shipped.string() + ")");
  return load_template(shipped);
}

/// String-mode template in the same language, used for split batches.
inline PromptTemplate string_counterpart(const PromptTemplate& t, const fs::path& data_dir) {
  fs::path p = data_dir / "prompts" / (t.language + "-string.tmpl");
  if (!fs::exists(p)) throw ArgumentError("no string-mode template for language '" + t.language + "'");
  return load_template(p);
}

struct PlannedBatch {
  TurnBatch batch;
  const PromptTemplate* tmpl = nullptr;
  bool split = false;
  std::string file;  // relative to responses/
};

struct RunOutcome {
  int exit_code = kOk;
  std::size_t batches = 0;
  std::size_t turns = 0;
  std::size_t cached = 0;
  std::size_t provider_calls = 0;
  std::size_t failed = 0;
  std::vector<std::string> split_dialogues;
  int peak_in_flight = 0;
};

namespace detail {

inline nlohmann::ordered_json response_json(const PlannedBatch& pb, const std::optional<GenerationResult>& res,
                                            const ParsedResponse& parsed, const std::optional<std::string>& error) {
  nlohmann::ordered_json j;
  j["dialogue_id"] = pb.batch.dialogue_id;
  j["mode"] = std::string(name(pb.batch.mode));
  j["template"] = pb.tmpl->id;
  std::vector<int> idx;
  for (const auto& t : pb.batch.turns) idx.push_back(t.turn_index);
  j["turn_indices"] = idx;
  j["split"] = pb.split;
  j["request_hash"] = res ? nlohmann::ordered_json(res->request_hash) : nlohmann::ordered_json(nullptr);
  j["provider"] = res ? nlohmann::ordered_json(res->provider) : nlohmann::ordered_json(nullptr);
  j["raw_text"] = res ? nlohmann::ordered_json(res->text) : nlohmann::ordered_json(nullptr);
  j["error"] = error ? nlohmann::ordered_json(*error) : nlohmann::ordered_json(nullptr);
  j["degraded"] = parsed.degraded;
  j["notes"] = parsed.notes;
  auto hyps = nlohmann::ordered_json::array();
  for (const auto& h : parsed.hypotheses) hyps.push_back({{"turn_index", h.turn_index}, {"text", h.text}});
  j["hypotheses"] = std::move(hyps);
  return j;
}

}  // namespace detail

/// Runs every turn of the corpus through the provider. `provider` overrides
/// the one built from the config (tests inject instrumented providers).
inline RunOutcome run_corpus(const RunConfig& cfg, std::ostream& log, std::shared_ptr<Provider> provider = nullptr,
                             Gateway::Sleeper sleeper = nullptr) {
  RunOutcome outcome;
  const std::string started = detail::utc_now();

  if (!fs::exists(cfg.corpus)) {
    log << "error: corpus '" << cfg.corpus.string() << "' does not exist\n";
    outcome.exit_code = kDataError;
    return outcome;
  }
  if (cfg.probe && !fs::exists(*cfg.probe)) {
    log << "error: probe dataset '" << cfg.probe->string() << "' does not exist\n";
    outcome.exit_code = kDataError;
    return outcome;
  }

  std::vector<Dialogue> corpus;
  std::shared_ptr<ProbeDataset> ds;
  PromptTemplate tmpl;
  std::optional<PromptTemplate> fallback;
  try {
    corpus = parse_conllu(read_file(cfg.corpus));
    ds = std::make_shared<ProbeDataset>(cfg.probe ? load(*cfg.probe) : build(corpus));
    for (const auto& d : corpus)
      for (const auto& t : d.turns) {
        const auto* gold = ds->find(d.id, t.turn_index);
        if (!gold || gold->size() != t.size())
          throw SchemaError("turn " + sent_id(t) + " has no matching probe dataset turn");
      }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kDataError;
    return outcome;
  }
  try {
    cfg.provider.check();
    tmpl = resolve_template(cfg.template_ref, cfg.data_dir);
    if (!provider) provider = make_provider(cfg.provider, ds);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    outcome.exit_code = kUsage;
    return outcome;
  }

  // Plan batches: a whole dialogue per JSON request unless it would not fit
  // in max_tokens, in which case its turns go out one by one in string mode.
  std::vector<PlannedBatch> plan;
  for (const auto& d : corpus) {
    std::vector<BatchTurn> turns;
    for (const auto& t : d.turns) turns.push_back({t.turn_index, turn_text(t)});
    if (turns.empty()) continue;
    bool split = false;
    if (tmpl.mode == PromptMode::Json && cfg.provider.max_tokens &&
        detail::estimate_tokens(turns) > static_cast<std::size_t>(*cfg.provider.max_tokens)) {
      split = true;
      if (!fallback) {
        try {
          fallback = string_counterpart(tmpl, cfg.data_dir);
        } catch (const std::exception& e) {
          log << "error: " << e.what() << "\n";
          outcome.exit_code = kUsage;
          return outcome;
        }
      }
      log << "split: dialogue " << d.id << " (~" << detail::estimate_tokens(turns) << " tokens > max_tokens "
          << *cfg.provider.max_tokens << ") sent as " << turns.size() << " string-mode requests\n";
      outcome.split_dialogues.push_back(d.id);
    }
    if (tmpl.mode == PromptMode::Json && !split) {
      plan.push_back({{d.id, PromptMode::Json, turns}, &tmpl, false,
                      detail::safe_name(d.id) + "__t" + std::to_string(turns.front().turn_index) + ".json"});
    } else {
      const PromptTemplate* t = split ? &*fallback : &tmpl;
      for (const auto& bt : turns)
        plan.push_back({{d.id, PromptMode::String, {bt}}, t, split,
                        detail::safe_name(d.id) + "__t" + std::to_string(bt.turn_index) + ".json"});
    }
  }

  const fs::path run_dir = cfg.run_dir();
  fs::create_directories(run_dir / "responses");

  Gateway gateway(cfg.provider, provider);
  if (sleeper) gateway.set_sleeper(std::move(sleeper));

  struct Slot {
    bool done = false;
    bool cached = false;
    bool degraded = false;
    std::string request_hash;
    std::string provider;
    long long latency_ms = 0;
    std::optional<std::string> error;
  };
  std::vector<Slot> slots(plan.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mu;
  std::optional<std::string> fatal;

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t k = next.fetch_add(1);
      if (k >= plan.size()) return;
      const auto& pb = plan[k];
      GenerationRequest req;
      req.model = cfg.provider.model;
      req.max_tokens = cfg.provider.max_tokens;
      RequestContext ctx;
      ctx.dialogue_id = pb.batch.dialogue_id;
      ctx.mode = pb.batch.mode;
      for (const auto& t : pb.batch.turns) ctx.turn_indices.push_back(t.turn_index);

      std::optional<GenerationResult> res;
      std::optional<std::string> error;
      ParsedResponse parsed;
      try {
        req.prompt = render(*pb.tmpl, pb.batch);
        res = gateway.generate(req, ctx);
        parsed = parse_response(*pb.tmpl, pb.batch, res->text);
      } catch (const ProviderError& e) {
        if (e.kind() == ProviderErrorKind::Transient || e.kind() == ProviderErrorKind::Timeout) {
          error = std::string("no response: ") + e.what();
          parsed = parse_response(*pb.tmpl, pb.batch, "");
          parsed.notes.push_back(*error);
        } else {
          std::lock_guard lock(mu);
          if (!fatal) fatal = e.what();
          abort = true;
          return;
        }
      }
      write_atomic(run_dir / "responses" / pb.file, detail::response_json(pb, res, parsed, error).dump(2) + "\n");
      std::lock_guard lock(mu);
      auto& s = slots[k];
      s.done = true;
      s.degraded = parsed.degraded;
      s.error = error;
      if (res) {
        s.cached = res->cached;
        s.request_hash = res->request_hash;
        s.provider = res->provider;
        s.latency_ms = res->latency.count();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(cfg.provider.max_parallel, static_cast<int>(plan.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  nlohmann::ordered_json manifest;
  manifest["tool"] = "uttprobe";
  manifest["version"] = std::string(kVersion);
  manifest["config"] = cfg.to_json();
  manifest["template"] = {{"id", tmpl.id}, {"language", tmpl.language}, {"mode", std::string(name(tmpl.mode))}};
  manifest["started_at"] = started;
  manifest["finished_at"] = detail::utc_now();
  auto turns = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const auto& s = slots[k];
    if (!s.done) continue;
    ++outcome.batches;
    outcome.cached += s.cached;
    outcome.failed += s.error.has_value();
    for (const auto& bt : plan[k].batch.turns) {
      ++outcome.turns;
      nlohmann::ordered_json t;
      t["dialogue_id"] = plan[k].batch.dialogue_id;
      t["turn_index"] = bt.turn_index;
      t["response_file"] = "responses/" + plan[k].file;
      t["request_hash"] = s.request_hash;
      t["provider"] = s.provider;
      t["cached"] = s.cached;
      t["latency_ms"] = s.latency_ms;
      t["degraded"] = s.degraded;
      t["split"] = plan[k].split;
      t["no_response"] = s.error.has_value();
      turns.push_back(std::move(t));
    }
  }
  outcome.provider_calls = static_cast<std::size_t>(gateway.provider_calls());
  outcome.peak_in_flight = gateway.peak_in_flight();
  manifest["complete"] = !fatal.has_value() && outcome.batches == plan.size();
  manifest["error"] = fatal ? nlohmann::ordered_json(*fatal) : nlohmann::ordered_json(nullptr);
  manifest["split_dialogues"] = outcome.split_dialogues;
  manifest["summary"] = {{"batches", outcome.batches},
                         {"turns", outcome.turns},
                         {"cached", outcome.cached},
                         {"provider_calls", outcome.provider_calls},
                         {"no_response", outcome.failed}};
  manifest["turns"] = std::move(turns);
  write_atomic(run_dir / "manifest.json", manifest.dump(2) + "\n");

  log << "run " << cfg.name << ": " << outcome.turns << " turns in " << outcome.batches << " requests ("
      << outcome.cached << " cached, " << outcome.failed << " without response)\n";
  if (fatal) {
    log << "error: provider: " << *fatal << " (partial manifest written)\n";
    outcome.exit_code = kProviderError;
  }
  return outcome;
}

inline int cmd_run(const RunConfig& cfg, std::ostream& log) { return run_corpus(cfg, log).exit_code; }

// ---------------------------------------------------------------- score

struct ScoreOptions {
  fs::path run_dir;
  std::optional<fs::path> probe;  // default: the manifest's probe, else built from its corpus
  std::optional<Task> task;       // default: the manifest's task
};

/// Hypotheses recorded in a run directory, in manifest order.
inline std::vector<TurnHypothesis> load_hypotheses(const fs::path& run_dir, const nlohmann::json& manifest) {
  std::vector<TurnHypothesis> out;
  std::map<std::string, nlohmann::json> files;
  for (const auto& t : manifest.at("turns")) {
    const auto file = t.at("response_file").get<std::string>();
    auto it = files.find(file);
    if (it == files.end()) it = files.emplace(file, nlohmann::json::parse(read_file(run_dir / file))).first;
    const auto& resp = it->second;
    const int ti = t.at("turn_index").get<int>();
    TurnHypothesis h{t.at("dialogue_id").get<std::string>(), ti, "", resp.at("degraded").get<bool>()};
    bool found = false;
    for (const auto& hyp : resp.at("hypotheses"))
      if (hyp.at("turn_index").get<int>() == ti) {
        h.text = hyp.at("text").get<std::string>();
        found = true;
      }
    if (!found) throw SchemaError(file + " has no hypothesis for turn " + std::to_string(ti));
    out.push_back(std::move(h));
  }
  return out;
}

inline int cmd_score(const ScoreOptions& opt, std::ostream& log) {
  nlohmann::json manifest;
  ProbeDataset ds;
  Task task = Task::WellStructure;
  std::vector<TurnHypothesis> hyps;
  std::string model, template_id;
  try {
    manifest = nlohmann::json::parse(read_file(opt.run_dir / "manifest.json"));
    const auto& cfg = manifest.at("config");
    if (opt.probe) {
      ds = load(*opt.probe);
    } else if (cfg.contains("probe") && cfg["probe"].is_string()) {
      ds = load(cfg["probe"].get<std::string>());
    } else {
      ds = build(parse_conllu(read_file(cfg.at("corpus").get<std::string>())));
    }
    if (opt.task) {
      task = *opt.task;
    } else if (auto t = parse_task(cfg.at("task").get<std::string>())) {
      task = *t;
    }
    model = cfg.at("provider").at("model").get<std::string>();
    template_id = manifest.at("template").at("id").get<std::string>();
    hyps = load_hypotheses(opt.run_dir, manifest);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kDataError;
  }

  ScoredRun run;
  try {
    run = score_run(hyps, ds, task, model, template_id);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kDataError;
  }
  const fs::path reports = opt.run_dir / "reports";
  write_atomic(reports / "report.json", report_json(run).dump(2) + "\n");
  write_atomic(reports / "table1.csv", table1_csv(run));
  write_atomic(reports / "table2.csv", table2_csv(run));
  write_atomic(reports / "table3.csv", table3_csv(run));
  write_atomic(reports / "report.md", report_md(run));
  log << "wrote " << reports.string() << " (" << run.results.size() << " turns scored)\n";
  if (!run.unmatched.empty()) {
    log << "error: " << run.unmatched.size() << " turn(s) unmatched, first " << run.unmatched.front() << "\n";
    return kDataError;
  }
  return kOk;
}

}  // namespace uttprobe

#endif  // UTTPROBE_RUNNER_HPP
