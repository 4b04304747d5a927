#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uttprobe/runner.hpp"

using namespace uttprobe;

int main(int argc, char** argv) {
  CLI::App app{"Probe LLM extraction of well-structured utterances from spoken dialogue transcripts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // build-dataset
  auto* build_cmd = app.add_subcommand("build-dataset", "Build the probe dataset JSON from a CoNLL-U corpus");
  std::string build_in, build_out;
  build_cmd->add_option("conllu", build_in, "Input CoNLL-U file")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("-o,--out", build_out, "Output probe dataset path")->required();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic noisy corpus with known ground truth");
  SynthOptions so;
  std::string so_out = "synth", so_templates;
  synth_cmd->add_option("--seed", so.spec.seed, "RNG seed")->capture_default_str();
  synth_cmd->add_option("--turns", so.turns, "Number of turns")->capture_default_str();
  synth_cmd->add_option("--turns-per-dialogue", so.turns_per_dialogue)->capture_default_str();
  synth_cmd->add_option("--discourse-rate", so.spec.discourse_rate, "Filler probability per eligible gap")
      ->capture_default_str();
  synth_cmd->add_option("--reparandum-rate", so.spec.reparandum_rate, "Disfluency probability per clause")
      ->capture_default_str();
  synth_cmd->add_option("--restart-rate", so.spec.restart_rate, "False-start probability per turn")
      ->capture_default_str();
  synth_cmd->add_option("--grammar-share", so.grammar_share, "Share of turns drawn from the nonce grammar")
      ->capture_default_str();
  synth_cmd->add_option("--templates", so_templates, "Clean CoNLL-U template turns")->check(CLI::ExistingFile);
  synth_cmd->add_option("-o,--out", so_out, "Output directory")->capture_default_str();

  // run
  auto* run_cmd = app.add_subcommand("run", "Query a provider for every turn of a corpus");
  std::string config_path, kind, base_url, model, api_key_env, cache_dir, tmpl, corpus, probe, runs_root, name,
      task, script_path;
  int timeout_s = 0, max_retries = 0, max_parallel = 0, max_tokens = 0;
  std::uint64_t seed = 0;
  run_cmd->add_option("-c,--config", config_path, "JSON config file; flags override its keys")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--provider", kind, "http-chat | mock-gold | mock-identity | mock-scripted");
  run_cmd->add_option("--base-url", base_url);
  run_cmd->add_option("--model", model);
  run_cmd->add_option("--api-key-env", api_key_env, "Name of the environment variable holding the API key");
  run_cmd->add_option("--timeout", timeout_s, "Request timeout in seconds");
  run_cmd->add_option("--max-retries", max_retries);
  run_cmd->add_option("--max-parallel", max_parallel);
  run_cmd->add_option("--max-tokens", max_tokens);
  run_cmd->add_option("--cache-dir", cache_dir);
  run_cmd->add_option("--script", script_path, "mock-scripted: JSON object mapping 'dialogue:turn' or '*' to a transformation")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--template", tmpl, "Template id (en-string, en-json, pl-string, pl-json) or file");
  run_cmd->add_option("--corpus", corpus, "Noisy CoNLL-U corpus");
  run_cmd->add_option("--probe", probe, "Probe dataset JSON (default: built from the corpus)");
  run_cmd->add_option("--runs-root", runs_root);
  run_cmd->add_option("--name", name, "Run name");
  run_cmd->add_option("--task", task, "well-structure | discourse | reparandum | restart | all");
  run_cmd->add_option("--seed", seed);

  // score
  auto* score_cmd = app.add_subcommand("score", "Score a run directory and write reports");
  std::string score_dir, score_probe, score_task;
  score_cmd->add_option("run_dir", score_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  score_cmd->add_option("--probe", score_probe, "Probe dataset JSON (default: the one the run used)");
  score_cmd->add_option("--task", score_task);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  if (*build_cmd) return cmd_build_dataset(build_in, build_out, std::cerr);

  if (*synth_cmd) {
    so.out_dir = so_out;
    if (!so_templates.empty()) so.templates = so_templates;
    return cmd_synth(so, std::cout, std::cerr);
  }

  if (*run_cmd) {
    RunConfig cfg;
    try {
      if (!config_path.empty()) apply_config(cfg, nlohmann::json::parse(read_file(config_path)));
      nlohmann::json over = nlohmann::json::object();
      auto& prov = over["provider"] = nlohmann::json::object();
      auto set = [&](nlohmann::json& obj, const char* flag, const char* key, const auto& value) {
        if (run_cmd->count(flag) > 0) obj[key] = value;
      };
      set(prov, "--provider", "kind", kind);
      set(prov, "--base-url", "base_url", base_url);
      set(prov, "--model", "model", model);
      set(prov, "--api-key-env", "api_key_env", api_key_env);
      set(prov, "--timeout", "timeout_s", timeout_s);
      set(prov, "--max-retries", "max_retries", max_retries);
      set(prov, "--max-parallel", "max_parallel", max_parallel);
      set(prov, "--max-tokens", "max_tokens", max_tokens);
      set(prov, "--cache-dir", "cache_dir", cache_dir);
      if (!script_path.empty()) prov["script"] = nlohmann::json::parse(read_file(script_path));
      set(over, "--template", "template", tmpl);
      set(over, "--corpus", "corpus", corpus);
      set(over, "--probe", "probe", probe);
      set(over, "--runs-root", "runs_root", runs_root);
      set(over, "--name", "name", name);
      set(over, "--task", "task", task);
      set(over, "--seed", "seed", seed);
      apply_config(cfg, over);
      if (cfg.corpus.empty()) throw ArgumentError("a corpus is required (--corpus or config key 'corpus')");
      if (cfg.provider.cache_dir.empty()) cfg.provider.cache_dir = cfg.runs_root / "cache";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kUsage;
    }
    return cmd_run(cfg, std::cerr);
  }

  if (*score_cmd) {
    ScoreOptions opt;
    opt.run_dir = score_dir;
    if (!score_probe.empty()) opt.probe = score_probe;
    if (!score_task.empty()) {
      opt.task = parse_task(score_task);
      if (!opt.task) {
        std::cerr << "error: unknown task '" << score_task << "'\n";
        return kUsage;
      }
    }
    return cmd_score(opt, std::cerr);
  }
  return kUsage;
}
