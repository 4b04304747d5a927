#ifndef UTTPROBE_GATEWAY_HPP
#define UTTPROBE_GATEWAY_HPP

// Chat-completion access with a content-addressed disk cache, retries and a
// bound on in-flight requests. Besides the HTTP provider there are three
// offline providers that answer from a probe dataset:
//
//   mock-identity   echoes the INPUT block of the prompt
//   mock-gold       returns the gold clean text of each addressed turn
//   mock-scripted   applies a per-turn transformation, addressed "dialogue:turn"
//                   or "*": drop-discourse-flagged, drop-all-flagged, echo,
//                   empty, gold-plus-noise:K
//
// Cache layout: <cache_dir>/<first two hash chars>/<hash>.json holding the
// request, the response text and a timestamp. API keys are read from the
// environment at call time and never written anywhere.

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "uttprobe/error.hpp"
#include "uttprobe/io.hpp"
#include "uttprobe/probe_dataset.hpp"
#include "uttprobe/prompt.hpp"

namespace uttprobe {

struct GenerationRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  int n_completions = 1;
  std::optional<int> max_tokens;
};

struct GenerationResult {
  std::string text;
  std::string provider;
  bool cached = false;
  std::chrono::milliseconds latency{0};
  std::string request_hash;
};

enum class ProviderKind { HttpChat, MockGold, MockIdentity, MockScripted };

inline std::string_view name(ProviderKind k) {
  switch (k) {
    case ProviderKind::HttpChat: return "http-chat";
    case ProviderKind::MockGold: return "mock-gold";
    case ProviderKind::MockIdentity: return "mock-identity";
    case ProviderKind::MockScripted: return "mock-scripted";
  }
  return "unknown";
}

inline std::optional<ProviderKind> parse_provider_kind(std::string_view s) {
  for (auto k : {ProviderKind::HttpChat, ProviderKind::MockGold, ProviderKind::MockIdentity, ProviderKind::MockScripted})
    if (name(k) == s) return k;
  return std::nullopt;
}

struct ProviderConfig {
  ProviderKind kind = ProviderKind::MockIdentity;
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "mock";
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{120};
  int max_retries = 5;
  int max_parallel = 4;
  std::optional<int> max_tokens;
  std::optional<std::string> system_prompt;
  std::map<std::string, std::string> script;  // mock-scripted only
  std::filesystem::path cache_dir;            // empty: in-memory cache only

  /// Everything except secrets; the key itself is never held here.
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = std::string(name(kind));
    j["base_url"] = base_url;
    j["model"] = model;
    j["api_key_env"] = api_key_env;
    j["timeout_s"] = timeout.count();
    j["max_retries"] = max_retries;
    j["max_parallel"] = max_parallel;
    j["max_tokens"] = max_tokens ? nlohmann::ordered_json(*max_tokens) : nlohmann::ordered_json(nullptr);
    j["system_prompt"] = system_prompt ? nlohmann::ordered_json(*system_prompt) : nlohmann::ordered_json(nullptr);
    j["script"] = script;
    j["cache_dir"] = cache_dir.string();
    return j;
  }

  void check() const {
    if (max_retries < 0) throw ArgumentError("max_retries must be >= 0");
    if (max_parallel < 1) throw ArgumentError("max_parallel must be >= 1");
    if (max_tokens && *max_tokens < 1) throw ArgumentError("max_tokens must be >= 1");
    if (model.empty()) throw ArgumentError("model must not be empty");
  }
};

/// What the request is about. Only the offline providers look at it.
struct RequestContext {
  std::string dialogue_id;
  std::vector<int> turn_indices;
  PromptMode mode = PromptMode::String;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string name() const = 0;
  /// Folded into the request hash; differs whenever answers could differ.
  virtual std::string identity() const { return name(); }
  /// True when the answer depends on the turn address, not only the prompt.
  virtual bool addressed() const { return false; }
  virtual std::string complete(const GenerationRequest& req, const RequestContext& ctx) = 0;
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline nlohmann::ordered_json request_json(const std::string& provider, const GenerationRequest& r) {
  nlohmann::ordered_json j;
  j["provider"] = provider;
  j["model"] = r.model;
  j["prompt"] = r.prompt;
  j["temperature"] = r.temperature;
  j["n"] = r.n_completions;
  j["max_tokens"] = r.max_tokens ? nlohmann::ordered_json(*r.max_tokens) : nlohmann::ordered_json(nullptr);
  return j;
}

inline std::string request_hash(const std::string& provider, const GenerationRequest& r,
                                const RequestContext* address = nullptr) {
  auto j = request_json(provider, r);
  if (address) {
    j["dialogue_id"] = address->dialogue_id;
    j["turns"] = address->turn_indices;
  }
  return sha256_hex(j.dump());
}

// ---------------------------------------------------------------- HTTP chat

class HttpChatProvider : public Provider {
 public:
  explicit HttpChatProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
    auto scheme_end = cfg_.base_url.find("://");
    if (scheme_end == std::string::npos) throw ArgumentError("base_url must start with http:// or https://");
    auto path_start = cfg_.base_url.find('/', scheme_end + 3);
    origin_ = cfg_.base_url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  std::string name() const override { return "http-chat"; }
  std::string identity() const override { return "http-chat " + cfg_.base_url; }

  std::string complete(const GenerationRequest& req, const RequestContext&) override {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (!key || !*key)
      throw ProviderError(ProviderErrorKind::AuthMissing, "environment variable " + cfg_.api_key_env + " is not set");

    nlohmann::json body;
    body["model"] = req.model;
    body["messages"] = nlohmann::json::array();
    if (cfg_.system_prompt) body["messages"].push_back({{"role", "system"}, {"content", *cfg_.system_prompt}});
    body["messages"].push_back({{"role", "user"}, {"content", req.prompt}});
    body["temperature"] = req.temperature;
    body["n"] = req.n_completions;
    if (req.max_tokens) body["max_tokens"] = *req.max_tokens;

    httplib::Client cli(origin_);
    cli.set_connection_timeout(cfg_.timeout);
    cli.set_read_timeout(cfg_.timeout);
    cli.set_write_timeout(cfg_.timeout);
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
    auto res = cli.Post(prefix_ + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::Write || err == httplib::Error::ConnectionTimeout)
        throw ProviderError(ProviderErrorKind::Timeout, "request timed out: " + httplib::to_string(err));
      throw ProviderError(ProviderErrorKind::Transient, "connection failed: " + httplib::to_string(err));
    }
    if (res->status == 429 || res->status >= 500)
      throw ProviderError(ProviderErrorKind::Transient, "HTTP " + std::to_string(res->status));
    if (res->status == 401 || res->status == 403)
      throw ProviderError(ProviderErrorKind::AuthMissing, "HTTP " + std::to_string(res->status) + ": " + res->body);
    if (res->status >= 400)
      throw ProviderError(ProviderErrorKind::Fatal, "HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
      auto j = nlohmann::json::parse(res->body);
      const auto& content = j.at("choices").at(0).at("message").at("content");
      return content.is_string() ? content.get<std::string>() : "";
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(ProviderErrorKind::Fatal, std::string("unexpected response shape: ") + e.what());
    }
  }

 private:
  ProviderConfig cfg_;
  std::string origin_;
  std::string prefix_;
};

// ---------------------------------------------------------------- mocks

namespace detail {

inline std::string join_tokens(const ProbeTurn& turn, const std::function<bool(const ProbeToken&)>& keep) {
  std::vector<SurfaceToken> toks;
  for (const auto& t : turn)
    if (keep(t)) toks.push_back({static_cast<int>(toks.size()) + 1, t.token, 0, t.dep_type, std::nullopt});
  return detokenize(toks);
}

inline std::string wrap_turns(const RequestContext& ctx, const std::vector<std::string>& texts) {
  if (ctx.mode == PromptMode::String) return texts.empty() ? "" : texts.front();
  return json_turn_list(ctx.dialogue_id, texts);
}

/// The turn texts carried by a rendered prompt's INPUT block.
inline std::vector<std::string> input_turns(const std::string& prompt, const RequestContext& ctx) {
  std::string block = extract_input_block(prompt);
  if (ctx.mode == PromptMode::String) return {block};
  try {
    auto j = nlohmann::json::parse(block);
    if (j.contains(ctx.dialogue_id)) return j[ctx.dialogue_id].get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
  }
  throw ProviderError(ProviderErrorKind::Fatal, "prompt INPUT block is not a turn list for " + ctx.dialogue_id);
}

}  // namespace detail

class MockIdentityProvider : public Provider {
 public:
  std::string name() const override { return "mock-identity"; }
  std::string complete(const GenerationRequest& req, const RequestContext&) override {
    return extract_input_block(req.prompt);
  }
};

class MockGoldProvider : public Provider {
 public:
  explicit MockGoldProvider(std::shared_ptr<const ProbeDataset> ds) : ds_(std::move(ds)) {}
  std::string name() const override { return "mock-gold"; }
  bool addressed() const override { return true; }

  std::string complete(const GenerationRequest&, const RequestContext& ctx) override {
    std::vector<std::string> texts;
    for (int ti : ctx.turn_indices) {
      const auto* turn = ds_->find(ctx.dialogue_id, ti);
      if (!turn) throw ProviderError(ProviderErrorKind::Fatal, "no gold turn " + ctx.dialogue_id + ":" + std::to_string(ti));
      texts.push_back(detail::join_tokens(*turn, [](const ProbeToken& t) { return t.status; }));
    }
    return detail::wrap_turns(ctx, texts);
  }

 private:
  std::shared_ptr<const ProbeDataset> ds_;
};

inline constexpr std::string_view kNoiseWord = "xyzzy";

class MockScriptedProvider : public Provider {
 public:
  MockScriptedProvider(std::shared_ptr<const ProbeDataset> ds, std::map<std::string, std::string> script)
      : ds_(std::move(ds)), script_(std::move(script)) {
    for (const auto& [addr, op] : script_) parse_op(op);
  }

  std::string name() const override { return "mock-scripted"; }
  std::string identity() const override { return "mock-scripted " + nlohmann::json(script_).dump(); }
  bool addressed() const override { return true; }

  std::string complete(const GenerationRequest& req, const RequestContext& ctx) override {
    std::vector<std::string> texts;
    std::optional<std::vector<std::string>> inputs;
    for (std::size_t k = 0; k < ctx.turn_indices.size(); ++k) {
      const int ti = ctx.turn_indices[k];
      const std::string addr = ctx.dialogue_id + ":" + std::to_string(ti);
      auto it = script_.find(addr);
      if (it == script_.end()) it = script_.find("*");
      if (it == script_.end()) throw ProviderError(ProviderErrorKind::Script, "script does not address turn " + addr);
      const auto [op, noise] = parse_op(it->second);
      const auto* turn = ds_->find(ctx.dialogue_id, ti);
      if (!turn && op != "echo" && op != "empty")
        throw ProviderError(ProviderErrorKind::Script, "no gold turn " + addr);

      if (op == "echo") {
        if (!inputs) inputs = detail::input_turns(req.prompt, ctx);
        texts.push_back(k < inputs->size() ? (*inputs)[k] : "");
      } else if (op == "empty") {
        texts.emplace_back();
      } else if (op == "drop-discourse-flagged") {
        texts.push_back(detail::join_tokens(*turn, [](const ProbeToken& t) {
          return !(t.speech_type && t.speech_type->discourse);
        }));
      } else if (op == "drop-all-flagged") {
        texts.push_back(detail::join_tokens(*turn, [](const ProbeToken& t) { return t.status; }));
      } else {
        std::string s = detail::join_tokens(*turn, [](const ProbeToken& t) { return t.status; });
        for (int i = 0; i < noise; ++i) s += (s.empty() ? "" : " ") + std::string(kNoiseWord);
        texts.push_back(s);
      }
    }
    return detail::wrap_turns(ctx, texts);
  }

  /// ("gold-plus-noise", k) or (op, 0); throws on an unknown transformation.
  static std::pair<std::string, int> parse_op(const std::string& op) {
    if (op == "echo" || op == "empty" || op == "drop-discourse-flagged" || op == "drop-all-flagged") return {op, 0};
    const std::string prefix = "gold-plus-noise";
    if (op.rfind(prefix, 0) == 0) {
      std::string rest = op.substr(prefix.size());
      if (rest.empty()) return {prefix, 1};
      if (rest.front() == ':' || rest.front() == '(') {
        rest = rest.substr(1);
        if (!rest.empty() && rest.back() == ')') rest.pop_back();
        int k = 0;
        try {
          std::size_t used = 0;
          k = std::stoi(rest, &used);
          if (used != rest.size() || k < 0) throw std::invalid_argument(rest);
        } catch (const std::exception&) {
          throw ProviderError(ProviderErrorKind::Script, "bad noise count in '" + op + "'");
        }
        return {prefix, k};
      }
    }
    throw ProviderError(ProviderErrorKind::Script, "unknown script transformation '" + op + "'");
  }

 private:
  std::shared_ptr<const ProbeDataset> ds_;
  std::map<std::string, std::string> script_;
};

inline std::shared_ptr<Provider> make_provider(const ProviderConfig& cfg, std::shared_ptr<const ProbeDataset> ds) {
  auto need_ds = [&] {
    if (!ds) throw ArgumentError(std::string(name(cfg.kind)) + " needs a probe dataset");
  };
  switch (cfg.kind) {
    case ProviderKind::HttpChat: return std::make_shared<HttpChatProvider>(cfg);
    case ProviderKind::MockIdentity: return std::make_shared<MockIdentityProvider>();
    case ProviderKind::MockGold: need_ds(); return std::make_shared<MockGoldProvider>(ds);
    case ProviderKind::MockScripted: need_ds(); return std::make_shared<MockScriptedProvider>(ds, cfg.script);
  }
  throw ArgumentError("unknown provider kind");
}

// ---------------------------------------------------------------- gateway

class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path path_for(const std::string& hash) const { return dir_ / hash.substr(0, 2) / (hash + ".json"); }

  std::optional<std::string> get(const std::string& hash) const {
    if (dir_.empty()) {
      std::lock_guard lock(mu_);
      auto it = mem_.find(hash);
      return it == mem_.end() ? std::nullopt : std::optional(it->second);
    }
    auto p = path_for(hash);
    std::error_code ec;
    if (!std::filesystem::exists(p, ec)) return std::nullopt;
    try {
      auto j = nlohmann::json::parse(read_file(p));
      return j.at("response").at("text").get<std::string>();
    } catch (const std::exception&) {
      return std::nullopt;  // unreadable entries are treated as misses and overwritten
    }
  }

  void put(const std::string& hash, const nlohmann::ordered_json& request, const std::string& text) {
    if (dir_.empty()) {
      std::lock_guard lock(mu_);
      mem_[hash] = text;
      return;
    }
    nlohmann::ordered_json j;
    j["hash"] = hash;
    j["request"] = request;
    j["response"] = {{"text", text}};
    j["timestamp"] = static_cast<long long>(std::time(nullptr));
    write_atomic(path_for(hash), j.dump(2) + "\n");
  }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> mem_;
};

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(ProviderConfig cfg, std::shared_ptr<Provider> provider)
      : cfg_(std::move(cfg)),
        provider_(std::move(provider)),
        cache_(cfg_.cache_dir),
        slots_(std::min(cfg_.max_parallel, 1024)),
        sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    cfg_.check();
  }

  void set_sleeper(Sleeper s) { sleeper_ = std::move(s); }

  const ProviderConfig& config() const { return cfg_; }
  const Provider& provider() const { return *provider_; }
  int peak_in_flight() const { return peak_.load(); }
  int provider_calls() const { return calls_.load(); }

  GenerationResult generate(const GenerationRequest& req, const RequestContext& ctx = {}) {
    const auto start = std::chrono::steady_clock::now();
    GenerationResult out;
    out.provider = provider_->name();
    const std::string ident = provider_->identity();
    out.request_hash = request_hash(ident, req, provider_->addressed() ? &ctx : nullptr);

    if (auto hit = cache_.get(out.request_hash)) {
      out.text = *hit;
      out.cached = true;
      out.latency = elapsed(start);
      return out;
    }

    for (int attempt = 0;; ++attempt) {
      try {
        out.text = call(req, ctx);
        break;
      } catch (const ProviderError& e) {
        if (!e.transient() || attempt >= cfg_.max_retries) throw;
        sleeper_(backoff(attempt));
      }
    }
    auto stored = request_json(ident, req);
    if (provider_->addressed()) {
      stored["dialogue_id"] = ctx.dialogue_id;
      stored["turns"] = ctx.turn_indices;
    }
    cache_.put(out.request_hash, stored, out.text);
    out.latency = elapsed(start);
    return out;
  }

  /// 1s * 2^attempt plus up to 25% jitter.
  std::chrono::milliseconds backoff(int attempt) {
    const long long base = 1000LL << std::min(attempt, 20);
    std::lock_guard lock(jitter_mu_);
    std::uniform_int_distribution<long long> jitter(0, base / 4);
    return std::chrono::milliseconds(base + jitter(jitter_rng_));
  }

 private:
  static std::chrono::milliseconds elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  }

  std::string call(const GenerationRequest& req, const RequestContext& ctx) {
    slots_.acquire();
    struct Release {
      Gateway* g;
      ~Release() {
        g->in_flight_.fetch_sub(1);
        g->slots_.release();
      }
    } release{this};
    int now = in_flight_.fetch_add(1) + 1;
    int prev = peak_.load();
    while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
    }
    calls_.fetch_add(1);
    return provider_->complete(req, ctx);
  }

  ProviderConfig cfg_;
  std::shared_ptr<Provider> provider_;
  DiskCache cache_;
  std::counting_semaphore<1024> slots_;
  Sleeper sleeper_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  std::atomic<int> calls_{0};
  std::mutex jitter_mu_;
  std::mt19937_64 jitter_rng_{std::random_device{}()};
};

}  // namespace uttprobe

#endif  // UTTPROBE_GATEWAY_HPP
