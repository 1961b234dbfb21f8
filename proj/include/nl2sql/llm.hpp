#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/util.hpp"

namespace nl2sql {

// ---------------------------------------------------------------------------
// Wire types
// ---------------------------------------------------------------------------

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.0;
  int num_samples = 1;
  int max_output_len = 256;
  std::vector<std::string> stop_sequences;
};

struct Sample {
  std::string text;
  std::optional<double> logprob;  // sequence log-probability when the backend reports one
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct CompletionResponse {
  std::vector<Sample> samples;
  std::string model_id;
  Usage usage;
};

namespace detail {

// Greedy decoding yields identical samples, so multiple draws collapse
// onto a single one: at temperature 0 the effective sample count is 1.
inline CompletionRequest normalized(CompletionRequest req) {
  if (req.num_samples < 1) throw ConfigError("num_samples must be >= 1");
  if (req.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (req.temperature == 0.0) req.num_samples = 1;
  return req;
}

// Truncates at the first stop sequence and trims surrounding whitespace.
inline std::string postprocess_sample(std::string text,
                                      const std::vector<std::string>& stops) {
  size_t cut = std::string::npos;
  for (const std::string& stop : stops) {
    if (stop.empty()) continue;
    size_t pos = text.find(stop);
    if (pos != std::string::npos && pos < cut) cut = pos;
  }
  if (cut != std::string::npos) text.resize(cut);
  return util::trim(text);
}

}  // namespace detail

// Content digest identifying a request; every parameter participates, so
// responses recorded under one temperature can never answer another.
inline std::string request_key(const CompletionRequest& req) {
  CompletionRequest r = detail::normalized(req);
  std::string payload = r.prompt;
  payload += '\x1f';
  payload += util::canonical_real(r.temperature);
  payload += '\x1f';
  payload += std::to_string(r.num_samples);
  payload += '\x1f';
  payload += std::to_string(r.max_output_len);
  payload += '\x1f';
  payload += util::join(r.stop_sequences, "\x1e");
  return util::sha256_hex(payload);
}

// Completion backend interface. Implementations return post-processed
// samples (stop-truncated, whitespace-trimmed) and exactly the effective
// number of requested samples; anything else is a contract violation
// reported as MalformedResponseError.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Rate limiting
// ---------------------------------------------------------------------------

// Token-bucket limiter; acquire() blocks until a token is available.
// Thread-safe.
class RateLimiter {
 public:
  RateLimiter(double tokens_per_second, double burst)
      : rate_(tokens_per_second),
        burst_(burst),
        tokens_(burst),
        last_(std::chrono::steady_clock::now()) {
    if (rate_ <= 0.0) throw ConfigError("rate limiter needs a positive rate");
    if (burst_ < 1.0) throw ConfigError("rate limiter needs burst >= 1");
  }

  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    for (;;) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      double need = (1.0 - tokens_) / rate_;
      cv_.wait_for(lock, std::chrono::duration<double>(need));
    }
  }

 private:
  void refill() {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
  }

  std::mutex mu_;
  std::condition_variable cv_;
  double rate_, burst_, tokens_;
  std::chrono::steady_clock::time_point last_;
};

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

struct HttpClientConfig {
  std::string endpoint;  // http://host[:port][/path]
  std::string api_key;   // sent as a bearer token when non-empty
  std::string model;     // forwarded in the payload when non-empty
  int max_retries = 5;   // retry attempts after the initial request
  double backoff_base_seconds = 0.5;
  double backoff_cap_seconds = 8.0;
  double request_timeout_seconds = 60.0;
  double rate_per_second = 0.0;  // 0 disables rate limiting
  unsigned parallelism = 4;      // concurrent in-flight request cap
};

// POSTs {prompt, temperature, n, max_tokens, stop} and expects
// {choices: [{text, logprob?}, ...], model?, usage?}. Transient failures
// (connection errors, 429, 5xx) are retried with bounded exponential
// backoff; a quota rejection that survives the retries is QuotaError.
class HttpCompletionClient : public CompletionClient {
 public:
  explicit HttpCompletionClient(HttpClientConfig config) : config_(std::move(config)) {
    parse_endpoint();
    if (config_.rate_per_second > 0.0)
      limiter_ = std::make_unique<RateLimiter>(config_.rate_per_second,
                                               std::max(1.0, config_.rate_per_second));
    if (config_.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    CompletionRequest req = detail::normalized(request);
    nlohmann::json payload;
    payload["prompt"] = req.prompt;
    payload["temperature"] = req.temperature;
    payload["n"] = req.num_samples;
    payload["max_tokens"] = req.max_output_len;
    payload["stop"] = req.stop_sequences;
    if (!config_.model.empty()) payload["model"] = config_.model;
    std::string body = payload.dump();

    std::string last_error;
    bool quota_hit = false;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        retries_total_.fetch_add(1);
        double delay = std::min(config_.backoff_cap_seconds,
                                config_.backoff_base_seconds * std::pow(2.0, attempt - 1));
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      if (limiter_) limiter_->acquire();

      Slot slot(*this);  // caps concurrent in-flight requests
      httplib::Client http(host_, port_);
      http.set_connection_timeout(std::chrono::duration<double>(config_.request_timeout_seconds));
      http.set_read_timeout(std::chrono::duration<double>(config_.request_timeout_seconds));
      httplib::Headers headers;
      if (!config_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + config_.api_key);
      auto res = http.Post(path_, headers, body, "application/json");

      if (!res) {
        last_error = "connection failure: " + httplib::to_string(res.error());
        continue;  // retryable
      }
      if (res->status == 429) {
        quota_hit = true;
        last_error = "backend returned 429";
        continue;  // retryable until attempts run out
      }
      if (res->status >= 500) {
        last_error = "backend returned " + std::to_string(res->status);
        continue;  // retryable
      }
      if (res->status == 401 || res->status == 403)
        throw QuotaError("backend rejected credentials (" + std::to_string(res->status) + ")");
      if (res->status != 200)
        throw MalformedResponseError("backend returned status " + std::to_string(res->status) +
                                     ": " + res->body);
      return parse_response(res->body, req);
    }
    if (quota_hit) throw QuotaError("quota exhausted after retries: " + last_error);
    throw TransportError("request failed after " + std::to_string(config_.max_retries) +
                         " retries: " + last_error);
  }

  // Total retry attempts made over this client's lifetime.
  long retries_total() const { return retries_total_.load(); }

 private:
  struct Slot {
    explicit Slot(HttpCompletionClient& c) : client(c) {
      std::unique_lock<std::mutex> lock(client.slots_mu_);
      client.slots_cv_.wait(lock, [&] { return client.in_flight_ < client.config_.parallelism; });
      ++client.in_flight_;
    }
    ~Slot() {
      {
        std::lock_guard<std::mutex> lock(client.slots_mu_);
        --client.in_flight_;
      }
      client.slots_cv_.notify_one();
    }
    HttpCompletionClient& client;
  };

  void parse_endpoint() {
    std::string url = config_.endpoint;
    if (util::starts_with(url, "https://"))
      throw ConfigError("https endpoints are not supported by this build; use http");
    if (!util::starts_with(url, "http://"))
      throw ConfigError("endpoint must start with http://: " + url);
    url = url.substr(7);
    size_t slash = url.find('/');
    std::string authority = slash == std::string::npos ? url : url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
    size_t colon = authority.find(':');
    if (colon == std::string::npos) {
      host_ = authority;
      port_ = 80;
    } else {
      host_ = authority.substr(0, colon);
      port_ = std::stoi(authority.substr(colon + 1));
    }
    if (host_.empty()) throw ConfigError("endpoint has no host: " + config_.endpoint);
  }

  CompletionResponse parse_response(const std::string& body, const CompletionRequest& req) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedResponseError(std::string("backend response is not JSON: ") + e.what());
    }
    if (!doc.contains("choices") || !doc["choices"].is_array())
      throw MalformedResponseError("backend response lacks a choices array");
    CompletionResponse out;
    for (const auto& choice : doc["choices"]) {
      if (!choice.is_object() || !choice.contains("text") || !choice["text"].is_string())
        throw MalformedResponseError("backend choice lacks text");
      Sample s;
      s.text = detail::postprocess_sample(choice["text"].get<std::string>(), req.stop_sequences);
      if (choice.contains("logprob") && choice["logprob"].is_number())
        s.logprob = choice["logprob"].get<double>();
      out.samples.push_back(std::move(s));
    }
    if (static_cast<int>(out.samples.size()) != req.num_samples)
      throw MalformedResponseError("backend returned " + std::to_string(out.samples.size()) +
                                   " samples for a request of " +
                                   std::to_string(req.num_samples));
    out.model_id = doc.value("model", "");
    if (doc.contains("usage") && doc["usage"].is_object()) {
      out.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0L);
      out.usage.completion_tokens = doc["usage"].value("completion_tokens", 0L);
    }
    return out;
  }

  HttpClientConfig config_;
  std::string host_, path_;
  int port_ = 80;
  std::unique_ptr<RateLimiter> limiter_;
  std::atomic<long> retries_total_{0};
  std::mutex slots_mu_;
  std::condition_variable slots_cv_;
  unsigned in_flight_ = 0;
};

// ---------------------------------------------------------------------------
// Record / replay
// ---------------------------------------------------------------------------

// Wraps another backend and appends every exchange to a JSONL session
// file keyed by the request digest. Thread-safe.
class RecordingClient : public CompletionClient {
 public:
  RecordingClient(std::shared_ptr<CompletionClient> inner, const std::string& path)
      : inner_(std::move(inner)), out_(path, std::ios::binary | std::ios::app) {
    if (!out_) throw IoError("cannot open session file for recording: " + path);
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    CompletionRequest req = detail::normalized(request);
    CompletionResponse res = inner_->complete(req);
    nlohmann::json rec;
    rec["key"] = request_key(req);
    rec["prompt_sha256"] = util::sha256_hex(req.prompt);
    rec["temperature"] = req.temperature;
    rec["n"] = req.num_samples;
    rec["max_tokens"] = req.max_output_len;
    rec["stop"] = req.stop_sequences;
    rec["model"] = res.model_id;
    nlohmann::json samples = nlohmann::json::array();
    for (const Sample& s : res.samples) {
      nlohmann::json j;
      j["text"] = s.text;
      if (s.logprob) j["logprob"] = *s.logprob;
      samples.push_back(std::move(j));
    }
    rec["samples"] = samples;
    rec["usage"] = {{"prompt_tokens", res.usage.prompt_tokens},
                    {"completion_tokens", res.usage.completion_tokens}};
    {
      std::lock_guard<std::mutex> lock(mu_);
      out_ << rec.dump() << "\n";
      out_.flush();
    }
    return res;
  }

 private:
  std::shared_ptr<CompletionClient> inner_;
  std::ofstream out_;
  std::mutex mu_;
};

// Serves completions from a previously recorded session. Requests whose
// digest is absent fail with MalformedResponseError naming the digest;
// repeated identical requests always yield the identical response.
class ReplayClient : public CompletionClient {
 public:
  explicit ReplayClient(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open session file for replay: " + path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string trimmed = util::trim(line);
      if (trimmed.empty()) continue;
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(trimmed);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("session file " + path + " line " + std::to_string(line_no) +
                         " is not JSON: " + e.what());
      }
      if (!rec.contains("key") || !rec.contains("samples")) continue;
      CompletionResponse res;
      for (const auto& s : rec["samples"]) {
        Sample sample;
        sample.text = s.value("text", "");
        if (s.contains("logprob") && s["logprob"].is_number())
          sample.logprob = s["logprob"].get<double>();
        res.samples.push_back(std::move(sample));
      }
      res.model_id = rec.value("model", "");
      if (rec.contains("usage") && rec["usage"].is_object()) {
        res.usage.prompt_tokens = rec["usage"].value("prompt_tokens", 0L);
        res.usage.completion_tokens = rec["usage"].value("completion_tokens", 0L);
      }
      // First record wins; duplicate keys are identical by construction.
      records_.emplace(rec["key"].get<std::string>(), std::move(res));
    }
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    std::string key = request_key(request);
    auto it = records_.find(key);
    if (it == records_.end())
      throw MalformedResponseError("replay session " + path_ +
                                   " has no record for request digest " + key);
    return it->second;
  }

  size_t size() const { return records_.size(); }

 private:
  std::string path_;
  std::unordered_map<std::string, CompletionResponse> records_;
};

// Factory helpers mirroring how sessions are used from configuration.
inline std::shared_ptr<CompletionClient> record_session(std::shared_ptr<CompletionClient> inner,
                                                        const std::string& path) {
  return std::make_shared<RecordingClient>(std::move(inner), path);
}

inline std::shared_ptr<CompletionClient> replay_session(const std::string& path) {
  return std::make_shared<ReplayClient>(path);
}

}  // namespace nl2sql
