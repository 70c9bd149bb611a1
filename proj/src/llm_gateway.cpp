#include "sumfact/llm_gateway.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "httplib.h"

namespace sumfact {

namespace {

[[noreturn]] void bad_config(const EndpointConfig& c, const std::string& what) {
  throw Error(ErrorKind::InvalidConfig, "endpoint '" + c.name + "': " + what);
}

std::optional<double> optional_number(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw Error(ErrorKind::InvalidConfig, std::string("'") + key + "' must be a number");
  return it->get<double>();
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

class HttpLibTransport final : public Transport {
 public:
  HttpResult post(const std::string& base_url, const std::string& path, const std::string& body,
                  const std::map<std::string, std::string>& headers, std::chrono::milliseconds timeout) override {
    // base_url is scheme://host[:port][/prefix]
    const auto scheme_end = base_url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto prefix_start = base_url.find('/', host_start);
    const std::string origin = base_url.substr(0, prefix_start);
    std::string prefix = prefix_start == std::string::npos ? std::string() : base_url.substr(prefix_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(prefix + path, hdrs, body, "application/json");
    HttpResult out;
    if (!res) {
      const auto err = res.error();
      const auto elapsed = std::chrono::steady_clock::now() - started;
      // httplib reports an expired read as a plain read error.
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             (err == httplib::Error::Read && elapsed >= timeout * 9 / 10);
      out.failure = timed_out ? HttpResult::Failure::Timeout : HttpResult::Failure::Connection;
      out.message = httplib::to_string(err);
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }
};

}  // namespace

void validate(const EndpointConfig& c) {
  if (c.name.empty()) bad_config(c, "name is empty");
  if (c.base_url.empty()) bad_config(c, "base_url is empty");
  if (c.base_url.rfind("http://", 0) != 0 && c.base_url.rfind("https://", 0) != 0)
    bad_config(c, "base_url must start with http:// or https://");
  if (c.model_name.empty()) bad_config(c, "model_name is empty");
  if (!(c.temperature >= 0.0)) bad_config(c, "temperature must be >= 0");
  if (c.max_output_tokens <= 0) bad_config(c, "max_output_tokens must be positive");
  if (c.timeout.count() <= 0) bad_config(c, "timeout must be positive");
  if (c.max_retries < 0 || c.max_retries > 10) bad_config(c, "max_retries must lie in [0, 10]");
  if (c.price_per_1k_input && *c.price_per_1k_input < 0) bad_config(c, "negative input price");
  if (c.price_per_1k_output && *c.price_per_1k_output < 0) bad_config(c, "negative output price");
}

EndpointConfig endpoint_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "endpoint entry must be an object");
  EndpointConfig c;
  try {
    c.name = require_string(j, "name");
    c.base_url = require_string(j, "base_url");
    c.model_name = require_string(j, "model_name");
    c.temperature = j.value("temperature", 0.0);
    c.max_output_tokens = j.value("max_output_tokens", 1024);
    c.timeout = std::chrono::milliseconds(static_cast<long long>(std::llround(j.value("timeout_s", 60.0) * 1000.0)));
    c.max_retries = j.value("max_retries", 3);
    c.api_key_env = j.value("api_key_env", std::string());
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  c.price_per_1k_input = optional_number(j, "price_per_1k_input");
  c.price_per_1k_output = optional_number(j, "price_per_1k_output");
  validate(c);
  return c;
}

Json to_json(const EndpointConfig& c) {
  Json j{{"name", c.name},
         {"base_url", c.base_url},
         {"model_name", c.model_name},
         {"temperature", c.temperature},
         {"max_output_tokens", c.max_output_tokens},
         {"timeout_s", static_cast<double>(c.timeout.count()) / 1000.0},
         {"max_retries", c.max_retries}};
  j["price_per_1k_input"] = c.price_per_1k_input ? Json(*c.price_per_1k_input) : Json(nullptr);
  j["price_per_1k_output"] = c.price_per_1k_output ? Json(*c.price_per_1k_output) : Json(nullptr);
  j["api_key_env"] = c.api_key_env;
  return j;
}

UsageStats& UsageStats::operator+=(const UsageStats& o) {
  input_tokens += o.input_tokens;
  output_tokens += o.output_tokens;
  wall_latency += o.wall_latency;
  estimated_cost += o.estimated_cost;
  attempts += o.attempts;
  return *this;
}

double estimate_cost(const UsageStats& usage, const EndpointConfig& config) {
  double cost = 0.0;
  if (config.price_per_1k_input) cost += static_cast<double>(usage.input_tokens) / 1000.0 * *config.price_per_1k_input;
  if (config.price_per_1k_output)
    cost += static_cast<double>(usage.output_tokens) / 1000.0 * *config.price_per_1k_output;
  return cost;
}

std::size_t estimate_tokens(std::string_view text) {
  std::size_t code_points = 0;
  for (unsigned char c : text) code_points += (c & 0xC0) != 0x80 ? 1 : 0;
  return (code_points + 3) / 4;
}

std::shared_ptr<Transport> make_http_transport() { return std::make_shared<HttpLibTransport>(); }

ChatClient::ChatClient(std::shared_ptr<Transport> transport, Sleeper sleeper, BackoffPolicy backoff,
                       std::uint64_t jitter_seed)
    : transport_(std::move(transport)), sleeper_(std::move(sleeper)), backoff_(backoff), rng_(jitter_seed) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::milliseconds ChatClient::backoff_delay(std::size_t retry) const {
  const double ceiling = std::min(static_cast<double>(backoff_.cap.count()),
                                  static_cast<double>(backoff_.initial.count()) *
                                      std::pow(backoff_.factor, static_cast<double>(retry)));
  double u;
  {
    std::lock_guard lock(rng_mutex_);
    u = uniform_unit(rng_);
  }
  return std::chrono::milliseconds(static_cast<long long>(std::floor(u * ceiling)));
}

Json chat_request(const EndpointConfig& config, std::string_view prompt) {
  return {{"model", config.model_name},
          {"messages", Json::array({Json{{"role", "user"}, {"content", std::string(prompt)}}})},
          {"temperature", config.temperature},
          {"max_tokens", config.max_output_tokens}};
}

ChatResult ChatClient::chat(const EndpointConfig& config, std::string_view prompt) const {
  validate(config);
  const std::string body = chat_request(config, prompt).dump();
  std::map<std::string, std::string> headers;
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str()); key && *key)
      headers["Authorization"] = std::string("Bearer ") + key;
  }

  const auto started = std::chrono::steady_clock::now();
  const std::size_t max_tries = static_cast<std::size_t>(config.max_retries) + 1;
  std::string last_problem;
  bool last_timed_out = false;
  for (std::size_t attempt = 1; attempt <= max_tries; ++attempt) {
    const HttpResult res = transport_->post(config.base_url, "/chat/completions", body, headers, config.timeout);
    bool retry = false;
    if (res.failure != HttpResult::Failure::None) {
      last_timed_out = res.failure == HttpResult::Failure::Timeout;
      last_problem = (last_timed_out ? "timed out: " : "transport error: ") + res.message;
      retry = true;
    } else if (retryable_status(res.status)) {
      last_timed_out = false;
      last_problem = "HTTP " + std::to_string(res.status);
      retry = true;
    } else if (res.status < 200 || res.status > 299) {
      throw GatewayError(ErrorKind::EndpointUnavailable,
                         "'" + config.name + "' answered HTTP " + std::to_string(res.status), attempt);
    }

    if (retry) {
      if (attempt < max_tries) sleeper_(backoff_delay(attempt - 1));
      continue;
    }

    const Json j = Json::parse(res.body, nullptr, false);
    const Json* content = nullptr;
    if (!j.is_discarded() && j.is_object()) {
      auto choices = j.find("choices");
      if (choices != j.end() && choices->is_array() && !choices->empty()) {
        const Json& first = (*choices)[0];
        auto message = first.is_object() ? first.find("message") : first.end();
        if (message != first.end() && message->is_object()) {
          auto c = message->find("content");
          if (c != message->end() && c->is_string()) content = &*c;
        }
      }
    }
    if (!content)
      throw GatewayError(ErrorKind::MalformedResponse,
                         "'" + config.name + "' response lacks choices[0].message.content", attempt);

    ChatResult out;
    out.raw_text = content->get<std::string>();
    out.usage.attempts = attempt;
    out.usage.input_tokens = estimate_tokens(prompt);
    out.usage.output_tokens = estimate_tokens(out.raw_text);
    if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
      if (auto p = usage->find("prompt_tokens"); p != usage->end() && p->is_number_unsigned())
        out.usage.input_tokens = p->get<std::size_t>();
      if (auto c = usage->find("completion_tokens"); c != usage->end() && c->is_number_unsigned())
        out.usage.output_tokens = c->get<std::size_t>();
    }
    out.usage.wall_latency = std::chrono::steady_clock::now() - started;
    out.usage.estimated_cost = estimate_cost(out.usage, config);
    return out;
  }
  throw GatewayError(last_timed_out ? ErrorKind::Timeout : ErrorKind::EndpointUnavailable,
                     "'" + config.name + "' failed " + std::to_string(max_tries) + " time(s), last: " + last_problem,
                     max_tries);
}

void run_bounded(std::size_t n, std::size_t concurrency, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(concurrency, n));
  if (n == 0) return;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) task(i);
  };
  if (workers == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
}

Json to_json(const FailureRecord& f) {
  return {{"doc_id", f.doc_id},
          {"summarizer_id", f.summarizer_id},
          {"stage", f.stage},
          {"error_kind", std::string(to_string(f.error_kind))},
          {"attempts", f.attempts}};
}

namespace {

// Per-item outcome slot; filled by exactly one worker.
template <typename T>
struct Outcome {
  std::optional<T> value;
  std::optional<FailureRecord> failure;
  UsageStats usage;
};

}  // namespace

SummaryBatch generate_summaries(const ChatClient& client, std::span<const EndpointConfig> summarizers,
                                std::span<const Document> documents, std::size_t concurrency) {
  if (summarizers.empty()) throw Error(ErrorKind::InvalidConfig, "no summarizer configured");
  for (const auto& s : summarizers) validate(s);

  const std::size_t n = documents.size() * summarizers.size();
  std::vector<Outcome<SummaryRecord>> slots(n);
  run_bounded(n, concurrency, [&](std::size_t i) {
    const Document& doc = documents[i / summarizers.size()];
    const EndpointConfig& cfg = summarizers[i % summarizers.size()];
    auto& slot = slots[i];
    try {
      ChatResult res = client.chat(cfg, build_summary_prompt(doc));
      slot.usage = res.usage;
      slot.value = make_summary_from_text(doc.doc_id, cfg.name, res.raw_text);
    } catch (const GatewayError& e) {
      slot.usage.attempts = e.attempts();
      slot.failure = FailureRecord{doc.doc_id, cfg.name, "summarize", e.kind(), e.attempts()};
    } catch (const Error& e) {
      slot.failure = FailureRecord{doc.doc_id, cfg.name, "summarize", e.kind(), std::max<std::size_t>(1, slot.usage.attempts)};
    }
  });

  SummaryBatch batch;
  for (auto& slot : slots) {
    if (slot.value) batch.summaries.push_back(std::move(*slot.value));
    if (slot.failure) batch.failures.push_back(std::move(*slot.failure));
    batch.totals += slot.usage;
    batch.usage.push_back(slot.usage);
  }
  return batch;
}

ChatResult generate_feedback(const ChatClient& client, const EndpointConfig& config, Granularity granularity,
                             const Document& document, const SummaryRecord& summary) {
  return client.chat(config, build_prompt(granularity, document, summary.sentences).body);
}

std::string_view to_string(FeedbackMode m) { return m == FeedbackMode::Train ? "train" : "eval"; }

FeedbackMode parse_feedback_mode(std::string_view s) {
  if (s == "train") return FeedbackMode::Train;
  if (s == "eval") return FeedbackMode::Eval;
  throw Error(ErrorKind::InvalidConfig, "feedback mode must be 'train' or 'eval', got '" + std::string(s) + "'");
}

FeedbackBatch generate_feedback_batch(const ChatClient& client, const EndpointConfig& config,
                                      Granularity granularity, const std::map<std::string, Document, std::less<>>& documents,
                                      std::span<const SummaryRecord> summaries, std::size_t max_attempts,
                                      FeedbackMode mode, std::size_t concurrency) {
  validate(config);
  if (max_attempts == 0) throw Error(ErrorKind::InvalidConfig, "max_attempts must be at least 1");
  const std::string version = template_for(granularity).version_tag();

  struct Slot {
    std::optional<FeedbackRecord> record;
    std::optional<FailureRecord> failure;
    bool excluded = false;
    UsageStats usage;
  };
  std::vector<Slot> slots(summaries.size());

  run_bounded(summaries.size(), concurrency, [&](std::size_t i) {
    const SummaryRecord& s = summaries[i];
    Slot& slot = slots[i];
    auto doc = documents.find(s.doc_id);
    if (doc == documents.end()) {
      slot.failure = FailureRecord{s.doc_id, s.summarizer_id, "feedback", ErrorKind::InvalidRecord, 0};
      return;
    }
    FeedbackRecord rec;
    rec.doc_id = s.doc_id;
    rec.summarizer_id = s.summarizer_id;
    rec.granularity = granularity;
    rec.source = FeedbackSource::Llm;
    rec.template_version = version;
    try {
      auto generate = [&] {
        ChatResult res = generate_feedback(client, config, granularity, doc->second, s);
        slot.usage += res.usage;
        return std::move(res.raw_text);
      };
      rec.feedback = feedback_with_retry(generate, s.sentences, granularity, max_attempts).feedback;
      slot.record = std::move(rec);
    } catch (const ExhaustedError& e) {
      slot.failure = FailureRecord{s.doc_id, s.summarizer_id, "feedback", ErrorKind::Exhausted, e.attempts()};
      if (mode == FeedbackMode::Eval) {
        slot.record = default_prediction(s.doc_id, s.summarizer_id, s.sentences, granularity, version);
      } else {
        slot.excluded = true;
      }
    } catch (const GatewayError& e) {
      slot.failure = FailureRecord{s.doc_id, s.summarizer_id, "feedback", e.kind(), slot.usage.attempts + e.attempts()};
    } catch (const Error& e) {
      slot.failure = FailureRecord{s.doc_id, s.summarizer_id, "feedback", e.kind(), slot.usage.attempts};
    }
  });

  FeedbackBatch batch;
  for (auto& slot : slots) {
    if (slot.record) {
      if (slot.record->defaulted) ++batch.defaulted;
      batch.records.push_back(std::move(*slot.record));
    }
    if (slot.excluded) ++batch.excluded;
    if (slot.failure) batch.failures.push_back(std::move(*slot.failure));
    batch.totals += slot.usage;
  }
  return batch;
}

}  // namespace sumfact
