#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sumfact/corpus.hpp"
#include "sumfact/error.hpp"
#include "sumfact/feedback.hpp"
#include "sumfact/jsonl.hpp"
#include "sumfact/prompts.hpp"
#include "sumfact/random.hpp"

namespace sumfact {

struct EndpointConfig {
  std::string name;  // roster key; doubles as summarizer_id
  std::string base_url;  // e.g. http://127.0.0.1:8000/v1
  std::string model_name;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::optional<double> price_per_1k_input;
  std::optional<double> price_per_1k_output;
  std::string api_key_env;  // env var holding the bearer key; empty for none

  bool operator==(const EndpointConfig&) const = default;
};

/// Throws InvalidConfig.
void validate(const EndpointConfig& c);
EndpointConfig endpoint_from_json(const Json& j);
Json to_json(const EndpointConfig& c);

struct UsageStats {
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
  std::chrono::duration<double> wall_latency{0.0};
  double estimated_cost = 0.0;
  std::size_t attempts = 0;

  UsageStats& operator+=(const UsageStats& o);
};

double estimate_cost(const UsageStats& usage, const EndpointConfig& config);

/// ceil(code points / 4), used when the endpoint reports no usage.
std::size_t estimate_tokens(std::string_view text);

// ---- transport -------------------------------------------------------------

struct HttpResult {
  enum class Failure { None, Connection, Timeout };
  Failure failure = Failure::None;
  int status = 0;
  std::string body;
  std::string message;  // transport diagnostics
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// POST `body` (JSON) to `base_url` + `path`.
  virtual HttpResult post(const std::string& base_url, const std::string& path, const std::string& body,
                          const std::map<std::string, std::string>& headers, std::chrono::milliseconds timeout) = 0;
};

std::shared_ptr<Transport> make_http_transport();

// ---- client ----------------------------------------------------------------

struct BackoffPolicy {
  std::chrono::milliseconds initial{1000};
  double factor = 2.0;
  std::chrono::milliseconds cap{60000};
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Carries how many tries were spent before giving up.
class GatewayError : public Error {
 public:
  GatewayError(ErrorKind kind, const std::string& message, std::size_t attempts)
      : Error(kind, message), attempts_(attempts) {}
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t attempts_;
};

struct ChatResult {
  std::string raw_text;
  UsageStats usage;
};

/// Shareable across threads.
class ChatClient {
 public:
  explicit ChatClient(std::shared_ptr<Transport> transport = make_http_transport(), Sleeper sleeper = {},
                      BackoffPolicy backoff = {}, std::uint64_t jitter_seed = 0);

  /// First choice text, verbatim. Transport failures, 429 and 5xx are retried up
  /// to max_retries times. Throws GatewayError with kind EndpointUnavailable,
  /// Timeout (when the final try timed out) or MalformedResponse.
  ChatResult chat(const EndpointConfig& config, std::string_view prompt) const;

  /// Full-jitter delay before retry number `retry` (0-based).
  std::chrono::milliseconds backoff_delay(std::size_t retry) const;

 private:
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  BackoffPolicy backoff_;
  mutable std::mutex rng_mutex_;
  mutable Rng rng_;
};

/// The request body sent for one prompt.
Json chat_request(const EndpointConfig& config, std::string_view prompt);

// ---- batches ---------------------------------------------------------------

/// Runs task(i) for i in [0, n) on at most `concurrency` threads.
void run_bounded(std::size_t n, std::size_t concurrency, const std::function<void(std::size_t)>& task);

struct FailureRecord {
  std::string doc_id;
  std::string summarizer_id;
  std::string stage;  // "summarize" or "feedback"
  ErrorKind error_kind = ErrorKind::EndpointUnavailable;
  std::size_t attempts = 0;

  bool operator==(const FailureRecord&) const = default;
};

Json to_json(const FailureRecord& f);

struct SummaryBatch {
  std::vector<SummaryRecord> summaries;  // document-major, roster order within a document
  std::vector<FailureRecord> failures;
  std::vector<UsageStats> usage;  // one per attempted pair, same order as the pairs
  UsageStats totals;
};

/// One SummaryRecord per (document, summarizer) that succeeds; a failing pair is
/// reported and never affects the others. Throws InvalidConfig for an empty roster.
SummaryBatch generate_summaries(const ChatClient& client, std::span<const EndpointConfig> summarizers,
                                std::span<const Document> documents, std::size_t concurrency);

ChatResult generate_feedback(const ChatClient& client, const EndpointConfig& config, Granularity granularity,
                             const Document& document, const SummaryRecord& summary);

enum class FeedbackMode { Train, Eval };

std::string_view to_string(FeedbackMode m);
FeedbackMode parse_feedback_mode(std::string_view s);

struct FeedbackBatch {
  std::vector<FeedbackRecord> records;  // input order, minus excluded ones
  std::vector<FailureRecord> failures;
  std::size_t excluded = 0;   // train mode: parse retries exhausted
  std::size_t defaulted = 0;  // eval mode: parse retries exhausted, all-zero prediction kept
  UsageStats totals;
};

/// Feedback for every summary, regenerating unparseable responses up to
/// `max_attempts` times. Endpoint failures are reported and the pair is skipped.
FeedbackBatch generate_feedback_batch(const ChatClient& client, const EndpointConfig& config,
                                      Granularity granularity, const std::map<std::string, Document, std::less<>>& documents,
                                      std::span<const SummaryRecord> summaries, std::size_t max_attempts,
                                      FeedbackMode mode, std::size_t concurrency);

}  // namespace sumfact
