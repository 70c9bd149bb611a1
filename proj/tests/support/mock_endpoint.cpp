#include "mock_endpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "httplib.h"
#include "sumfact/corpus.hpp"
#include "sumfact/jsonl.hpp"
#include "sumfact/prompts.hpp"

namespace sumfact::testing {

namespace {

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

std::size_t suffix_number(const std::string& model, const std::string& prefix) {
  return static_cast<std::size_t>(std::stoul(model.substr(prefix.size())));
}

std::string document_of_summary_prompt(const std::string& prompt) {
  const std::string open = "\nDocument:\n";
  const std::string close = "\n\nSummary:";
  const auto a = prompt.find(open);
  const auto b = prompt.rfind(close);
  if (a == std::string::npos || b == std::string::npos || b < a) return {};
  return prompt.substr(a + open.size(), b - a - open.size());
}

std::string summarize(const std::string& prompt, std::size_t altered) {
  auto sentences = segment_sentences(document_of_summary_prompt(prompt));
  if (sentences.size() > 3) sentences.resize(3);
  for (std::size_t k = 0; k < altered && k < sentences.size(); ++k) {
    auto& s = sentences[sentences.size() - 1 - k];
    s = alter_sentence(s);
  }
  std::string out;
  for (const auto& s : sentences) out += (out.empty() ? "" : " ") + s;
  return out;
}

std::string judge(const std::string& prompt) {
  const PromptParts parts = parse_prompt(prompt);
  const std::string doc = normalize_whitespace(parts.document);
  Json items = Json::array();
  for (const auto& s : parts.sentences) {
    const bool supported = doc.find(normalize_whitespace(s)) != std::string::npos;
    items.push_back({{"sentence", s},
                     {"reason", supported ? "The sentence restates the document." : "The sentence is not in the document."},
                     {"category", supported ? "no error" : "out-of-context error"},
                     {"label", supported ? "consistent" : "inconsistent"}});
  }
  return "```json\n" + items.dump(1) + "\n```";
}

}  // namespace

std::string alter_sentence(const std::string& sentence) {
  std::string s = sentence;
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();
  return s + ", according to unnamed officials.";
}

std::string fixture_path(const std::string& relative) { return std::string(SUMFACT_FIXTURE_DIR) + "/" + relative; }

std::string read_fixture(const std::string& relative) {
  std::ifstream in(fixture_path(relative), std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + relative);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool mock_content(const std::string& model, const std::string& prompt, std::size_t call, std::string& content) {
  if (model == "echo" || model == "echo-nousage") content = "ok";
  else if (starts_with(model, "flaky-")) {
    if (call <= suffix_number(model, "flaky-")) return false;
    content = "ok";
  } else if (starts_with(model, "slow-")) content = "ok";
  else if (model == "summ-copy") content = summarize(prompt, 0);
  else if (starts_with(model, "summ-alter-")) content = summarize(prompt, suffix_number(model, "summ-alter-"));
  else if (model == "summ-empty") content = "";
  else if (model == "judge") content = judge(prompt);
  else if (model == "judge-prose") content = "I am unable to assess this summary.";
  else if (model == "worked-example") content = read_fixture("worked_example/output.txt");
  else return false;
  return true;
}

MockEndpoint::MockEndpoint() : server_(std::make_unique<httplib::Server>()) {
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    const Json body = Json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("model") || !body.contains("messages")) {
      res.status = 400;
      return;
    }
    const std::string model = body["model"].get<std::string>();
    const std::string prompt = body["messages"][0]["content"].get<std::string>();

    std::size_t call = 0;
    {
      std::lock_guard lock(mutex_);
      auto& c = counters_[model];
      call = ++c.calls;
      c.max_in_flight = std::max(c.max_in_flight, ++c.in_flight);
      c.last_prompt = prompt;
    }
    struct Leave {
      MockEndpoint* self;
      std::string model;
      ~Leave() {
        std::lock_guard lock(self->mutex_);
        --self->counters_[model].in_flight;
      }
    } leave{this, model};

    if (const auto d = delay_ms_.load(); d > 0) std::this_thread::sleep_for(std::chrono::milliseconds(d));
    if (starts_with(model, "slow-"))
      std::this_thread::sleep_for(std::chrono::milliseconds(suffix_number(model, "slow-")));

    if (model == "reject") {
      res.status = 400;
      res.set_content(R"({"error":"bad request"})", "application/json");
      return;
    }
    if (model == "malformed") {
      res.status = 200;
      res.set_content("<html>gateway</html>", "text/html");
      return;
    }
    std::string content;
    if (!mock_content(model, prompt, call, content)) {
      res.status = 503;
      res.set_content(R"({"error":"unavailable"})", "application/json");
      return;
    }
    Json reply{{"id", "mock-" + std::to_string(call)},
               {"object", "chat.completion"},
               {"model", model},
               {"choices", Json::array({Json{{"index", 0},
                                             {"message", {{"role", "assistant"}, {"content", content}}},
                                             {"finish_reason", "stop"}}})}};
    if (model != "echo-nousage")
      reply["usage"] = {{"prompt_tokens", count_words(prompt)}, {"completion_tokens", count_words(content)}};
    res.set_content(reply.dump(), "application/json");
  });

  port_ = server_->bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("mock endpoint could not bind");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

MockEndpoint::~MockEndpoint() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockEndpoint::base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

std::size_t MockEndpoint::calls(const std::string& model) const {
  std::lock_guard lock(mutex_);
  auto it = counters_.find(model);
  return it == counters_.end() ? 0 : it->second.calls;
}

std::size_t MockEndpoint::max_in_flight(const std::string& model) const {
  std::lock_guard lock(mutex_);
  auto it = counters_.find(model);
  return it == counters_.end() ? 0 : it->second.max_in_flight;
}

std::string MockEndpoint::last_prompt(const std::string& model) const {
  std::lock_guard lock(mutex_);
  auto it = counters_.find(model);
  return it == counters_.end() ? std::string() : it->second.last_prompt;
}

}  // namespace sumfact::testing
