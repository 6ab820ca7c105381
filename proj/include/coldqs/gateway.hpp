#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coldqs/prompt.hpp"
#include "coldqs/types.hpp"

namespace coldqs::gateway {

struct DecodingParams {
    double temperature = 1.0;
    double top_p = 1.0;
    int max_tokens = 512;
    // Completions requested per call. Only the first choice is consumed.
    int n = 1;

    bool operator==(const DecodingParams&) const = default;
};

struct EndpointConfig {
    std::string base_url;
    std::string model_name;
    // Name of the environment variable holding the API key. Never the key itself.
    std::string api_key_env;
    double timeout_seconds = 60.0;
    int max_retries = 3;
    double backoff_base_seconds = 0.5;
    DecodingParams decoding;

    // Throws ValidationError on timeout <= 0, max_retries < 0, temperature < 0.
    void validate() const;
    EndpointRef ref() const { return {base_url, model_name}; }
    bool operator==(const EndpointConfig&) const = default;
};

void to_json(json& j, const DecodingParams& v);
void from_json(const json& j, DecodingParams& v);
void to_json(json& j, const EndpointConfig& v);
void from_json(const json& j, EndpointConfig& v);

struct ChatRequest {
    prompt::PromptText prompt;
    // Per-request sampling seed. Distinguishes rollouts of the same prompt.
    std::optional<std::uint64_t> seed;
};

// Outcome of one attempt against a backend.
struct Attempt {
    enum class Status { ok, retryable, fatal };
    Status status = Status::ok;
    std::string text;
    int http_status = 0;
    std::string message;

    static Attempt success(std::string text) { return {Status::ok, std::move(text), 200, {}}; }
};

class Backend {
public:
    virtual ~Backend() = default;
    // Must be safe to call concurrently. `attempt` counts from 1.
    virtual Attempt send(const EndpointConfig& cfg, const ChatRequest& request,
                         int attempt) const = 0;
};

/// OpenAI-compatible chat completions over HTTP(S).
class HttpBackend final : public Backend {
public:
    Attempt send(const EndpointConfig& cfg, const ChatRequest& request,
                 int attempt) const override;

    static json request_body(const EndpointConfig& cfg, const ChatRequest& request);
};

struct MockOptions {
    enum class Behavior { echo_template, fault_injection };
    Behavior behavior = Behavior::echo_template;
    std::uint64_t seed = 42;
    // fault_injection: probability that any single attempt fails with HTTP 500.
    double failure_rate = 0.0;
    // echo_template: probability that a generation is malformed.
    double malformed_rate = 0.1;
    // echo_template: probability that a verdict uses the count-only schema.
    double aggregate_only_rate = 0.0;
    double pass_answerable = 0.8;
    double pass_factual = 0.95;
    double pass_informative = 0.85;
    int options_count = 3;

    bool operator==(const MockOptions&) const = default;
};

std::string_view to_string(MockOptions::Behavior b);
MockOptions::Behavior parse_mock_behavior(std::string_view s);
void to_json(json& j, const MockOptions& v);
void from_json(const json& j, MockOptions& v);

/// Output is a pure function of (seed, model name, prompt bytes, request seed).
/// Generation prompts yield options JSON; judge prompts yield verdict JSON.
class MockBackend final : public Backend {
public:
    explicit MockBackend(MockOptions options = {}) : options_(options) {}

    Attempt send(const EndpointConfig& cfg, const ChatRequest& request,
                 int attempt) const override;

    const MockOptions& options() const { return options_; }

private:
    std::string generate(const EndpointConfig& cfg, const ChatRequest& request) const;
    std::string judge(const EndpointConfig& cfg, const ChatRequest& request) const;

    MockOptions options_;
};

struct Completion {
    std::size_t index = 0;
    std::optional<std::string> text;
    // Set iff text is empty.
    std::optional<std::string> error;
    int attempts = 0;

    bool ok() const { return text.has_value(); }
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

class Gateway {
public:
    explicit Gateway(std::shared_ptr<const Backend> backend, Sleeper sleeper = {});

    /// Retries timeouts, 5xx and 429 with full-jitter exponential backoff.
    /// Throws TransportError once retries are exhausted or on a non-retryable status.
    std::string complete(const EndpointConfig& cfg, const ChatRequest& request) const;
    std::string complete(const EndpointConfig& cfg, const prompt::PromptText& prompt) const;

    /// At most `parallelism` requests in flight. Results come back in input order;
    /// per-item failures are embedded, never thrown.
    std::vector<Completion> complete_batch(const EndpointConfig& cfg,
                                           const std::vector<ChatRequest>& requests,
                                           int parallelism) const;

private:
    Completion complete_one(const EndpointConfig& cfg, const ChatRequest& request) const;

    std::shared_ptr<const Backend> backend_;
    Sleeper sleeper_;
};

}  // namespace coldqs::gateway
