#include "coldqs/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "coldqs/errors.hpp"

namespace coldqs::gateway {

void EndpointConfig::validate() const {
    if (!(timeout_seconds > 0.0))
        throw ValidationError("endpoint '" + model_name + "': timeout_seconds must be > 0");
    if (max_retries < 0)
        throw ValidationError("endpoint '" + model_name + "': max_retries must be >= 0");
    if (decoding.temperature < 0.0)
        throw ValidationError("endpoint '" + model_name + "': temperature must be >= 0");
    if (backoff_base_seconds < 0.0)
        throw ValidationError("endpoint '" + model_name + "': backoff_base_seconds must be >= 0");
    if (model_name.empty()) throw ValidationError("endpoint model_name is empty");
}

void to_json(json& j, const DecodingParams& v) {
    j = json{{"temperature", v.temperature},
             {"top_p", v.top_p},
             {"max_tokens", v.max_tokens},
             {"n", v.n}};
}

void from_json(const json& j, DecodingParams& v) {
    v = DecodingParams{};
    v.temperature = j.value("temperature", v.temperature);
    v.top_p = j.value("top_p", v.top_p);
    v.max_tokens = j.value("max_tokens", v.max_tokens);
    v.n = j.value("n", v.n);
}

void to_json(json& j, const EndpointConfig& v) {
    j = json{{"base_url", v.base_url},
             {"model_name", v.model_name},
             {"api_key_env", v.api_key_env},
             {"timeout_seconds", v.timeout_seconds},
             {"max_retries", v.max_retries},
             {"backoff_base_seconds", v.backoff_base_seconds},
             {"decoding", v.decoding}};
}

void from_json(const json& j, EndpointConfig& v) {
    v = EndpointConfig{};
    v.base_url = j.value("base_url", v.base_url);
    v.model_name = j.at("model_name").get<std::string>();
    v.api_key_env = j.value("api_key_env", v.api_key_env);
    v.timeout_seconds = j.value("timeout_seconds", v.timeout_seconds);
    v.max_retries = j.value("max_retries", v.max_retries);
    v.backoff_base_seconds = j.value("backoff_base_seconds", v.backoff_base_seconds);
    if (auto it = j.find("decoding"); it != j.end()) v.decoding = it->get<DecodingParams>();
}

Gateway::Gateway(std::shared_ptr<const Backend> backend, Sleeper sleeper)
    : backend_(std::move(backend)), sleeper_(std::move(sleeper)) {
    if (!sleeper_) {
        sleeper_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
    }
}

Completion Gateway::complete_one(const EndpointConfig& cfg, const ChatRequest& request) const {
    thread_local std::mt19937_64 jitter{std::random_device{}()};
    Completion out;
    const int max_attempts = cfg.max_retries + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        out.attempts = attempt;
        Attempt a = backend_->send(cfg, request, attempt);
        if (a.status == Attempt::Status::ok) {
            out.text = std::move(a.text);
            return out;
        }
        last_error = a.message.empty() ? "HTTP " + std::to_string(a.http_status) : a.message;
        if (a.status == Attempt::Status::fatal) {
            out.error = last_error + " (not retried)";
            return out;
        }
        if (attempt < max_attempts && cfg.backoff_base_seconds > 0.0) {
            const double cap = cfg.backoff_base_seconds * std::pow(2.0, attempt - 1);
            std::uniform_real_distribution<double> dist(0.0, cap);
            sleeper_(std::chrono::duration<double>(dist(jitter)));
        }
    }
    out.error = "retries exhausted after " + std::to_string(out.attempts) +
                " attempts: " + last_error;
    return out;
}

std::string Gateway::complete(const EndpointConfig& cfg, const ChatRequest& request) const {
    auto c = complete_one(cfg, request);
    if (!c.ok()) throw TransportError(*c.error, c.attempts);
    return std::move(*c.text);
}

std::string Gateway::complete(const EndpointConfig& cfg, const prompt::PromptText& prompt) const {
    return complete(cfg, ChatRequest{prompt, std::nullopt});
}

std::vector<Completion> Gateway::complete_batch(const EndpointConfig& cfg,
                                                const std::vector<ChatRequest>& requests,
                                                int parallelism) const {
    if (parallelism < 1) throw PreconditionError("parallelism must be >= 1");
    std::vector<Completion> results(requests.size());
    if (requests.empty()) return results;

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < requests.size(); i = next.fetch_add(1)) {
            try {
                results[i] = complete_one(cfg, requests[i]);
            } catch (const std::exception& e) {
                results[i] = Completion{};
                results[i].error = e.what();
            }
            results[i].index = i;
        }
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism),
                                               requests.size());
    if (workers == 1) {
        worker();
        return results;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    pool.clear();
    return results;
}

}  // namespace coldqs::gateway
