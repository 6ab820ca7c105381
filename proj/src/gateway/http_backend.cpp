#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "coldqs/gateway.hpp"

namespace coldqs::gateway {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix without trailing slash
};

SplitUrl split_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = base_url.find('/', host_start);
    SplitUrl out;
    if (path_start == std::string::npos) {
        out.origin = base_url;
    } else {
        out.origin = base_url.substr(0, path_start);
        out.path = base_url.substr(path_start);
    }
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    return out;
}

}  // namespace

json HttpBackend::request_body(const EndpointConfig& cfg, const ChatRequest& request) {
    json messages = json::array();
    if (request.prompt.system_text)
        messages.push_back({{"role", "system"}, {"content", *request.prompt.system_text}});
    messages.push_back({{"role", "user"}, {"content", request.prompt.user_text}});
    json body{{"model", cfg.model_name},
              {"messages", std::move(messages)},
              {"temperature", cfg.decoding.temperature},
              {"top_p", cfg.decoding.top_p},
              {"max_tokens", cfg.decoding.max_tokens},
              {"n", cfg.decoding.n},
              {"stream", false}};
    if (request.seed) body["seed"] = *request.seed;
    return body;
}

Attempt HttpBackend::send(const EndpointConfig& cfg, const ChatRequest& request, int) const {
    const auto url = split_url(cfg.base_url);
    httplib::Client client(url.origin);
    const auto timeout_us = static_cast<long long>(cfg.timeout_seconds * 1e6);
    const auto secs = static_cast<time_t>(timeout_us / 1000000);
    const auto usecs = static_cast<time_t>(timeout_us % 1000000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!cfg.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    auto res = client.Post(url.path + "/chat/completions", headers,
                           request_body(cfg, request).dump(), "application/json");
    if (!res) {
        return {Attempt::Status::retryable, {}, 0,
                "transport: " + httplib::to_string(res.error())};
    }
    const int status = res->status;
    if (status == 429 || status >= 500)
        return {Attempt::Status::retryable, {}, status, "HTTP " + std::to_string(status)};
    if (status < 200 || status >= 300)
        return {Attempt::Status::fatal, {}, status, "HTTP " + std::to_string(status)};

    auto body = json::parse(res->body, nullptr, false);
    if (body.is_discarded())
        return {Attempt::Status::fatal, {}, status, "response body is not JSON"};
    try {
        const auto& content = body.at("choices").at(0).at("message").at("content");
        return Attempt::success(content.get<std::string>());
    } catch (const json::exception&) {
        return {Attempt::Status::fatal, {}, status, "response lacks choices[0].message.content"};
    }
}

}  // namespace coldqs::gateway
