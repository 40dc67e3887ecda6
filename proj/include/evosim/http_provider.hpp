#pragma once

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "evosim/errors.hpp"
#include "evosim/provider.hpp"

namespace evosim {

// Live backend settings. The credential is read from EVOSIM_API_KEY only;
// it never appears in config files or flags.
struct HttpProviderSettings {
    std::string endpoint = "https://api.openai.com/v1";  // scheme://host[:port][/base-path]
    std::string model = "gpt-3.5-turbo";
    RetryPolicy retry;
    std::chrono::seconds timeout{60};
    std::optional<std::uint64_t> seed;  // forwarded to backends that honor it
};

namespace detail {

struct EndpointParts {
    std::string origin;     // scheme://host[:port]
    std::string base_path;  // leading path, possibly empty
};

inline EndpointParts split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw EvoError(errc::config_schema, "endpoint must include a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, ""};
    std::string path = endpoint.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {endpoint.substr(0, path_start), path};
}

}  // namespace detail

// Speaks the OpenAI-compatible chat-completions protocol: one system message,
// one user message per call. Transient failures retry per policy.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpProviderSettings settings, SleepFn sleep = default_sleep)
        : settings_(std::move(settings)), sleep_(std::move(sleep)) {
        const char* key = std::getenv("EVOSIM_API_KEY");
        if (!key || !*key)
            throw EvoError(errc::auth, "EVOSIM_API_KEY is not set");
        api_key_ = key;
    }

    CompletionResponse complete(const CompletionRequest& req) override {
        return with_retry([&] { return attempt(req); }, settings_.retry, sleep_);
    }

private:
    CompletionResponse attempt(const CompletionRequest& req) {
        auto parts = detail::split_endpoint(settings_.endpoint);
        httplib::Client client(parts.origin);
        client.set_connection_timeout(settings_.timeout.count(), 0);
        client.set_read_timeout(settings_.timeout.count(), 0);
        client.set_write_timeout(settings_.timeout.count(), 0);
        client.set_bearer_token_auth(api_key_);

        nlohmann::json body = {
            {"model", settings_.model},
            {"messages",
             {{{"role", "system"}, {"content", req.system_text}},
              {{"role", "user"}, {"content", req.user_text}}}},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens},
        };
        if (settings_.seed) body["seed"] = *settings_.seed;

        auto start = std::chrono::steady_clock::now();
        auto result = client.Post(parts.base_path + "/chat/completions", body.dump(),
                                  "application/json");
        auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();

        if (!result)
            throw EvoError(errc::transient,
                           "request failed: " + httplib::to_string(result.error()), true);
        if (result->status == 401 || result->status == 403)
            throw EvoError(errc::auth, "authorization rejected (status " +
                                           std::to_string(result->status) + ")");
        if (result->status == 408 || result->status == 429 || result->status >= 500)
            throw EvoError(errc::transient,
                           "status " + std::to_string(result->status), true);
        if (result->status != 200)
            throw EvoError(errc::generation,
                           "unexpected status " + std::to_string(result->status) + ": " +
                               result->body);

        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(result->body);
        } catch (const nlohmann::json::exception& e) {
            throw EvoError(errc::generation, "malformed response body: " + std::string(e.what()));
        }
        if (!doc.contains("choices") || doc["choices"].empty() ||
            !doc["choices"][0].contains("message"))
            throw EvoError(errc::generation, "response carries no choices");
        std::string text = doc["choices"][0]["message"].value("content", "");
        if (text.empty())
            throw EvoError(errc::generation, "provider returned empty text");
        return {text, "http:" + settings_.model, latency};
    }

    HttpProviderSettings settings_;
    SleepFn sleep_;
    std::string api_key_;
};

}  // namespace evosim
