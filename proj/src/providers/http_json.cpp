#include "http_json.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "inval/errors.hpp"

namespace inval::detail {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path under the origin, no trailing slash
};

Endpoint split_url(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ProviderError(ProviderError::Kind::protocol, "bad base_url " + url);
    auto slash = url.find('/', scheme + 3);
    Endpoint ep;
    ep.origin = url.substr(0, slash);
    ep.prefix = slash == std::string::npos ? "" : url.substr(slash);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    return ep;
}

}  // namespace

HttpOutcome post_json(const ProviderConfig& cfg, const std::string& path, const nlohmann::json& body) {
    auto ep = split_url(cfg.base_url);
    httplib::Client client(ep.origin);
    auto secs = static_cast<time_t>(cfg.timeout_s);
    auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const auto payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0 && cfg.backoff_s > 0) {
            auto wait = cfg.backoff_s * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        }
        auto res = client.Post(ep.prefix + path, headers, payload, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403) {
            throw ProviderError(ProviderError::Kind::auth,
                                "authentication rejected (HTTP " + std::to_string(res->status) + ")");
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status >= 400) {
            throw ProviderError(ProviderError::Kind::protocol,
                                "HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            return {nlohmann::json::parse(res->body), attempt};
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(ProviderError::Kind::protocol, std::string("invalid JSON response: ") + e.what());
        }
    }
    throw ProviderError(ProviderError::Kind::transport,
                        "giving up after " + std::to_string(cfg.max_retries) + " retries: " + last_error);
}

}  // namespace inval::detail
