#pragma once

#include <json.hpp>

#include <string>

#include "inval/providers/config.hpp"

namespace inval::detail {

struct HttpOutcome {
    nlohmann::json body;
    int retries = 0;
};

/// POSTs `body` to base_url + `path` with a bearer token from cfg.api_key_env (when set).
/// Connection failures, timeouts, 429 and 5xx are retried up to cfg.max_retries times with
/// exponential backoff; 401/403 fail immediately with an auth error.
HttpOutcome post_json(const ProviderConfig& cfg, const std::string& path, const nlohmann::json& body);

}  // namespace inval::detail
