#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace inval {

struct ProviderConfig {
    std::string base_url = "http://127.0.0.1:8000/v1";
    std::string api_key_env = "ASK2LOC_CHAT_KEY";
    std::string model_name;
    double timeout_s = 60.0;
    int max_retries = 3;
    /// First retry waits this long; each further retry doubles it.
    double backoff_s = 0.5;
    std::filesystem::path cache_dir;
    int max_in_flight = 4;
};

std::vector<std::string> validate_provider_config(const ProviderConfig& cfg);

}  // namespace inval
