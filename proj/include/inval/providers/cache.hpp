#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace inval {

/// Content-addressed response store. Entries live in memory and, when a directory is
/// given, as one file per key under it. Keys are SHA-256 hex digests of the request.
class ResponseCache {
public:
    explicit ResponseCache(std::optional<std::filesystem::path> dir = std::nullopt);

    std::optional<std::string> get(const std::string& key);
    void put(const std::string& key, const std::string& value);

    /// Mutex held while a key is being resolved, so concurrent identical requests
    /// produce one upstream call.
    std::shared_ptr<std::mutex> key_lock(const std::string& key);

    const std::optional<std::filesystem::path>& dir() const { return dir_; }

private:
    std::filesystem::path file_for(const std::string& key) const;

    std::optional<std::filesystem::path> dir_;
    std::mutex mu_;
    std::unordered_map<std::string, std::string> memory_;
    std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

struct CacheStats {
    std::atomic<long> hits{0};
    std::atomic<long> misses{0};
};

}  // namespace inval
