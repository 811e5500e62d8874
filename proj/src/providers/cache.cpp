#include "inval/providers/cache.hpp"

#include "inval/util.hpp"

namespace inval {

ResponseCache::ResponseCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
    if (dir_) std::filesystem::create_directories(*dir_);
}

std::filesystem::path ResponseCache::file_for(const std::string& key) const {
    return *dir_ / key.substr(0, 2) / (key + ".txt");
}

std::optional<std::string> ResponseCache::get(const std::string& key) {
    {
        std::lock_guard lk(mu_);
        if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }
    if (!dir_) return std::nullopt;
    auto path = file_for(key);
    if (!std::filesystem::exists(path)) return std::nullopt;
    auto value = read_file(path);
    std::lock_guard lk(mu_);
    memory_.emplace(key, value);
    return value;
}

void ResponseCache::put(const std::string& key, const std::string& value) {
    if (dir_) write_file_atomic(file_for(key), value);
    std::lock_guard lk(mu_);
    memory_[key] = value;
}

std::shared_ptr<std::mutex> ResponseCache::key_lock(const std::string& key) {
    std::lock_guard lk(mu_);
    auto& slot = locks_[key];
    if (!slot) slot = std::make_shared<std::mutex>();
    return slot;
}

}  // namespace inval
