#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "inval/providers/cache.hpp"
#include "inval/providers/config.hpp"

namespace inval {

struct ChatRequest {
    std::string system;
    std::string user;
    double temperature = 0.0;
    int max_tokens = 256;

    friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    /// Assistant text for `req`. Implementations throw ProviderError; never return "".
    virtual std::string chat(const ChatRequest& req) = 0;
    virtual std::string name() const = 0;
};

/// Replays a fixed queue of replies and records every request it receives.
class ScriptedChat : public ChatProvider {
public:
    explicit ScriptedChat(std::vector<std::string> replies = {});

    std::string chat(const ChatRequest& req) override;
    std::string name() const override { return "scripted"; }

    void push(std::string reply);
    std::vector<ChatRequest> requests() const;
    long calls() const { return calls_.load(); }

private:
    mutable std::mutex mu_;
    std::deque<std::string> replies_;
    std::vector<ChatRequest> requests_;
    std::atomic<long> calls_{0};
};

/// Deterministic offline stand-in for an LLM. Recognizes the shipped prompt templates by
/// their system prompt and answers in kind: a "Do you mean ..." follow-up, a yes/no reply,
/// the initial question as the intent summary, and the current subtitle as its description.
class RuleBasedChat : public ChatProvider {
public:
    std::string chat(const ChatRequest& req) override;
    std::string name() const override { return "mock-rules"; }
    long calls() const { return calls_.load(); }

private:
    std::atomic<long> calls_{0};
};

/// Client for POST {base_url}/chat/completions (OpenAI-compatible).
class OpenAIChatClient : public ChatProvider {
public:
    explicit OpenAIChatClient(ProviderConfig cfg);

    std::string chat(const ChatRequest& req) override;
    std::string name() const override { return cfg_.model_name; }

    /// Retries spent by the most recent call on this thread's behalf.
    int last_retry_count() const { return last_retries_.load(); }
    long network_calls() const { return network_calls_.load(); }

private:
    ProviderConfig cfg_;
    std::counting_semaphore<64> in_flight_;
    std::atomic<int> last_retries_{0};
    std::atomic<long> network_calls_{0};
};

/// Wraps any provider with a ResponseCache keyed by the hash of the full request.
class CachedChat : public ChatProvider {
public:
    CachedChat(std::shared_ptr<ChatProvider> inner, std::shared_ptr<ResponseCache> cache);

    std::string chat(const ChatRequest& req) override;
    std::string name() const override { return inner_->name(); }

    long upstream_calls() const { return stats_.misses.load(); }
    long cache_hits() const { return stats_.hits.load(); }

    static std::string cache_key(const std::string& model, const ChatRequest& req);

private:
    std::shared_ptr<ChatProvider> inner_;
    std::shared_ptr<ResponseCache> cache_;
    CacheStats stats_;
};

}  // namespace inval
