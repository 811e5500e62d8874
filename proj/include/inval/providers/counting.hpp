#pragma once

#include <atomic>
#include <string>
#include <string_view>

#include "inval/providers/chat.hpp"
#include "inval/providers/embedding.hpp"

namespace inval {

/// Pass-through that counts requests, used to attribute calls to one pipeline stage.
class CountingChat : public ChatProvider {
public:
    explicit CountingChat(ChatProvider& inner) : inner_(inner) {}

    std::string chat(const ChatRequest& req) override {
        ++calls_;
        return inner_.chat(req);
    }
    std::string name() const override { return inner_.name(); }
    long calls() const { return calls_.load(); }

private:
    ChatProvider& inner_;
    std::atomic<long> calls_{0};
};

class CountingEmbedder : public Embedder {
public:
    explicit CountingEmbedder(Embedder& inner) : inner_(inner) {}

    EmbeddingVector embed_text(std::string_view text) override {
        ++calls_;
        return inner_.embed_text(text);
    }
    std::size_t dim() const override { return inner_.dim(); }
    std::string name() const override { return inner_.name(); }
    long calls() const { return calls_.load(); }

private:
    Embedder& inner_;
    std::atomic<long> calls_{0};
};

}  // namespace inval
