#include "inval/providers/chat.hpp"

#include <json.hpp>

#include "http_json.hpp"
#include "inval/errors.hpp"
#include "inval/util.hpp"

namespace inval {

std::vector<std::string> validate_provider_config(const ProviderConfig& cfg) {
    std::vector<std::string> out;
    if (cfg.max_retries < 0 || cfg.max_retries > 5) out.push_back("max_retries: must lie in [0,5]");
    if (!(cfg.timeout_s > 0)) out.push_back("timeout_s: must be positive");
    if (cfg.max_in_flight < 1 || cfg.max_in_flight > 64) out.push_back("max_in_flight: must lie in [1,64]");
    if (cfg.base_url.find("://") == std::string::npos) out.push_back("base_url: missing scheme");
    return out;
}

// ---- ScriptedChat

ScriptedChat::ScriptedChat(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}

std::string ScriptedChat::chat(const ChatRequest& req) {
    std::lock_guard lk(mu_);
    ++calls_;
    requests_.push_back(req);
    if (replies_.empty()) throw ProviderError(ProviderError::Kind::transport, "script exhausted");
    auto reply = std::move(replies_.front());
    replies_.pop_front();
    if (reply.empty()) throw ProviderError(ProviderError::Kind::empty, "empty completion");
    return reply;
}

void ScriptedChat::push(std::string reply) {
    std::lock_guard lk(mu_);
    replies_.push_back(std::move(reply));
}

std::vector<ChatRequest> ScriptedChat::requests() const {
    std::lock_guard lk(mu_);
    return requests_;
}

// ---- RuleBasedChat

namespace {

std::optional<std::string> field_after(const std::string& text, std::string_view marker) {
    auto pos = text.find(marker);
    if (pos == std::string::npos) return std::nullopt;
    pos += marker.size();
    auto end = text.find('\n', pos);
    return std::string(trim_view(std::string_view(text).substr(pos, end == std::string::npos ? end : end - pos)));
}

std::size_t count_occurrences(const std::string& text, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + needle.size())) ++n;
    return n;
}

std::string strip_question_mark(std::string q) {
    while (!q.empty() && (q.back() == '?' || q.back() == '.')) q.pop_back();
    if (q.ends_with("\xEF\xBC\x9F")) q.resize(q.size() - 3);  // full-width question mark
    return q;
}

}  // namespace

std::string RuleBasedChat::chat(const ChatRequest& req) {
    ++calls_;
    const auto& u = req.user;
    if (auto q = field_after(u, "INITIAL_QUESTION:")) {
        auto round = count_occurrences(u, "Q: ") + 1;
        return "Do you mean " + strip_question_mark(*q) + " (detail " + std::to_string(round) + ")?";
    }
    if (auto q = field_after(u, "QUESTION:"); q && u.find("TEXT_CONTENT:") != std::string::npos) {
        return fnv1a64(*q) % 2 == 0 ? "Yes." : "No.";
    }
    if (auto q = field_after(u, "INITIAL QUESTION:")) return *q;
    if (auto s = field_after(u, "Current Subtitle:")) return *s;

    if (auto q = field_after(u, "参考的初始问题：")) {
        auto fq = field_after(u, "问题：").value_or("");
        return fnv1a64(fq) % 2 == 0 ? "是" : "否";
    }
    if (u.find("历史对话：") != std::string::npos) {
        auto q = field_after(u, "初始问题：").value_or("");
        auto round = count_occurrences(u, "Q: ") + 1;
        return "你的意思是" + strip_question_mark(q) + "（细节" + std::to_string(round) + "）？";
    }
    if (auto s = field_after(u, "当前字幕：")) return *s;
    if (auto q = field_after(u, "初始问题：")) return *q;
    return "ok";
}

// ---- OpenAIChatClient

OpenAIChatClient::OpenAIChatClient(ProviderConfig cfg)
    : cfg_(std::move(cfg)), in_flight_(std::clamp(cfg_.max_in_flight, 1, 64)) {
    if (auto errs = validate_provider_config(cfg_); !errs.empty()) throw PreconditionError(errs.front());
}

std::string OpenAIChatClient::chat(const ChatRequest& req) {
    if (req.user.empty()) throw PreconditionError("chat request with empty user text");
    nlohmann::json body = {
        {"model", cfg_.model_name},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
        {"messages", nlohmann::json::array()},
    };
    if (!req.system.empty()) body["messages"].push_back({{"role", "system"}, {"content", req.system}});
    body["messages"].push_back({{"role", "user"}, {"content", req.user}});

    in_flight_.acquire();
    detail::HttpOutcome outcome;
    try {
        ++network_calls_;
        outcome = detail::post_json(cfg_, "/chat/completions", body);
    } catch (...) {
        in_flight_.release();
        throw;
    }
    in_flight_.release();
    last_retries_ = outcome.retries;

    std::string text;
    try {
        const auto& content = outcome.body.at("choices").at(0).at("message").at("content");
        if (content.is_string()) text = content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(ProviderError::Kind::protocol, std::string("unexpected completion shape: ") + e.what());
    }
    if (trim_view(text).empty()) throw ProviderError(ProviderError::Kind::empty, "empty completion");
    return text;
}

// ---- CachedChat

CachedChat::CachedChat(std::shared_ptr<ChatProvider> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::string CachedChat::cache_key(const std::string& model, const ChatRequest& req) {
    nlohmann::json j = {{"kind", "chat"},          {"model", model},
                        {"system", req.system},    {"user", req.user},
                        {"temperature", req.temperature}, {"max_tokens", req.max_tokens}};
    return sha256_hex(j.dump());
}

std::string CachedChat::chat(const ChatRequest& req) {
    auto key = cache_key(inner_->name(), req);
    auto lock = cache_->key_lock(key);
    std::lock_guard lk(*lock);
    if (auto hit = cache_->get(key)) {
        ++stats_.hits;
        return *hit;
    }
    ++stats_.misses;
    auto text = inner_->chat(req);
    cache_->put(key, text);
    return text;
}

}  // namespace inval
