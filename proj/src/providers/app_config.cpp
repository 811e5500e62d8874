#include "inval/app_config.hpp"

#include <set>

#include "inval/errors.hpp"
#include "inval/util.hpp"

namespace inval {

using nlohmann::json;
using nlohmann::ordered_json;

AppConfig::AppConfig() {
    chat.model_name = "gpt-4o";
    embedding.api_key_env = "ASK2LOC_EMBED_KEY";
    embedding.model_name = "text-embedding-3-small";
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw PreconditionError(where + ": expected an object");
    for (const auto& [k, _] : j.items()) {
        if (!allowed.contains(k)) throw PreconditionError(where + ": unknown key '" + k + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw PreconditionError(where + "." + key + ": wrong type");
    }
}

void read_provider(const json& j, ProviderConfig& p, const std::string& where) {
    check_keys(j, {"base_url", "api_key_env", "model_name", "timeout_s", "max_retries", "backoff_s", "cache_dir",
                   "max_in_flight"},
               where);
    read(j, "base_url", p.base_url, where);
    read(j, "api_key_env", p.api_key_env, where);
    read(j, "model_name", p.model_name, where);
    read(j, "timeout_s", p.timeout_s, where);
    read(j, "max_retries", p.max_retries, where);
    read(j, "backoff_s", p.backoff_s, where);
    std::string dir;
    read(j, "cache_dir", dir, where);
    if (!dir.empty()) p.cache_dir = dir;
    read(j, "max_in_flight", p.max_in_flight, where);
    if (auto v = validate_provider_config(p); !v.empty()) throw PreconditionError(where + ": " + v.front());
}

}  // namespace

ordered_json pipeline_to_json(const PipelineConfig& c) {
    return {
        {"rounds", c.rounds},
        {"top_k", c.top_k},
        {"relevance_epochs", c.relevance_epochs},
        {"detector_epochs", c.detector_epochs},
        {"learning_rate", c.learning_rate},
        {"relevance_learning_rate", c.relevance_learning_rate},
        {"threshold", c.threshold},
        {"seed", c.seed},
        {"chatting", c.toggles.chatting},
        {"rewriting", c.toggles.rewriting},
        {"searching", c.toggles.searching},
        {"use_visual", c.use_visual},
        {"embedding_dim", c.embedding_dim},
        {"visual_dim", c.visual_dim},
    };
}

AppConfig app_config_from_json(const json& j) {
    AppConfig cfg;
    check_keys(j, {"pipeline", "chat", "embedding", "visual_dir", "cache_dir", "mock_providers"}, "config");
    if (auto it = j.find("pipeline"); it != j.end()) {
        const std::string w = "pipeline";
        check_keys(*it, {"rounds", "top_k", "relevance_epochs", "detector_epochs", "learning_rate",
                         "relevance_learning_rate", "threshold", "seed", "chatting", "rewriting", "searching",
                         "use_visual", "embedding_dim", "visual_dim"},
                   w);
        auto& p = cfg.pipeline;
        read(*it, "rounds", p.rounds, w);
        read(*it, "top_k", p.top_k, w);
        read(*it, "relevance_epochs", p.relevance_epochs, w);
        read(*it, "detector_epochs", p.detector_epochs, w);
        read(*it, "learning_rate", p.learning_rate, w);
        read(*it, "relevance_learning_rate", p.relevance_learning_rate, w);
        read(*it, "threshold", p.threshold, w);
        read(*it, "seed", p.seed, w);
        read(*it, "chatting", p.toggles.chatting, w);
        read(*it, "rewriting", p.toggles.rewriting, w);
        read(*it, "searching", p.toggles.searching, w);
        read(*it, "use_visual", p.use_visual, w);
        read(*it, "embedding_dim", p.embedding_dim, w);
        read(*it, "visual_dim", p.visual_dim, w);
        if (auto v = validate_config(p); !v.empty()) throw PreconditionError("pipeline: " + v.front());
    }
    if (auto it = j.find("chat"); it != j.end()) read_provider(*it, cfg.chat, "chat");
    if (auto it = j.find("embedding"); it != j.end()) read_provider(*it, cfg.embedding, "embedding");
    std::string dir;
    read(j, "visual_dir", dir, "config");
    if (!dir.empty()) cfg.visual_dir = dir;
    dir.clear();
    read(j, "cache_dir", dir, "config");
    if (!dir.empty()) cfg.cache_dir = dir;
    read(j, "mock_providers", cfg.mock_providers, "config");
    return cfg;
}

AppConfig load_app_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw PreconditionError("config " + path.string() + ": " + e.what());
    }
    return app_config_from_json(j);
}

long ProviderSet::upstream_calls() const {
    long n = 0;
    if (cached_chat) n += cached_chat->upstream_calls();
    if (cached_embedder) n += cached_embedder->upstream_calls();
    return n;
}

long ProviderSet::cache_hits() const {
    long n = 0;
    if (cached_chat) n += cached_chat->cache_hits();
    if (cached_embedder) n += cached_embedder->cache_hits();
    return n;
}

ordered_json ProviderSet::describe() const {
    return {{"chat", chat ? chat->name() : ""}, {"embedding", embedder ? embedder->name() : ""}, {"visual", visual_name}};
}

namespace {

ProviderSet wrap(std::shared_ptr<ChatProvider> chat, std::shared_ptr<Embedder> embedder,
                 std::shared_ptr<VisualProvider> visual, std::string visual_name,
                 const std::optional<std::filesystem::path>& cache_dir) {
    auto cache = std::make_shared<ResponseCache>(cache_dir);
    ProviderSet set;
    set.cached_chat = std::make_shared<CachedChat>(std::move(chat), cache);
    set.cached_embedder = std::make_shared<CachedEmbedder>(std::move(embedder), cache);
    set.chat = set.cached_chat;
    set.embedder = set.cached_embedder;
    set.visual = std::move(visual);
    set.visual_name = std::move(visual_name);
    return set;
}

std::string mock_visual_name(const PipelineConfig& cfg) {
    return "mock-visual-s" + std::to_string(cfg.seed) + "-d" + std::to_string(cfg.visual_dim);
}

}  // namespace

ProviderSet make_mock_providers(const PipelineConfig& cfg, std::optional<std::filesystem::path> cache_dir) {
    return wrap(std::make_shared<RuleBasedChat>(), mock_embedder_build(cfg.seed, cfg.embedding_dim),
                std::make_shared<MockVisual>(cfg.seed, cfg.visual_dim), mock_visual_name(cfg), cache_dir);
}

ProviderSet make_http_providers(const AppConfig& cfg) {
    std::shared_ptr<VisualProvider> visual;
    std::string visual_name;
    if (cfg.visual_dir) {
        visual = std::make_shared<FeatureStoreProvider>(*cfg.visual_dir, cfg.pipeline.visual_dim);
        visual_name = "store:" + cfg.visual_dir->string();
    } else {
        visual = std::make_shared<MockVisual>(cfg.pipeline.seed, cfg.pipeline.visual_dim);
        visual_name = mock_visual_name(cfg.pipeline);
    }
    return wrap(std::make_shared<OpenAIChatClient>(cfg.chat),
                std::make_shared<OpenAIEmbedder>(cfg.embedding, cfg.pipeline.embedding_dim), std::move(visual),
                std::move(visual_name), cfg.cache_dir);
}

ProviderSet make_providers(const AppConfig& cfg) {
    return cfg.mock_providers ? make_mock_providers(cfg.pipeline, cfg.cache_dir) : make_http_providers(cfg);
}

}  // namespace inval
