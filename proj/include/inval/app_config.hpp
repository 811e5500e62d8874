#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "inval/providers/chat.hpp"
#include "inval/providers/config.hpp"
#include "inval/providers/embedding.hpp"
#include "inval/providers/visual.hpp"
#include "inval/types.hpp"

namespace inval {

/// Everything a CLI run or server needs besides its inputs.
///
/// JSON layout (all keys optional):
///   {"pipeline": {"rounds", "top_k", "relevance_epochs", "detector_epochs", "learning_rate",
///                 "relevance_learning_rate", "threshold", "seed", "chatting", "rewriting",
///                 "searching", "use_visual", "embedding_dim", "visual_dim"},
///    "chat": {ProviderConfig}, "embedding": {ProviderConfig},
///    "visual_dir": path, "cache_dir": path, "mock_providers": bool}
struct AppConfig {
    PipelineConfig pipeline;
    ProviderConfig chat;
    ProviderConfig embedding;
    std::optional<std::filesystem::path> visual_dir;
    std::optional<std::filesystem::path> cache_dir;
    bool mock_providers = false;

    AppConfig();
};

nlohmann::ordered_json pipeline_to_json(const PipelineConfig& cfg);
/// Throws PreconditionError on unknown keys, wrong types, or a config that fails validation.
AppConfig app_config_from_json(const nlohmann::json& j);
AppConfig load_app_config(const std::filesystem::path& path);

/// Chat, embedder and visual handles with the response cache in front of the first two.
struct ProviderSet {
    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<VisualProvider> visual;
    std::shared_ptr<CachedChat> cached_chat;
    std::shared_ptr<CachedEmbedder> cached_embedder;
    std::string visual_name;

    /// Requests that went past the cache to the underlying provider.
    long upstream_calls() const;
    long cache_hits() const;
    nlohmann::ordered_json describe() const;
};

/// RuleBasedChat, MockEmbedder and MockVisual, seeded from the pipeline config.
ProviderSet make_mock_providers(const PipelineConfig& cfg, std::optional<std::filesystem::path> cache_dir);
/// OpenAI-compatible chat and embedding clients; visual features from visual_dir when set,
/// seeded mock vectors otherwise.
ProviderSet make_http_providers(const AppConfig& cfg);
ProviderSet make_providers(const AppConfig& cfg);

}  // namespace inval
