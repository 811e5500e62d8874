#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "inval/providers/cache.hpp"
#include "inval/providers/config.hpp"

namespace inval {

struct EmbeddingVector {
    std::vector<double> values;
    bool unit_norm = false;

    std::size_t dim() const { return values.size(); }
    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
/// Cosine similarity; 0 when either vector is all zeros.
double cosine(std::span<const double> a, std::span<const double> b);
/// Scales to unit length in place (zero vectors stay zero) and sets unit_norm.
void normalize(EmbeddingVector& v);

/// Longest input (in bytes) sent to an embedder; longer texts are cut at a UTF-8 boundary.
inline constexpr std::size_t kEmbedCharBudget = 8192;
std::string_view truncate_utf8(std::string_view s, std::size_t max_bytes);

class Embedder {
public:
    virtual ~Embedder() = default;
    /// Unit-norm embedding of `text`. Throws PreconditionError when `text` is blank.
    virtual EmbeddingVector embed_text(std::string_view text) = 0;
    virtual std::size_t dim() const = 0;
    virtual std::string name() const = 0;
};

/// Bag-of-tokens embedder: whitespace tokens (lower-cased, edge punctuation removed) map
/// through a seeded hash to fixed pseudo-random unit vectors, which are averaged and
/// renormalized. Texts that share more tokens get higher cosine similarity.
class MockEmbedder : public Embedder {
public:
    MockEmbedder(std::uint64_t seed, std::size_t dim);

    EmbeddingVector embed_text(std::string_view text) override;
    std::size_t dim() const override { return dim_; }
    std::string name() const override;

    long calls() const { return calls_.load(); }

private:
    const std::vector<double>& token_vector(const std::string& token);

    std::uint64_t seed_;
    std::size_t dim_;
    std::mutex mu_;
    std::unordered_map<std::string, std::vector<double>> table_;
    std::atomic<long> calls_{0};
};

std::unique_ptr<MockEmbedder> mock_embedder_build(std::uint64_t seed, std::size_t dim);

/// Client for POST {base_url}/embeddings (OpenAI-compatible).
class OpenAIEmbedder : public Embedder {
public:
    OpenAIEmbedder(ProviderConfig cfg, std::size_t dim);

    EmbeddingVector embed_text(std::string_view text) override;
    std::size_t dim() const override { return dim_; }
    std::string name() const override { return cfg_.model_name; }

    long network_calls() const { return network_calls_.load(); }

private:
    ProviderConfig cfg_;
    std::size_t dim_;
    std::counting_semaphore<64> in_flight_;
    std::atomic<long> network_calls_{0};
};

class CachedEmbedder : public Embedder {
public:
    CachedEmbedder(std::shared_ptr<Embedder> inner, std::shared_ptr<ResponseCache> cache);

    EmbeddingVector embed_text(std::string_view text) override;
    std::size_t dim() const override { return inner_->dim(); }
    std::string name() const override { return inner_->name(); }

    long upstream_calls() const { return stats_.misses.load(); }
    long cache_hits() const { return stats_.hits.load(); }

private:
    std::shared_ptr<Embedder> inner_;
    std::shared_ptr<ResponseCache> cache_;
    CacheStats stats_;
};

}  // namespace inval
