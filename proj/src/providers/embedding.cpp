#include "inval/providers/embedding.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>

#include "http_json.hpp"
#include "inval/errors.hpp"
#include "inval/util.hpp"

namespace inval {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const double> a, std::span<const double> b) {
    double na = l2_norm(a), nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

void normalize(EmbeddingVector& v) {
    double n = l2_norm(v.values);
    if (n > 0) {
        for (auto& x : v.values) x /= n;
    }
    v.unit_norm = true;
}

std::string_view truncate_utf8(std::string_view s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return s;
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return s.substr(0, cut);
}

namespace {

std::string_view checked_input(std::string_view text) {
    auto t = trim_view(text);
    if (t.empty()) throw PreconditionError("embed_text: text is empty");
    return truncate_utf8(t, kEmbedCharBudget);
}

std::string normalize_token(std::string_view raw) {
    std::string t;
    for (char c : raw) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    auto is_punct = [](char c) { return c > 0 && std::ispunct(static_cast<unsigned char>(c)); };
    std::size_t b = 0, e = t.size();
    while (b < e && is_punct(t[b])) ++b;
    while (e > b && is_punct(t[e - 1])) --e;
    if (b == e) return t;
    return t.substr(b, e - b);
}

}  // namespace

// ---- MockEmbedder

MockEmbedder::MockEmbedder(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
    if (dim < 8) throw PreconditionError("mock embedder requires dim >= 8");
}

std::string MockEmbedder::name() const {
    return "mock-embed-s" + std::to_string(seed_) + "-d" + std::to_string(dim_);
}

const std::vector<double>& MockEmbedder::token_vector(const std::string& token) {
    if (auto it = table_.find(token); it != table_.end()) return it->second;
    std::uint64_t state = fnv1a64(token) ^ (seed_ * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    std::vector<double> v(dim_);
    // Box-Muller over splitmix64 keeps the vectors identical across standard libraries.
    for (std::size_t i = 0; i < dim_; i += 2) {
        double u1 = (static_cast<double>(splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
        double u2 = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        v[i] = r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < dim_) v[i + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    double n = l2_norm(v);
    for (auto& x : v) x /= n;
    return table_.emplace(token, std::move(v)).first->second;
}

EmbeddingVector MockEmbedder::embed_text(std::string_view text) {
    auto input = checked_input(text);
    ++calls_;
    EmbeddingVector out;
    out.values.assign(dim_, 0.0);
    std::lock_guard lk(mu_);
    std::size_t pos = 0;
    while (pos < input.size()) {
        auto b = input.find_first_not_of(" \t\r\n", pos);
        if (b == std::string_view::npos) break;
        auto e = input.find_first_of(" \t\r\n", b);
        if (e == std::string_view::npos) e = input.size();
        const auto& tv = token_vector(normalize_token(input.substr(b, e - b)));
        for (std::size_t i = 0; i < dim_; ++i) out.values[i] += tv[i];
        pos = e;
    }
    normalize(out);
    return out;
}

std::unique_ptr<MockEmbedder> mock_embedder_build(std::uint64_t seed, std::size_t dim) {
    return std::make_unique<MockEmbedder>(seed, dim);
}

// ---- OpenAIEmbedder

OpenAIEmbedder::OpenAIEmbedder(ProviderConfig cfg, std::size_t dim)
    : cfg_(std::move(cfg)), dim_(dim), in_flight_(std::clamp(cfg_.max_in_flight, 1, 64)) {
    if (auto errs = validate_provider_config(cfg_); !errs.empty()) throw PreconditionError(errs.front());
}

EmbeddingVector OpenAIEmbedder::embed_text(std::string_view text) {
    auto input = checked_input(text);
    nlohmann::json body = {{"model", cfg_.model_name}, {"input", std::string(input)}};
    in_flight_.acquire();
    detail::HttpOutcome outcome;
    try {
        ++network_calls_;
        outcome = detail::post_json(cfg_, "/embeddings", body);
    } catch (...) {
        in_flight_.release();
        throw;
    }
    in_flight_.release();

    EmbeddingVector v;
    try {
        v.values = outcome.body.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(ProviderError::Kind::protocol, std::string("unexpected embedding shape: ") + e.what());
    }
    if (v.values.size() != dim_) {
        throw ProviderError(ProviderError::Kind::protocol, "embedding dimension " + std::to_string(v.values.size()) +
                                                               " != configured " + std::to_string(dim_));
    }
    normalize(v);
    return v;
}

// ---- CachedEmbedder

CachedEmbedder::CachedEmbedder(std::shared_ptr<Embedder> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

EmbeddingVector CachedEmbedder::embed_text(std::string_view text) {
    auto input = checked_input(text);
    nlohmann::json req = {{"kind", "embed"}, {"model", inner_->name()}, {"input", std::string(input)}};
    auto key = sha256_hex(req.dump());
    auto lock = cache_->key_lock(key);
    std::lock_guard lk(*lock);
    if (auto hit = cache_->get(key)) {
        ++stats_.hits;
        return {nlohmann::json::parse(*hit).get<std::vector<double>>(), true};
    }
    ++stats_.misses;
    auto v = inner_->embed_text(input);
    cache_->put(key, nlohmann::json(v.values).dump());
    return v;
}

}  // namespace inval
