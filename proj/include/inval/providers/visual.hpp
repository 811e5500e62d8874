#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "inval/providers/embedding.hpp"

namespace inval {

/// Segment-major matrix of visual features for one video.
struct FeatureStore {
    std::uint32_t dim = 0;
    std::vector<float> values;  // count * dim

    std::uint32_t count() const { return dim ? static_cast<std::uint32_t>(values.size() / dim) : 0; }
    friend bool operator==(const FeatureStore&, const FeatureStore&) = default;
};

/// "IVALVF01", u32 count, u32 dim, then count*dim little-endian float32.
std::string encode_feature_store(const FeatureStore& store);
FeatureStore decode_feature_store(std::string_view bytes);
void write_feature_store(const std::filesystem::path& path, const FeatureStore& store);
FeatureStore read_feature_store(const std::filesystem::path& path);

class VisualProvider {
public:
    virtual ~VisualProvider() = default;
    /// Throws LookupError naming the segment when no feature exists.
    virtual EmbeddingVector visual_feature(const std::string& video_id, std::uint32_t index) = 0;
    virtual std::size_t dim() const = 0;
};

/// Reads "<dir>/<video_id>.ivf" on first use of a video; in-memory stores can be added directly.
class FeatureStoreProvider : public VisualProvider {
public:
    FeatureStoreProvider(std::filesystem::path dir, std::size_t dim);

    void add(const std::string& video_id, FeatureStore store);
    EmbeddingVector visual_feature(const std::string& video_id, std::uint32_t index) override;
    std::size_t dim() const override { return dim_; }

private:
    std::filesystem::path dir_;
    std::size_t dim_;
    std::mutex mu_;
    std::map<std::string, FeatureStore> stores_;
};

/// Seeded pseudo-random unit vector per (video_id, index).
class MockVisual : public VisualProvider {
public:
    MockVisual(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {}

    EmbeddingVector visual_feature(const std::string& video_id, std::uint32_t index) override;
    std::size_t dim() const override { return dim_; }

private:
    std::uint64_t seed_;
    std::size_t dim_;
};

}  // namespace inval
