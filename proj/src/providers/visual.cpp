#include "inval/providers/visual.hpp"

#include <cmath>

#include "inval/binary_io.hpp"
#include "inval/errors.hpp"
#include "inval/util.hpp"

namespace inval {

namespace {
constexpr std::string_view kMagic = "IVALVF01";
}

std::string encode_feature_store(const FeatureStore& store) {
    if (store.dim == 0 || store.values.size() % store.dim != 0) {
        throw PreconditionError("feature store size is not a multiple of dim");
    }
    std::string out(kMagic);
    binio::put_u32(out, store.count());
    binio::put_u32(out, store.dim);
    for (float v : store.values) binio::put_f32(out, v);
    return out;
}

FeatureStore decode_feature_store(std::string_view bytes) {
    binio::Reader r(bytes);
    r.expect_magic(kMagic);
    auto count = r.u32();
    FeatureStore store;
    store.dim = r.u32();
    if (std::uint64_t(count) * store.dim * 4 != r.remaining()) {
        throw ParseError(0, "feature store payload does not match count*dim");
    }
    store.values.resize(std::size_t(count) * store.dim);
    for (auto& v : store.values) v = r.f32();
    return store;
}

void write_feature_store(const std::filesystem::path& path, const FeatureStore& store) {
    write_file_atomic(path, encode_feature_store(store));
}

FeatureStore read_feature_store(const std::filesystem::path& path) { return decode_feature_store(read_file(path)); }

FeatureStoreProvider::FeatureStoreProvider(std::filesystem::path dir, std::size_t dim)
    : dir_(std::move(dir)), dim_(dim) {}

void FeatureStoreProvider::add(const std::string& video_id, FeatureStore store) {
    std::lock_guard lk(mu_);
    stores_[video_id] = std::move(store);
}

EmbeddingVector FeatureStoreProvider::visual_feature(const std::string& video_id, std::uint32_t index) {
    std::lock_guard lk(mu_);
    auto it = stores_.find(video_id);
    if (it == stores_.end()) {
        auto path = dir_ / (video_id + ".ivf");
        if (dir_.empty() || !std::filesystem::exists(path)) {
            throw LookupError("no visual features for video '" + video_id + "' segment " + std::to_string(index));
        }
        it = stores_.emplace(video_id, read_feature_store(path)).first;
    }
    const auto& store = it->second;
    if (store.dim != dim_) {
        throw LookupError("visual features for '" + video_id + "' have dim " + std::to_string(store.dim) +
                          ", expected " + std::to_string(dim_));
    }
    if (index >= store.count()) {
        throw LookupError("no visual feature for video '" + video_id + "' segment " + std::to_string(index) +
                          " (store holds " + std::to_string(store.count()) + ")");
    }
    EmbeddingVector v;
    v.values.assign(store.values.begin() + std::size_t(index) * dim_,
                    store.values.begin() + std::size_t(index + 1) * dim_);
    return v;
}

EmbeddingVector MockVisual::visual_feature(const std::string& video_id, std::uint32_t index) {
    std::uint64_t state = fnv1a64(video_id, fnv1a64(std::to_string(index))) ^ seed_;
    EmbeddingVector v;
    v.values.resize(dim_);
    for (auto& x : v.values) x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    normalize(v);
    return v;
}

}  // namespace inval
