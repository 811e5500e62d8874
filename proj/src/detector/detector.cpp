#include "inval/detector.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "inval/adam.hpp"
#include "inval/binary_io.hpp"
#include "inval/errors.hpp"
#include "inval/parallel.hpp"
#include "inval/util.hpp"

namespace inval {

DetectorParams DetectorParams::zeros(std::size_t dim, std::size_t visual_dim) {
    DetectorParams p;
    p.dim = dim;
    p.visual_dim = visual_dim;
    p.w_v.assign(visual_dim * dim, 0.0);
    p.b_v.assign(dim, 0.0);
    p.w_f.assign(2 * dim * dim, 0.0);
    p.b_f.assign(dim, 0.0);
    p.w_c.assign(2 * dim, 0.0);
    return p;
}

DetectorParams DetectorParams::random(std::size_t dim, std::size_t visual_dim, std::uint64_t seed) {
    auto p = zeros(dim, visual_dim);
    std::mt19937_64 rng(seed);
    auto fill = [&](std::vector<double>& block, std::size_t fan_in) {
        std::uniform_real_distribution<double> u(-1.0 / std::sqrt(double(fan_in)), 1.0 / std::sqrt(double(fan_in)));
        for (auto& x : block) x = u(rng);
    };
    fill(p.w_v, visual_dim);
    fill(p.b_v, visual_dim);
    fill(p.w_f, 2 * dim);
    fill(p.b_f, 2 * dim);
    fill(p.w_c, 2 * dim);
    std::vector<double> bc(1);
    fill(bc, 2 * dim);
    p.b_c = bc[0];
    return p;
}

std::size_t DetectorParams::parameter_count() const {
    return w_v.size() + b_v.size() + w_f.size() + b_f.size() + w_c.size() + 1;
}

std::vector<double> DetectorParams::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto* block : {&w_v, &b_v, &w_f, &b_f, &w_c}) out.insert(out.end(), block->begin(), block->end());
    out.push_back(b_c);
    return out;
}

void DetectorParams::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw PreconditionError("detector parameter count mismatch");
    std::size_t pos = 0;
    for (auto* block : {&w_v, &b_v, &w_f, &b_f, &w_c}) {
        std::copy_n(flat.begin() + pos, block->size(), block->begin());
        pos += block->size();
    }
    b_c = flat[pos];
}

std::string segment_text(const InValSample& sample, const VideoSegment& seg) {
    std::map<int, const VideoSegment*> by_id;
    for (const auto& s : sample.segments) by_id[s.seg_id] = &s;
    std::string text = seg.text();
    for (int c : seg.context_ids) {
        auto it = by_id.find(c);
        if (it == by_id.end()) {
            throw LookupError("segment " + std::to_string(seg.seg_id) + " references unknown context " +
                              std::to_string(c));
        }
        text += " || " + it->second->text();
    }
    return text;
}

SegmentFeatures encode_segment(const InValSample& sample, const VideoSegment& seg, Embedder& embedder,
                               VisualProvider* visual, const EncodeOptions& opts) {
    SegmentFeatures f;
    try {
        f.text = embedder.embed_text(segment_text(sample, seg)).values;
        f.query = embedder.embed_text(sample.query()).values;
        if (opts.use_visual && visual && seg.visual_feature_ref) {
            f.visual = visual->visual_feature(sample.video_id, *seg.visual_feature_ref).values;
            if (f.visual.size() != opts.visual_dim) throw LookupError("visual feature dimension mismatch");
            if (!std::all_of(f.visual.begin(), f.visual.end(), [](double x) { return std::isfinite(x); })) {
                throw LookupError("non-finite visual feature");
            }
        } else {
            f.visual.assign(opts.visual_dim, 0.0);
        }
    } catch (const std::exception& e) {
        throw StageError("encode", "segment " + std::to_string(seg.seg_id) + ": " + e.what());
    }
    return f;
}

namespace {

struct Activations {
    std::vector<double> v;    // D
    std::vector<double> fus;  // D
    double logit = 0.0;
};

void check_dims(const DetectorParams& p, const SegmentFeatures& f) {
    if (f.visual.size() != p.visual_dim || f.text.size() != p.dim || f.query.size() != p.dim) {
        throw PreconditionError("segment features do not match detector dimensions");
    }
}

Activations run(const DetectorParams& p, const SegmentFeatures& f) {
    check_dims(p, f);
    const std::size_t d = p.dim, dv = p.visual_dim;
    Activations a;
    a.v = p.b_v;
    for (std::size_t i = 0; i < dv; ++i) {
        const double x = f.visual[i];
        if (x == 0.0) continue;
        const double* row = &p.w_v[i * d];
        for (std::size_t j = 0; j < d; ++j) a.v[j] += x * row[j];
    }
    for (auto& x : a.v) x = sigmoid(x);

    a.fus = p.b_f;
    for (std::size_t i = 0; i < 2 * d; ++i) {
        const double h = i < d ? a.v[i] : f.text[i - d];
        const double* row = &p.w_f[i * d];
        for (std::size_t j = 0; j < d; ++j) a.fus[j] += h * row[j];
    }
    for (auto& x : a.fus) x = std::tanh(x);

    a.logit = p.b_c;
    for (std::size_t i = 0; i < d; ++i) a.logit += p.w_c[i] * f.query[i] + p.w_c[d + i] * a.fus[i];
    return a;
}

}  // namespace

double detector_logit(const DetectorParams& p, const SegmentFeatures& f) { return run(p, f).logit; }

double forward(const DetectorParams& p, const SegmentFeatures& f) { return sigmoid(detector_logit(p, f)); }

double detector_loss(const DetectorParams& p, std::span<const SegmentFeatures> batch, std::span<const int> labels,
                     DetectorParams* grad) {
    const std::size_t d = p.dim, dv = p.visual_dim;
    const double n = static_cast<double>(batch.size());
    double loss = 0.0;
    std::vector<double> d_fus(d), d_u(d), d_v(d), d_a(d);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        const auto& f = batch[r];
        auto a = run(p, f);
        loss += bce_with_logit(a.logit, labels[r]);
        if (!grad) continue;

        const double dz = (sigmoid(a.logit) - labels[r]) / n;
        grad->b_c += dz;
        for (std::size_t i = 0; i < d; ++i) {
            grad->w_c[i] += dz * f.query[i];
            grad->w_c[d + i] += dz * a.fus[i];
            d_fus[i] = dz * p.w_c[d + i];
            d_u[i] = d_fus[i] * (1.0 - a.fus[i] * a.fus[i]);
            grad->b_f[i] += d_u[i];
        }
        for (std::size_t i = 0; i < 2 * d; ++i) {
            const double h = i < d ? a.v[i] : f.text[i - d];
            double* grow = &grad->w_f[i * d];
            const double* prow = &p.w_f[i * d];
            double back = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                grow[j] += h * d_u[j];
                back += prow[j] * d_u[j];
            }
            if (i < d) d_v[i] = back;
        }
        for (std::size_t j = 0; j < d; ++j) {
            d_a[j] = d_v[j] * a.v[j] * (1.0 - a.v[j]);
            grad->b_v[j] += d_a[j];
        }
        for (std::size_t i = 0; i < dv; ++i) {
            const double x = f.visual[i];
            if (x == 0.0) continue;
            double* grow = &grad->w_v[i * d];
            for (std::size_t j = 0; j < d; ++j) grow[j] += x * d_a[j];
        }
    }
    return loss / n;
}

DetectorTraining train_detector(const std::vector<SegmentFeatures>& features, std::span<const int> labels,
                                std::size_t dim, std::size_t visual_dim, const TrainOptions& opts) {
    if (features.empty()) throw PreconditionError("train_detector: no labeled segments");
    if (features.size() != labels.size()) throw PreconditionError("train_detector: label count mismatch");

    DetectorTraining out;
    out.params = DetectorParams::random(dim, visual_dim, opts.seed);
    auto flat = out.params.flatten();
    Adam adam(flat.size(), {.lr = opts.lr});
    std::mt19937_64 rng(opts.seed ^ 0x5eedULL);
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<SegmentFeatures> batch;
    std::vector<int> batch_labels;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        long batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size, ++batch_index) {
            auto end = std::min(order.size(), start + opts.batch_size);
            batch.clear();
            batch_labels.clear();
            for (auto i = start; i < end; ++i) {
                batch.push_back(features[order[i]]);
                batch_labels.push_back(labels[order[i]]);
            }
            auto grad = DetectorParams::zeros(dim, visual_dim);
            double loss = detector_loss(out.params, batch, batch_labels, &grad);
            if (!std::isfinite(loss)) {
                throw TrainingError("non-finite detector loss at epoch " + std::to_string(epoch + 1) + " batch " +
                                    std::to_string(batch_index));
            }
            adam.step(flat, grad.flatten());
            out.params.assign(flat);
        }
        out.epoch_loss.push_back(detector_loss(out.params, features, labels));
    }
    return out;
}

namespace {

std::vector<SegmentFeatures> encode_all(const std::vector<std::pair<const InValSample*, const VideoSegment*>>& items,
                                        Embedder& embedder, VisualProvider* visual, const EncodeOptions& opts,
                                        int max_in_flight) {
    std::vector<SegmentFeatures> out(items.size());
    parallel_for(items.size(), max_in_flight, [&](std::size_t i) {
        out[i] = encode_segment(*items[i].first, *items[i].second, embedder, visual, opts);
    });
    return out;
}

}  // namespace

DetectorTraining train_detector(const std::vector<InValSample>& train, const PipelineConfig& cfg, Embedder& embedder,
                                VisualProvider* visual, int max_in_flight) {
    std::vector<std::pair<const InValSample*, const VideoSegment*>> items;
    std::vector<int> labels;
    for (const auto& s : train) {
        for (const auto& seg : s.segments) {
            if (!seg.label) {
                throw PreconditionError("train_detector: sample " + s.sample_id + " segment " +
                                        std::to_string(seg.seg_id) + " has no label");
            }
            items.emplace_back(&s, &seg);
            labels.push_back(*seg.label);
        }
    }
    EncodeOptions enc{cfg.use_visual, cfg.visual_dim};
    auto features = encode_all(items, embedder, visual, enc, max_in_flight);
    TrainOptions opts{cfg.detector_epochs, cfg.learning_rate, cfg.seed, 32};
    return train_detector(features, labels, cfg.embedding_dim, cfg.visual_dim, opts);
}

std::vector<SegmentPrediction> predict_batch(const DetectorParams& p, InValSample& sample, double threshold,
                                             Embedder& embedder, VisualProvider* visual, const EncodeOptions& opts,
                                             int max_in_flight) {
    std::vector<std::size_t> by_id(sample.segments.size());
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(),
              [&](auto a, auto b) { return sample.segments[a].seg_id < sample.segments[b].seg_id; });

    std::vector<std::pair<const InValSample*, const VideoSegment*>> items;
    for (auto i : by_id) items.emplace_back(&sample, &sample.segments[i]);
    auto features = encode_all(items, embedder, visual, opts, max_in_flight);

    std::vector<SegmentPrediction> out;
    for (std::size_t r = 0; r < by_id.size(); ++r) {
        auto& seg = sample.segments[by_id[r]];
        double prob = forward(p, features[r]);
        int label = prob >= threshold ? 1 : 0;
        seg.predicted_prob = prob;
        seg.label = label;
        out.push_back({seg.seg_id, prob, label});
    }
    return out;
}

namespace {
constexpr std::string_view kDetectorMagic = "IVALDT01";
}

std::string encode_detector(const DetectorParams& p) {
    std::string out(kDetectorMagic);
    binio::put_u32(out, static_cast<std::uint32_t>(p.dim));
    binio::put_u32(out, static_cast<std::uint32_t>(p.visual_dim));
    for (double x : p.flatten()) binio::put_f64(out, x);
    return out;
}

DetectorParams decode_detector(std::string_view bytes) {
    binio::Reader r(bytes);
    r.expect_magic(kDetectorMagic);
    auto d = r.u32();
    auto dv = r.u32();
    auto p = DetectorParams::zeros(d, dv);
    if (r.remaining() != p.parameter_count() * 8) throw ParseError(0, "detector payload size mismatch");
    std::vector<double> flat(p.parameter_count());
    for (auto& x : flat) x = r.f64();
    p.assign(flat);
    return p;
}

void save_detector(const std::filesystem::path& path, const DetectorParams& p) {
    write_file_atomic(path, encode_detector(p));
}

DetectorParams load_detector(const std::filesystem::path& path) { return decode_detector(read_file(path)); }

}  // namespace inval
