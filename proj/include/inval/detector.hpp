#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "inval/providers/embedding.hpp"
#include "inval/providers/visual.hpp"
#include "inval/relevance.hpp"
#include "inval/types.hpp"

namespace inval {

/// Fusion classifier parameters. Matrices are row-major with inputs along rows:
/// W_v is Dv×D, W_f is 2D×D.
struct DetectorParams {
    std::size_t dim = 0;         // D
    std::size_t visual_dim = 0;  // Dv
    std::vector<double> w_v, b_v, w_f, b_f, w_c;
    double b_c = 0.0;

    static DetectorParams zeros(std::size_t dim, std::size_t visual_dim);
    /// Every block uniform in ±1/sqrt(fan_in).
    static DetectorParams random(std::size_t dim, std::size_t visual_dim, std::uint64_t seed);

    std::size_t parameter_count() const;
    /// Blocks concatenated in declaration order (W_v, b_v, W_f, b_f, w_c, b_c).
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

struct SegmentFeatures {
    std::vector<double> visual;  // Dv
    std::vector<double> text;    // D, unit norm
    std::vector<double> query;   // D, unit norm
};

/// S'_i (or S_i) followed by the texts of its context segments in rank order, joined by " || ".
std::string segment_text(const InValSample& sample, const VideoSegment& seg);

struct EncodeOptions {
    bool use_visual = true;
    std::size_t visual_dim = 16;
};

/// Embeds segment_text and the query (Q' or Q); visual input is the stored feature, or zeros
/// when use_visual is off, no provider is given, or the segment has no feature reference.
SegmentFeatures encode_segment(const InValSample& sample, const VideoSegment& seg, Embedder& embedder,
                               VisualProvider* visual, const EncodeOptions& opts);

/// v = σ(W_v·visual + b_v); Fus = tanh(W_f·[v; text] + b_f); returns w_c·[query; Fus] + b_c.
double detector_logit(const DetectorParams& p, const SegmentFeatures& f);
/// σ(detector_logit).
double forward(const DetectorParams& p, const SegmentFeatures& f);

/// Mean BCE over `batch`; accumulates the gradient into `grad` (same shape as p) when given.
double detector_loss(const DetectorParams& p, std::span<const SegmentFeatures> batch, std::span<const int> labels,
                     DetectorParams* grad = nullptr);

struct DetectorTraining {
    DetectorParams params;
    /// Mean loss over all training segments after each epoch.
    std::vector<double> epoch_loss;
};

DetectorTraining train_detector(const std::vector<SegmentFeatures>& features, std::span<const int> labels,
                                std::size_t dim, std::size_t visual_dim, const TrainOptions& opts);

/// Encodes every labeled segment of `train` and fits the detector with cfg's epochs, rate and seed.
DetectorTraining train_detector(const std::vector<InValSample>& train, const PipelineConfig& cfg, Embedder& embedder,
                                VisualProvider* visual, int max_in_flight = 4);

struct SegmentPrediction {
    int seg_id = 0;
    double prob = 0.0;
    int label = 0;

    friend bool operator==(const SegmentPrediction&, const SegmentPrediction&) = default;
};

/// Scores all segments of one video, labels prob >= threshold as 1, and stores both on the
/// segments. Output is ordered by seg_id.
std::vector<SegmentPrediction> predict_batch(const DetectorParams& p, InValSample& sample, double threshold,
                                             Embedder& embedder, VisualProvider* visual, const EncodeOptions& opts,
                                             int max_in_flight = 4);

/// "IVALDT01", u32 D, u32 Dv, then every block as little-endian float64 in declaration order.
std::string encode_detector(const DetectorParams& p);
DetectorParams decode_detector(std::string_view bytes);
void save_detector(const std::filesystem::path& path, const DetectorParams& p);
DetectorParams load_detector(const std::filesystem::path& path);

}  // namespace inval
