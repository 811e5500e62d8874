#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "inval/providers/embedding.hpp"
#include "inval/types.hpp"

namespace inval {

/// Question-conditioned text of a segment, "question: Q [SEP] S".
std::string anchor_text(const std::string& question, const std::string& subtitle);

struct PairExample {
    std::string anchor_text;  // question joined with S_m
    std::string other_text;   // S_n
    int label = 0;
    std::string video_id;
    int anchor_seg = 0;
    int other_seg = 0;

    friend bool operator==(const PairExample&, const PairExample&) = default;
};

struct PairDataset {
    std::vector<PairExample> pairs;
    /// Samples without any positive segment.
    int skipped_samples = 0;
};

/// Positives pair two in-span segments (ordered, m != n); negatives pair an in-span anchor with
/// an out-of-span segment. Each sample keeps equal numbers of both, each video keeps at most
/// `per_video_cap` pairs, and the result is shuffled with `seed`.
PairDataset build_pair_dataset(const std::vector<InValSample>& samples, std::size_t per_video_cap, std::uint64_t seed);

/// [a ⊙ b ; |a − b|], length 2D.
std::vector<double> pair_features(const EmbeddingVector& anchor, const EmbeddingVector& other);

struct RelevanceHead {
    std::vector<double> w;  // 2D
    double b = 0.0;

    friend bool operator==(const RelevanceHead&, const RelevanceHead&) = default;
};

double relevance_logit(const RelevanceHead& head, std::span<const double> features);
/// σ(w·φ + b).
double score_pair(const RelevanceHead& head, std::span<const double> features);

/// Mean BCE over rows of `features`; accumulates d(loss)/d(head) into `grad` when given.
double relevance_loss(const RelevanceHead& head, const std::vector<std::vector<double>>& features,
                      std::span<const int> labels, RelevanceHead* grad = nullptr);

struct TrainOptions {
    int epochs = 2;
    double lr = 3e-2;
    std::uint64_t seed = 0;
    std::size_t batch_size = 32;
};

struct RelevanceTraining {
    RelevanceHead head;
    /// Mean loss over the whole training set after each epoch.
    std::vector<double> epoch_loss;
};

/// Adam (0.9/0.999/1e-8) on mini-batches reshuffled each epoch; starts from zero weights.
RelevanceTraining train_relevance_head(const std::vector<std::vector<double>>& features, std::span<const int> labels,
                                       const TrainOptions& opts);
/// Embeds every pair with `embedder` and trains on pair_features.
RelevanceTraining train_relevance_head(const std::vector<PairExample>& pairs, Embedder& embedder,
                                       const TrainOptions& opts);

struct ContextOptions {
    int top_k = 3;
    bool searching = true;
    int max_in_flight = 4;
};

/// Fills context_ids on every segment. With searching on, Score(i,j) is the head's score (or
/// the cosine without a head) between embed(anchor_text(Q, S_i)) and embed(S_j); with searching
/// off, the k temporally nearest segments are used. Ties go to the closer segment, then the
/// smaller id. Requires at least two segments.
void top_k_context(std::vector<VideoSegment>& segments, const std::string& question, const RelevanceHead* head,
                   const ContextOptions& opts, Embedder& embedder);

/// "IVALRH01", u32 dim (=2D), then 2D+1 little-endian float64 (w then b).
std::string encode_relevance_head(const RelevanceHead& head);
RelevanceHead decode_relevance_head(std::string_view bytes);
void save_relevance_head(const std::filesystem::path& path, const RelevanceHead& head);
RelevanceHead load_relevance_head(const std::filesystem::path& path);

}  // namespace inval
