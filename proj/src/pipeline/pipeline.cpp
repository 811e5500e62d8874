#include "inval/pipeline.hpp"

#include "inval/errors.hpp"
#include "inval/parallel.hpp"

namespace inval {

SplitSamples split_samples(const std::vector<InValSample>& samples) {
    SplitSamples out;
    for (const auto& s : samples) (s.split == Split::train ? out.train : out.test).push_back(s);
    return out;
}

RelevanceTraining fit_relevance(const std::vector<InValSample>& train, const PipelineConfig& cfg, Embedder& embedder) {
    auto pairs = build_pair_dataset(train, kPairsPerVideo, cfg.seed);
    if (pairs.pairs.empty()) throw TrainingError("no relevance pairs: training samples need in-span segments");
    TrainOptions opts{cfg.relevance_epochs, cfg.relevance_learning_rate, cfg.seed, 32};
    return train_relevance_head(pairs.pairs, embedder, opts);
}

LocalizationResult localize_sample(const InValSample& sample, const DetectorParams& detector,
                                   const PipelineConfig& cfg, Embedder& embedder, VisualProvider* visual,
                                   int max_in_flight) {
    if (detector.dim != embedder.dim()) {
        throw PreconditionError("detector expects " + std::to_string(detector.dim) + "-d text, embedder gives " +
                                std::to_string(embedder.dim()));
    }
    InValSample s = sample;
    predict_batch(detector, s, cfg.threshold, embedder, visual, {cfg.use_visual, detector.visual_dim}, max_in_flight);
    return lookup_span(s.segments);
}

std::vector<LocalizationResult> localize_samples(const std::vector<InValSample>& samples,
                                                 const DetectorParams& detector, const PipelineConfig& cfg,
                                                 Embedder& embedder, VisualProvider* visual, int max_in_flight) {
    std::vector<LocalizationResult> out(samples.size());
    parallel_for(samples.size(), max_in_flight, [&](std::size_t i) {
        out[i] = localize_sample(samples[i], detector, cfg, embedder, visual, 1);
    });
    return out;
}

SpanTable prediction_table(const std::vector<InValSample>& samples, const std::vector<LocalizationResult>& results) {
    if (samples.size() != results.size()) throw PreconditionError("prediction_table: size mismatch");
    SpanTable t;
    for (std::size_t i = 0; i < samples.size(); ++i) t.emplace_back(samples[i].sample_id, results[i].span);
    return t;
}

SpanTable truth_table(const std::vector<InValSample>& samples) {
    SpanTable t;
    for (const auto& s : samples) {
        if (!s.answer_span) throw PreconditionError("sample " + s.sample_id + " has no answer_span");
        t.emplace_back(s.sample_id, *s.answer_span);
    }
    return t;
}

}  // namespace inval
