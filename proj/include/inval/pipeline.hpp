#pragma once

#include <vector>

#include "inval/detector.hpp"
#include "inval/evaluation.hpp"
#include "inval/localizer.hpp"
#include "inval/relevance.hpp"
#include "inval/types.hpp"

namespace inval {

// Stage glue shared by the CLI, the service and the acceptance run.

struct SplitSamples {
    std::vector<InValSample> train;
    std::vector<InValSample> test;
};

SplitSamples split_samples(const std::vector<InValSample>& samples);

/// Pairs at most this many examples per video for head training.
inline constexpr std::size_t kPairsPerVideo = 200;

/// Samples pairs from `train` and fits the head with cfg's relevance epochs and rate.
RelevanceTraining fit_relevance(const std::vector<InValSample>& train, const PipelineConfig& cfg, Embedder& embedder);

/// Predicts every segment of a copy of `sample` and converts the labels into a span.
LocalizationResult localize_sample(const InValSample& sample, const DetectorParams& detector,
                                   const PipelineConfig& cfg, Embedder& embedder, VisualProvider* visual,
                                   int max_in_flight = 4);

/// One result per sample, in input order.
std::vector<LocalizationResult> localize_samples(const std::vector<InValSample>& samples,
                                                 const DetectorParams& detector, const PipelineConfig& cfg,
                                                 Embedder& embedder, VisualProvider* visual, int max_in_flight = 4);

/// (sample_id, span) rows for the predictions and the ground truth of `samples`.
SpanTable prediction_table(const std::vector<InValSample>& samples, const std::vector<LocalizationResult>& results);
/// Throws PreconditionError when a sample has no answer_span.
SpanTable truth_table(const std::vector<InValSample>& samples);

}  // namespace inval
