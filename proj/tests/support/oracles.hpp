#pragma once

// Reference implementations written independently of the library code they check.

#include <cstdint>
#include <vector>

#include "inval/detector.hpp"
#include "inval/relevance.hpp"
#include "inval/types.hpp"

namespace inval::oracle {

/// IoU by sweeping the elementary intervals between the four sorted endpoints.
double sweep_iou(const Span& a, const Span& b);

struct LookupCase {
    std::vector<double> starts, durations, probs;
    std::vector<int> labels;
};

struct LookupAnswer {
    Span span;
    bool fallback = false;
};

/// Min start and max end over labeled segments; all-zero labels pick the first highest prob.
LookupAnswer brute_lookup(const LookupCase& c);

struct GradCheck {
    double max_rel_error = 0.0;
    std::size_t components = 0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|), with components where both sides are
/// below `floor` compared in absolute terms instead.
double relative_error(double analytic, double numeric, double floor = 1e-8);

/// Central differences of relevance_loss over every weight and the bias.
GradCheck check_relevance_gradient(RelevanceHead head, const std::vector<std::vector<double>>& features,
                                   const std::vector<int>& labels, double step);

/// Central differences of detector_loss over every parameter block.
GradCheck check_detector_gradient(const DetectorParams& params, const std::vector<SegmentFeatures>& batch,
                                  const std::vector<int>& labels, double step);

/// σ(w_c·[q; tanh(W_f·[σ(W_v·x + b_v); t] + b_f)] + b_c) written out loop by loop.
double straight_line_forward(const DetectorParams& p, const SegmentFeatures& f);

}  // namespace inval::oracle
