#pragma once

#include <string>
#include <vector>

#include "inval/detector.hpp"
#include "inval/types.hpp"

namespace inval {

struct LocalizationResult {
    std::string video_id;
    Span span;
    std::vector<SegmentPrediction> per_segment;
    bool fallback_used = false;

    friend bool operator==(const LocalizationResult&, const LocalizationResult&) = default;
};

/// Start is the earliest start among label-1 segments; end is the latest-starting label-1
/// segment's start plus its duration. With no label-1 segment, the highest-probability
/// segment (smallest seg_id on ties) alone forms the span and fallback_used is set.
/// Every segment must carry label and predicted_prob.
LocalizationResult lookup_span(const std::vector<VideoSegment>& segments);

/// "video_id,source_path,start_s,end_s" with seconds to three decimals, no newline.
std::string emit_cut_spec(const LocalizationResult& result, const std::string& source_path);

}  // namespace inval
