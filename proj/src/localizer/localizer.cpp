#include "inval/localizer.hpp"

#include <algorithm>
#include <cstdio>

#include "inval/errors.hpp"

namespace inval {

LocalizationResult lookup_span(const std::vector<VideoSegment>& segments) {
    if (segments.empty()) throw PreconditionError("lookup_span: no segments");

    std::vector<const VideoSegment*> ordered;
    for (const auto& s : segments) {
        if (!s.label || !s.predicted_prob) {
            throw PreconditionError("lookup_span: segment " + std::to_string(s.seg_id) + " lacks a prediction");
        }
        ordered.push_back(&s);
    }
    std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->seg_id < b->seg_id; });

    LocalizationResult r;
    r.video_id = segments.front().video_id;
    const VideoSegment* first = nullptr;
    const VideoSegment* last = nullptr;
    const VideoSegment* best = nullptr;
    for (auto* s : ordered) {
        r.per_segment.push_back({s->seg_id, *s->predicted_prob, *s->label});
        if (!best || *s->predicted_prob > *best->predicted_prob) best = s;
        if (*s->label != 1) continue;
        if (!first || s->start_s < first->start_s) first = s;
        if (!last || s->start_s > last->start_s) last = s;
    }
    if (!first) {
        r.fallback_used = true;
        first = last = best;
    }
    r.span = {first->start_s, last->start_s + last->duration_s};
    return r;
}

std::string emit_cut_spec(const LocalizationResult& result, const std::string& source_path) {
    char times[64];
    std::snprintf(times, sizeof times, "%.3f,%.3f", result.span.start_s, result.span.end_s);
    return result.video_id + "," + source_path + "," + times;
}

}  // namespace inval
