#include "inval/types.hpp"

#include <cmath>
#include <set>

namespace inval {

std::string_view to_string(Answer a) { return a == Answer::yes ? "yes" : "no"; }
std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }
std::string_view to_string(Language l) { return l == Language::en ? "en" : "zh"; }

std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    return std::nullopt;
}

std::optional<Language> parse_language(std::string_view s) {
    if (s == "en") return Language::en;
    if (s == "zh") return Language::zh;
    return std::nullopt;
}

std::vector<std::string> validate_config(const PipelineConfig& cfg) {
    std::vector<std::string> out;
    if (cfg.rounds < 1) out.push_back("rounds: must be positive");
    if (cfg.top_k < 1) out.push_back("top_k: must be positive");
    if (cfg.relevance_epochs < 1) out.push_back("relevance_epochs: must be positive");
    if (cfg.detector_epochs < 1) out.push_back("detector_epochs: must be positive");
    if (!(cfg.learning_rate > 0)) out.push_back("learning_rate: must be positive");
    if (!(cfg.relevance_learning_rate > 0)) out.push_back("relevance_learning_rate: must be positive");
    if (!(cfg.threshold > 0 && cfg.threshold < 1)) out.push_back("threshold: must lie in (0,1)");
    if (cfg.embedding_dim < 1) out.push_back("embedding_dim: must be positive");
    if (cfg.visual_dim < 1) out.push_back("visual_dim: must be positive");
    return out;
}

std::vector<std::string> validate_sample(const InValSample& sample, int round_cap, int top_k) {
    std::vector<std::string> out;
    auto seg_tag = [](const VideoSegment& s) { return "segments[" + std::to_string(s.seg_id) + "]"; };

    if (static_cast<int>(sample.dialogue.turns.size()) > round_cap) {
        out.push_back("dialogue.turns: " + std::to_string(sample.dialogue.turns.size()) +
                      " turns exceed round cap " + std::to_string(round_cap));
    }

    std::set<int> ids;
    for (std::size_t i = 0; i < sample.segments.size(); ++i) {
        const auto& s = sample.segments[i];
        if (!ids.insert(s.seg_id).second) out.push_back(seg_tag(s) + ".seg_id: duplicate id");
        if (!std::isfinite(s.start_s) || s.start_s < 0) {
            out.push_back(seg_tag(s) + ".start_s: must be finite and non-negative");
        }
        if (!(s.duration_s > 0) || !std::isfinite(s.duration_s)) {
            out.push_back(seg_tag(s) + ".duration_s: must be positive");
        }
        if (s.video_id != sample.video_id) out.push_back(seg_tag(s) + ".video_id: differs from sample video_id");
        if (static_cast<int>(s.context_ids.size()) > top_k) {
            out.push_back(seg_tag(s) + ".context_ids: more than top_k=" + std::to_string(top_k) + " entries");
        }
        for (int c : s.context_ids) {
            if (c == s.seg_id) {
                out.push_back(seg_tag(s) + ".context_ids: contains own seg_id");
                break;
            }
        }
        if (s.label && *s.label != 0 && *s.label != 1) out.push_back(seg_tag(s) + ".label: must be 0 or 1");
        if (s.predicted_prob && !(*s.predicted_prob >= 0 && *s.predicted_prob <= 1)) {
            out.push_back(seg_tag(s) + ".predicted_prob: must lie in [0,1]");
        }
        if (i > 0 && s.start_s < sample.segments[i - 1].start_s) {
            out.push_back(seg_tag(s) + ".start_s: segments not sorted by start time");
        }
    }

    if (sample.answer_span) {
        const auto& span = *sample.answer_span;
        if (!(span.start_s >= 0 && span.start_s < span.end_s)) {
            out.push_back("answer_span: requires 0 <= start_s < end_s");
        } else {
            bool overlaps = false;
            for (const auto& s : sample.segments) {
                if (s.start_s < span.end_s && span.start_s < s.end_s()) {
                    overlaps = true;
                    break;
                }
            }
            if (!overlaps) out.push_back("answer_span: overlaps no segment");
        }
    }
    return out;
}

}  // namespace inval
