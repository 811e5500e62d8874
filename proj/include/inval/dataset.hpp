#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "inval/types.hpp"

namespace inval {

/// One dataset line. Keys: sample_id, video_id, lang, split, question, dialogue[{q,a}],
/// question_description, segments[{seg_id, start_s, duration_s, subtitle, description,
/// context_ids, visual_feature_ref, label}], answer_span{start_s, end_s}. Unset optionals are written as
/// null; the descriptions may also be omitted.
nlohmann::ordered_json sample_to_json(const InValSample& s);
/// Throws ParseError (line 0) on any schema or invariant violation.
InValSample sample_from_json(const nlohmann::json& j);

/// JSON Lines, one sample per line, LF-terminated.
std::string encode_dataset(const std::vector<InValSample>& samples);
/// Errors carry the 1-based line number.
std::vector<InValSample> decode_dataset(std::string_view text);

void store_dataset(const std::vector<InValSample>& samples, const std::filesystem::path& path);
std::vector<InValSample> load_dataset(const std::filesystem::path& path);

/// Per-corpus figures in the layout of the usual dataset statistics table.
struct CorpusStats {
    std::size_t videos = 0;
    std::size_t questions = 0;
    double avg_video_length_s = 0.0;
    double avg_subtitle_words = 0.0;
    double avg_answer_length_s = 0.0;
    std::size_t train = 0;
    std::size_t test = 0;
};

CorpusStats corpus_stats(const std::vector<InValSample>& samples);
std::string format_corpus_stats(const CorpusStats& s);

}  // namespace inval
