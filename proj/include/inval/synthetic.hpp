#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "inval/builder.hpp"
#include "inval/relevance.hpp"

namespace inval {

/// Instructional-video lookalike: every video has `segments` subtitle cues; a contiguous run of
/// answer segments speaks in a shared "procedure" vocabulary plus the video's topic word, while
/// the rest is channel chatter sprinkled with filler words.
struct SyntheticOptions {
    int videos = 20;
    int segments = 12;
    int min_answer_segments = 1;
    int max_answer_segments = 3;
    double min_duration_s = 4.0;
    double max_duration_s = 8.0;
    int words_per_segment = 12;
    /// Words each video draws from the shared procedure and chatter pools.
    int procedure_vocabulary = 6;
    int chatter_vocabulary = 6;
    /// Shared cue words ("step", ...) placed in every answer segment.
    int marker_words = 5;
    /// Leading fraction of videos (after shuffling) that go to the train split.
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
};

struct SyntheticCorpus {
    std::vector<RawValSample> raws;
    /// seg_ids inside the answer span, per raw sample (same order as raws).
    std::vector<std::vector<int>> answer_segments;
};

/// Writes "<dir>/subtitles/<video_id>.srt" and "<dir>/raw.jsonl".
SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticOptions& opts);

/// Balanced pairs over a pseudo-word vocabulary: positives share `shared_tokens` of their
/// `tokens_per_text` tokens with the anchor segment, negatives share none.
struct SyntheticPairOptions {
    int pairs = 2000;
    int tokens_per_text = 8;
    int shared_tokens = 6;
    int vocabulary = 500;
    std::uint64_t seed = 0;
};

std::vector<PairExample> synthetic_pairs(const SyntheticPairOptions& opts);

}  // namespace inval
