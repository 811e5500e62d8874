#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inval/app_config.hpp"
#include "inval/relevance.hpp"
#include "inval/types.hpp"

namespace inval {

struct RawValSample {
    std::string sample_id;
    std::string video_id;
    std::string question;
    std::filesystem::path subtitle_file;
    Span answer_span;
    Language lang = Language::en;
    Split split = Split::train;
};

/// JSON Lines with keys sample_id, video_id, question, subtitle_file, answer_span{start_s,end_s},
/// lang, split. Relative subtitle paths resolve against the file's directory, and the writer emits them that way.
std::vector<RawValSample> load_raw_samples(const std::filesystem::path& path);
void store_raw_samples(const std::vector<RawValSample>& raws, const std::filesystem::path& path);

/// What the questioner sees in its DESCRIPTION_SPANS slot while the dataset is built.
enum class DescriptionMode {
    /// Subtitles of the segments that overlap the ground-truth span.
    answer_span,
    /// Every subtitle of the video.
    all,
};

std::string_view to_string(DescriptionMode m);

struct BuildOptions {
    PipelineConfig cfg;
    DescriptionMode description_mode = DescriptionMode::answer_span;
    /// L_i = 1 when the answer span covers more than this fraction of segment i.
    double label_overlap = 0.5;
    /// Searching scores with this head when given, with plain cosine otherwise.
    std::optional<RelevanceHead> relevance_head;
    int max_in_flight = 4;
};

/// Label for one segment: 1 iff |[start,end] ∩ span| / duration > threshold.
int overlap_label(double start_s, double duration_s, const Span& span, double threshold);

/// "[i] text" lines for the segments overlapping `span`.
std::string span_descriptions(const std::vector<VideoSegment>& segments, const Span& span);

enum class SampleStatus { built, skipped, failed };
std::string_view to_string(SampleStatus s);

struct SampleReport {
    std::string sample_id;
    SampleStatus status = SampleStatus::built;
    std::string stage;   // failing stage, empty when built
    std::string reason;

    friend bool operator==(const SampleReport&, const SampleReport&) = default;
};

/// Provider requests attributed to each stage ("chat", "rewrite_question", "rewrite_subtitle",
/// "search"), counted in front of the cache.
using StageCalls = std::map<std::string, long>;

struct BuildManifest {
    PipelineConfig cfg;
    nlohmann::ordered_json providers;
    DescriptionMode description_mode = DescriptionMode::answer_span;
    double label_overlap = 0.5;
    long calls_made = 0;   // requests that reached a provider
    long calls_saved = 0;  // requests answered by the cache
    StageCalls stage_calls;
    std::vector<SampleReport> samples;  // input order

    std::size_t count(SampleStatus s) const;
    nlohmann::ordered_json to_json() const;
};

/// Ingest, chat, rewrite, search and label one raw sample. Stage failures surface as StageError.
InValSample build_sample(const RawValSample& raw, const BuildOptions& opts, ProviderSet& providers,
                         StageCalls* calls = nullptr);

struct BuildResult {
    std::vector<InValSample> samples;  // sorted by sample_id
    BuildManifest manifest;
};

/// Builds every raw sample concurrently. Failed samples are excluded and reported.
BuildResult build_corpus(const std::vector<RawValSample>& raws, const BuildOptions& opts, ProviderSet& providers);

/// build_corpus followed by store_dataset(out) and the manifest at "<out>.manifest.json".
BuildManifest build_corpus_to_file(const std::vector<RawValSample>& raws, const BuildOptions& opts,
                                   ProviderSet& providers, const std::filesystem::path& out);

}  // namespace inval
