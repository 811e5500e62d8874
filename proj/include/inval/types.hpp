#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace inval {

struct SubtitleCue {
    int index = 1;
    double start_s = 0.0;
    double end_s = 0.0;
    std::string text;

    friend bool operator==(const SubtitleCue&, const SubtitleCue&) = default;
};

struct VideoSegment {
    int seg_id = 0;
    std::string video_id;
    double start_s = 0.0;
    double duration_s = 0.0;
    std::string subtitle;
    std::optional<std::string> description;
    std::vector<int> context_ids;
    std::optional<std::uint32_t> visual_feature_ref;
    std::optional<int> label;
    std::optional<double> predicted_prob;

    double end_s() const { return start_s + duration_s; }
    /// Rewritten description when present, raw subtitle otherwise.
    const std::string& text() const { return description ? *description : subtitle; }

    friend bool operator==(const VideoSegment&, const VideoSegment&) = default;
};

enum class Answer { yes, no };

std::string_view to_string(Answer a);

struct DialogueTurn {
    std::string question;
    Answer answer = Answer::no;

    friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

struct Dialogue {
    std::string initial_question;
    std::vector<DialogueTurn> turns;

    friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct Span {
    double start_s = 0.0;
    double end_s = 0.0;

    double length() const { return end_s - start_s; }
    friend bool operator==(const Span&, const Span&) = default;
};

enum class Split { train, test };
enum class Language { en, zh };

std::string_view to_string(Split s);
std::string_view to_string(Language l);
std::optional<Split> parse_split(std::string_view s);
std::optional<Language> parse_language(std::string_view s);

struct InValSample {
    std::string sample_id;
    std::string video_id;
    Language lang = Language::en;
    std::string question;
    Dialogue dialogue;
    std::optional<std::string> question_description;
    std::vector<VideoSegment> segments;
    std::optional<Span> answer_span;
    Split split = Split::train;

    /// Rewritten question when present, initial question otherwise.
    const std::string& query() const {
        return question_description ? *question_description : question;
    }

    friend bool operator==(const InValSample&, const InValSample&) = default;
};

struct ModuleToggles {
    bool chatting = true;
    bool rewriting = true;
    bool searching = true;

    friend bool operator==(const ModuleToggles&, const ModuleToggles&) = default;
};

struct PipelineConfig {
    int rounds = 3;
    int top_k = 3;
    int relevance_epochs = 2;
    int detector_epochs = 8;
    double learning_rate = 5e-5;
    /// Step size for the pairwise relevance head; the detector uses `learning_rate`.
    double relevance_learning_rate = 3e-2;
    double threshold = 0.5;
    std::uint64_t seed = 0;
    ModuleToggles toggles;
    /// false reproduces the text-only detector (visual input zeroed).
    bool use_visual = true;
    std::size_t embedding_dim = 64;
    std::size_t visual_dim = 16;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Empty when the config is usable, otherwise one message per broken field.
std::vector<std::string> validate_config(const PipelineConfig& cfg);

/// Every invariant violation found in `sample`, each naming the field and the rule.
/// `round_cap` bounds the dialogue length and `top_k` the context list length.
std::vector<std::string> validate_sample(const InValSample& sample, int round_cap = 3, int top_k = 3);

}  // namespace inval
