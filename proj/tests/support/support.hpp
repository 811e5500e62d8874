#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "inval/types.hpp"

namespace inval::test {

inline std::filesystem::path source_dir() { return INVAL_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& rel) { return source_dir() / "tests" / "fixtures" / rel; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "inval") {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

/// Contiguous segments starting at 0 with the given durations.
inline std::vector<VideoSegment> make_segments(const std::vector<double>& durations, const std::string& video = "v") {
    std::vector<VideoSegment> out;
    double t = 0;
    for (std::size_t i = 0; i < durations.size(); ++i) {
        VideoSegment s;
        s.seg_id = static_cast<int>(i);
        s.video_id = video;
        s.start_s = t;
        s.duration_s = durations[i];
        s.subtitle = "segment " + std::to_string(i);
        out.push_back(s);
        t += durations[i];
    }
    return out;
}

/// A sample that passes validate_sample: 4 segments, labels, contexts, a 1-turn dialogue.
inline InValSample valid_sample(const std::string& id = "s1") {
    InValSample s;
    s.sample_id = id;
    s.video_id = "v" + id;
    s.question = "How do I apply the bandage?";
    s.dialogue.initial_question = s.question;
    s.dialogue.turns.push_back({"Do you mean on the wrist?", Answer::yes});
    s.question_description = "How to wrap a bandage around the wrist";
    s.segments = make_segments({2.5, 3.0, 4.0, 1.5}, s.video_id);
    for (auto& g : s.segments) {
        g.label = g.seg_id == 1 || g.seg_id == 2 ? 1 : 0;
        g.description = "described " + g.subtitle;
        g.visual_feature_ref = static_cast<std::uint32_t>(g.seg_id);
        for (int o = 0; o < 4; ++o) {
            if (o != g.seg_id && g.context_ids.size() < 3) g.context_ids.push_back(o);
        }
    }
    s.answer_span = Span{2.5, 9.5};
    return s;
}

}  // namespace inval::test
