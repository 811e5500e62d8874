#include "inval/dataset.hpp"

#include <climits>
#include <cstdio>
#include <map>
#include <sstream>

#include "inval/errors.hpp"
#include "inval/util.hpp"

namespace inval {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <class T>
ordered_json opt(const std::optional<T>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

[[noreturn]] void schema(const std::string& what) { throw ParseError(0, what); }

const json& field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) schema(std::string("missing field '") + key + "'");
    return *it;
}

std::string str(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_string()) schema(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

double num(const json& j, const char* key) {
    const auto& v = field(j, key);
    if (!v.is_number()) schema(std::string("field '") + key + "' must be a number");
    return v.get<double>();
}

// Absent and null both mean unset.
std::optional<std::string> opt_str(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    const auto& v = *it;
    if (!v.is_string()) schema(std::string("field '") + key + "' must be a string or null");
    return v.get<std::string>();
}

}  // namespace

ordered_json sample_to_json(const InValSample& s) {
    ordered_json dialogue = ordered_json::array();
    for (const auto& t : s.dialogue.turns) dialogue.push_back({{"q", t.question}, {"a", to_string(t.answer)}});

    ordered_json segments = ordered_json::array();
    for (const auto& seg : s.segments) {
        segments.push_back({
            {"seg_id", seg.seg_id},
            {"start_s", seg.start_s},
            {"duration_s", seg.duration_s},
            {"subtitle", seg.subtitle},
            {"description", opt(seg.description)},
            {"context_ids", seg.context_ids},
            {"visual_feature_ref", opt(seg.visual_feature_ref)},
            {"label", opt(seg.label)},
        });
    }
    ordered_json span = nullptr;
    if (s.answer_span) span = {{"start_s", s.answer_span->start_s}, {"end_s", s.answer_span->end_s}};

    return {
        {"sample_id", s.sample_id},
        {"video_id", s.video_id},
        {"lang", to_string(s.lang)},
        {"split", to_string(s.split)},
        {"question", s.question},
        {"dialogue", std::move(dialogue)},
        {"question_description", opt(s.question_description)},
        {"segments", std::move(segments)},
        {"answer_span", std::move(span)},
    };
}

InValSample sample_from_json(const json& j) {
    if (!j.is_object()) schema("sample must be a JSON object");
    InValSample s;
    s.sample_id = str(j, "sample_id");
    s.video_id = str(j, "video_id");
    auto lang = parse_language(str(j, "lang"));
    if (!lang) schema("field 'lang' must be en or zh");
    s.lang = *lang;
    auto split = parse_split(str(j, "split"));
    if (!split) schema("field 'split' must be train or test");
    s.split = *split;
    s.question = str(j, "question");
    s.dialogue.initial_question = s.question;

    const auto& dialogue = field(j, "dialogue");
    if (!dialogue.is_array()) schema("field 'dialogue' must be an array");
    for (const auto& t : dialogue) {
        auto a = str(t, "a");
        if (a != "yes" && a != "no") schema("dialogue answer must be yes or no");
        s.dialogue.turns.push_back({str(t, "q"), a == "yes" ? Answer::yes : Answer::no});
    }
    s.question_description = opt_str(j, "question_description");

    const auto& segments = field(j, "segments");
    if (!segments.is_array()) schema("field 'segments' must be an array");
    for (const auto& g : segments) {
        VideoSegment seg;
        seg.video_id = s.video_id;
        const auto& id = field(g, "seg_id");
        if (!id.is_number_integer()) schema("field 'seg_id' must be an integer");
        seg.seg_id = id.get<int>();
        seg.start_s = num(g, "start_s");
        seg.duration_s = num(g, "duration_s");
        seg.subtitle = str(g, "subtitle");
        seg.description = opt_str(g, "description");
        const auto& ctx = field(g, "context_ids");
        if (!ctx.is_array()) schema("field 'context_ids' must be an array");
        for (const auto& c : ctx) {
            if (!c.is_number_integer()) schema("context_ids entries must be integers");
            seg.context_ids.push_back(c.get<int>());
        }
        const auto& vref = field(g, "visual_feature_ref");
        if (!vref.is_null()) {
            if (!vref.is_number_unsigned()) schema("field 'visual_feature_ref' must be a non-negative integer");
            seg.visual_feature_ref = vref.get<std::uint32_t>();
        }
        const auto& label = field(g, "label");
        if (!label.is_null()) {
            if (!label.is_number_integer()) schema("field 'label' must be 0, 1 or null");
            auto l = label.get<long long>();
            if (l != 0 && l != 1) schema("field 'label' must be 0 or 1, got " + std::to_string(l));
            seg.label = static_cast<int>(l);
        }
        s.segments.push_back(std::move(seg));
    }

    const auto& span = field(j, "answer_span");
    if (!span.is_null()) s.answer_span = Span{num(span, "start_s"), num(span, "end_s")};

    if (auto v = validate_sample(s, INT_MAX, INT_MAX); !v.empty()) schema(v.front());
    return s;
}

std::string encode_dataset(const std::vector<InValSample>& samples) {
    std::string out;
    for (const auto& s : samples) {
        if (auto v = validate_sample(s, INT_MAX, INT_MAX); !v.empty()) {
            throw PreconditionError("sample " + s.sample_id + ": " + v.front());
        }
        out += sample_to_json(s).dump();
        out += '\n';
    }
    return out;
}

std::vector<InValSample> decode_dataset(std::string_view text) {
    std::vector<InValSample> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (trim_view(line).empty()) continue;
        try {
            out.push_back(sample_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
        } catch (const ParseError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return out;
}

void store_dataset(const std::vector<InValSample>& samples, const std::filesystem::path& path) {
    write_file_atomic(path, encode_dataset(samples));
}

std::vector<InValSample> load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

CorpusStats corpus_stats(const std::vector<InValSample>& samples) {
    CorpusStats st;
    std::map<std::string, std::pair<double, std::size_t>> videos;  // length, words
    double answer_total = 0.0;
    std::size_t answers = 0;
    for (const auto& s : samples) {
        ++st.questions;
        (s.split == Split::train ? st.train : st.test)++;
        if (s.answer_span) {
            answer_total += s.answer_span->length();
            ++answers;
        }
        if (videos.contains(s.video_id)) continue;
        double length = 0.0;
        std::size_t words = 0;
        for (const auto& seg : s.segments) {
            length = std::max(length, seg.end_s());
            std::istringstream is(seg.subtitle);
            std::string w;
            while (is >> w) ++words;
        }
        videos[s.video_id] = {length, words};
    }
    st.videos = videos.size();
    for (const auto& [_, v] : videos) {
        st.avg_video_length_s += v.first;
        st.avg_subtitle_words += static_cast<double>(v.second);
    }
    if (st.videos) {
        st.avg_video_length_s /= static_cast<double>(st.videos);
        st.avg_subtitle_words /= static_cast<double>(st.videos);
    }
    if (answers) st.avg_answer_length_s = answer_total / static_cast<double>(answers);
    return st;
}

std::string format_corpus_stats(const CorpusStats& s) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "#V | #Q | VL | SW | AL | Train | Test\n%zu | %zu | %.1f | %.1f | %.1f | %zu | %zu\n",
                  s.videos, s.questions, s.avg_video_length_s, s.avg_subtitle_words, s.avg_answer_length_s, s.train,
                  s.test);
    return buf;
}

}  // namespace inval
