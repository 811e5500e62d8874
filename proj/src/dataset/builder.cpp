#include "inval/builder.hpp"

#include <algorithm>
#include <set>

#include "inval/dataset.hpp"
#include "inval/errors.hpp"
#include "inval/interact.hpp"
#include "inval/parallel.hpp"
#include "inval/providers/counting.hpp"
#include "inval/subtitles.hpp"
#include "inval/util.hpp"

namespace inval {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<RawValSample> load_raw_samples(const std::filesystem::path& path) {
    auto base = path.parent_path();
    auto text = read_file(path);
    std::vector<RawValSample> out;
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string_view line(text.data() + pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (trim_view(line).empty()) continue;
        try {
            auto j = json::parse(line);
            RawValSample r;
            r.sample_id = j.at("sample_id").get<std::string>();
            r.video_id = j.at("video_id").get<std::string>();
            r.question = j.at("question").get<std::string>();
            std::filesystem::path sub = j.at("subtitle_file").get<std::string>();
            r.subtitle_file = sub.is_absolute() ? sub : base / sub;
            r.answer_span = {j.at("answer_span").at("start_s").get<double>(),
                             j.at("answer_span").at("end_s").get<double>()};
            auto lang = parse_language(j.value("lang", "en"));
            auto split = parse_split(j.value("split", "train"));
            if (!lang || !split) throw ParseError(line_no, "lang must be en|zh and split train|test");
            r.lang = *lang;
            r.split = *split;
            if (r.sample_id.empty() || r.question.empty()) throw ParseError(line_no, "empty sample_id or question");
            if (!(r.answer_span.start_s >= 0 && r.answer_span.start_s < r.answer_span.end_s)) {
                throw ParseError(line_no, "answer_span requires 0 <= start_s < end_s");
            }
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return out;
}

void store_raw_samples(const std::vector<RawValSample>& raws, const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    const auto base = fs::absolute(path).parent_path();
    std::string out;
    for (const auto& r : raws) {
        // Relative to the file, as load_raw_samples resolves them.
        auto sub = fs::absolute(r.subtitle_file).lexically_relative(base);
        if (sub.empty()) sub = fs::absolute(r.subtitle_file);
        ordered_json j = {
            {"sample_id", r.sample_id},
            {"video_id", r.video_id},
            {"question", r.question},
            {"subtitle_file", sub.generic_string()},
            {"answer_span", {{"start_s", r.answer_span.start_s}, {"end_s", r.answer_span.end_s}}},
            {"lang", to_string(r.lang)},
            {"split", to_string(r.split)},
        };
        out += j.dump() + "\n";
    }
    write_file_atomic(path, out);
}

std::string_view to_string(DescriptionMode m) { return m == DescriptionMode::all ? "all" : "answer_span"; }

std::string_view to_string(SampleStatus s) {
    switch (s) {
        case SampleStatus::built: return "built";
        case SampleStatus::skipped: return "skipped";
        case SampleStatus::failed: return "failed";
    }
    return "failed";
}

int overlap_label(double start_s, double duration_s, const Span& span, double threshold) {
    double overlap = std::min(start_s + duration_s, span.end_s) - std::max(start_s, span.start_s);
    return overlap > threshold * duration_s ? 1 : 0;
}

std::string span_descriptions(const std::vector<VideoSegment>& segments, const Span& span) {
    std::vector<VideoSegment> inside;
    for (const auto& s : segments) {
        if (std::min(s.end_s(), span.end_s) > std::max(s.start_s, span.start_s)) inside.push_back(s);
    }
    return subtitles_blob(inside);
}

std::size_t BuildManifest::count(SampleStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [s](const auto& r) { return r.status == s; }));
}

ordered_json BuildManifest::to_json() const {
    ordered_json statuses = ordered_json::array();
    for (const auto& r : samples) {
        ordered_json e = {{"sample_id", r.sample_id}, {"status", to_string(r.status)}};
        if (!r.stage.empty()) e["stage"] = r.stage;
        if (!r.reason.empty()) e["reason"] = r.reason;
        statuses.push_back(std::move(e));
    }
    ordered_json stages = ordered_json::object();
    for (const auto& [k, v] : stage_calls) stages[k] = v;
    return {
        {"config", pipeline_to_json(cfg)},
        {"providers", providers},
        {"description_mode", to_string(description_mode)},
        {"label_overlap", label_overlap},
        {"calls_made", calls_made},
        {"calls_saved", calls_saved},
        {"stage_calls", stages},
        {"counts",
         {{"built", count(SampleStatus::built)},
          {"skipped", count(SampleStatus::skipped)},
          {"failed", count(SampleStatus::failed)}}},
        {"samples", statuses},
    };
}

namespace {

template <class Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

// Per-stage counters placed in front of the shared (cached) providers.
struct StageProviders {
    CountingChat chat, rewrite_question, rewrite_subtitle;
    CountingEmbedder search;

    explicit StageProviders(ProviderSet& p)
        : chat(*p.chat), rewrite_question(*p.chat), rewrite_subtitle(*p.chat), search(*p.embedder) {}

    void add_to(StageCalls& calls) const {
        calls["chat"] += chat.calls();
        calls["rewrite_question"] += rewrite_question.calls();
        calls["rewrite_subtitle"] += rewrite_subtitle.calls();
        calls["search"] += search.calls();
    }
};

InValSample build_with(const RawValSample& raw, const BuildOptions& opts, StageProviders& sp, int inner_in_flight) {
    const auto& cfg = opts.cfg;
    InValSample s;
    s.sample_id = raw.sample_id;
    s.video_id = raw.video_id;
    s.lang = raw.lang;
    s.split = raw.split;
    s.question = raw.question;
    s.answer_span = raw.answer_span;

    s.segments = in_stage("ingest", [&] {
        auto doc = parse_subtitles(read_file(raw.subtitle_file));
        return align_segments(merge_dedupe(doc), raw.video_id);
    });
    const double last_end = s.segments.back().end_s();
    if (raw.answer_span.end_s > last_end + 1e-9) {
        throw StageError("ingest", "answer_span ends after the last subtitle (" + std::to_string(last_end) + " s)");
    }

    InteractOptions io{cfg.rounds, cfg.toggles, raw.lang, inner_in_flight};
    {
        Interactor chat(sp.chat, io);
        std::optional<std::string> spans;
        if (opts.description_mode == DescriptionMode::answer_span) {
            spans = span_descriptions(s.segments, raw.answer_span);
        }
        s.dialogue = chat.run_chat(raw.question, s.segments, spans);
    }
    if (cfg.toggles.rewriting) {
        Interactor rw(sp.rewrite_question, io);
        s.question_description = in_stage("rewrite_question", [&] { return rw.rewrite_question(s.dialogue); });
        Interactor rs(sp.rewrite_subtitle, io);
        in_stage("rewrite_subtitle", [&] {
            rs.rewrite_subtitles(s.segments);
            return 0;
        });
    }
    if (s.segments.size() >= 2) {
        in_stage("search", [&] {
            ContextOptions co{cfg.top_k, cfg.toggles.searching, inner_in_flight};
            top_k_context(s.segments, raw.question, opts.relevance_head ? &*opts.relevance_head : nullptr, co,
                          sp.search);
            return 0;
        });
    }
    for (auto& seg : s.segments) {
        seg.visual_feature_ref = static_cast<std::uint32_t>(seg.seg_id);
        seg.label = overlap_label(seg.start_s, seg.duration_s, raw.answer_span, opts.label_overlap);
    }
    if (auto v = validate_sample(s, std::max(cfg.rounds, 0), cfg.top_k); !v.empty()) {
        throw StageError("label", v.front());
    }
    return s;
}

}  // namespace

InValSample build_sample(const RawValSample& raw, const BuildOptions& opts, ProviderSet& providers,
                         StageCalls* calls) {
    StageProviders sp(providers);
    try {
        auto s = build_with(raw, opts, sp, opts.max_in_flight);
        if (calls) sp.add_to(*calls);
        return s;
    } catch (...) {
        if (calls) sp.add_to(*calls);
        throw;
    }
}

BuildResult build_corpus(const std::vector<RawValSample>& raws, const BuildOptions& opts, ProviderSet& providers) {
    if (auto v = validate_config(opts.cfg); !v.empty()) throw PreconditionError(v.front());
    const long made_before = providers.upstream_calls();
    const long saved_before = providers.cache_hits();

    BuildResult result;
    auto& m = result.manifest;
    m.cfg = opts.cfg;
    m.providers = providers.describe();
    m.description_mode = opts.description_mode;
    m.label_overlap = opts.label_overlap;
    m.samples.resize(raws.size());

    std::set<std::string> seen;
    std::vector<bool> todo(raws.size(), false);
    for (std::size_t i = 0; i < raws.size(); ++i) {
        m.samples[i].sample_id = raws[i].sample_id;
        if (!seen.insert(raws[i].sample_id).second) {
            m.samples[i].status = SampleStatus::skipped;
            m.samples[i].reason = "duplicate sample_id";
        } else {
            todo[i] = true;
        }
    }

    StageProviders sp(providers);
    std::vector<std::optional<InValSample>> built(raws.size());
    parallel_for(raws.size(), opts.max_in_flight, [&](std::size_t i) {
        if (!todo[i]) return;
        try {
            built[i] = build_with(raws[i], opts, sp, 1);
        } catch (const StageError& e) {
            m.samples[i].status = SampleStatus::failed;
            m.samples[i].stage = e.stage();
            m.samples[i].reason = e.what();
        } catch (const std::exception& e) {
            m.samples[i].status = SampleStatus::failed;
            m.samples[i].stage = "unknown";
            m.samples[i].reason = e.what();
        }
    });
    sp.add_to(m.stage_calls);

    for (auto& b : built) {
        if (b) result.samples.push_back(std::move(*b));
    }
    std::sort(result.samples.begin(), result.samples.end(),
              [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
    m.calls_made = providers.upstream_calls() - made_before;
    m.calls_saved = providers.cache_hits() - saved_before;
    return result;
}

BuildManifest build_corpus_to_file(const std::vector<RawValSample>& raws, const BuildOptions& opts,
                                   ProviderSet& providers, const std::filesystem::path& out) {
    auto r = build_corpus(raws, opts, providers);
    store_dataset(r.samples, out);
    auto manifest_path = out;
    manifest_path += ".manifest.json";
    write_file_atomic(manifest_path, r.manifest.to_json().dump(2) + "\n");
    return r.manifest;
}

}  // namespace inval
