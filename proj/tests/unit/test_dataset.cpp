#include <doctest.h>

#include <random>

#include <json.hpp>

#include "inval/app_config.hpp"
#include "inval/builder.hpp"
#include "inval/dataset.hpp"
#include "inval/errors.hpp"
#include "inval/synthetic.hpp"
#include "inval/util.hpp"
#include "support/support.hpp"

using namespace inval;

namespace {

SyntheticCorpus small_corpus(const std::filesystem::path& dir, int videos = 6) {
    SyntheticOptions o;
    o.videos = videos;
    o.segments = 6;
    o.seed = 5;
    return write_synthetic_corpus(dir, o);
}

}  // namespace

TEST_CASE("overlap_label examples") {
    // A 10 s segment covered for 4.8 s stays negative, 6 s turns positive.
    CHECK(overlap_label(0, 10, {5.2, 20}, 0.5) == 0);
    CHECK(overlap_label(0, 10, {4, 20}, 0.5) == 1);
    CHECK(overlap_label(0, 10, {5, 20}, 0.5) == 0);
    CHECK(overlap_label(0, 10, {20, 30}, 0.5) == 0);
    CHECK(overlap_label(2, 2, {0, 10}, 0.5) == 1);
    CHECK(overlap_label(0, 10, {4, 20}, 0.7) == 0);
}

TEST_CASE("span_descriptions lists overlapping segments only") {
    auto segs = test::make_segments({2, 2, 2, 2});
    CHECK(span_descriptions(segs, {2.5, 5.0}) == "[1] segment 1 [2] segment 2");
    CHECK(span_descriptions(segs, {2.0, 4.0}) == "[1] segment 1");
}

TEST_CASE("build_corpus on a synthetic corpus") {
    test::TempDir dir;
    auto corpus = small_corpus(dir.path());
    PipelineConfig cfg;
    auto providers = make_mock_providers(cfg, std::nullopt);
    BuildOptions opts{cfg};
    auto r = build_corpus(corpus.raws, opts, providers);

    REQUIRE(r.samples.size() == corpus.raws.size());
    CHECK(r.manifest.count(SampleStatus::built) == corpus.raws.size());
    for (std::size_t i = 1; i < r.samples.size(); ++i) CHECK(r.samples[i - 1].sample_id < r.samples[i].sample_id);
    for (const auto& s : r.samples) {
        INFO(s.sample_id);
        CHECK(validate_sample(s).empty());
        CHECK(s.dialogue.turns.size() == 3);
        CHECK(s.question_description.has_value());
        for (const auto& g : s.segments) CHECK(g.description.has_value());
    }
    // Labels agree with the planted answer segments.
    for (std::size_t i = 0; i < corpus.raws.size(); ++i) {
        const auto& s = *std::find_if(r.samples.begin(), r.samples.end(),
                                      [&](const auto& x) { return x.sample_id == corpus.raws[i].sample_id; });
        std::vector<int> positives;
        for (const auto& g : s.segments) {
            if (*g.label == 1) positives.push_back(g.seg_id);
        }
        CHECK(positives == corpus.answer_segments[i]);
    }
    CHECK(r.manifest.stage_calls.at("chat") > 0);
    CHECK(r.manifest.stage_calls.at("search") > 0);
    CHECK(r.manifest.calls_made > 0);

    auto j = r.manifest.to_json();
    CHECK(j["description_mode"] == "answer_span");
    CHECK(j["counts"]["built"] == corpus.raws.size());
    opts.description_mode = DescriptionMode::all;
    CHECK(build_corpus(corpus.raws, opts, providers).manifest.to_json()["description_mode"] == "all");
}

TEST_CASE("chatting off yields empty dialogues, rewriting off leaves descriptions unset") {
    test::TempDir dir;
    auto corpus = small_corpus(dir.path(), 2);
    PipelineConfig cfg;
    cfg.toggles.chatting = false;
    cfg.toggles.rewriting = false;
    auto providers = make_mock_providers(cfg, std::nullopt);
    auto r = build_corpus(corpus.raws, BuildOptions{cfg}, providers);
    REQUIRE(r.samples.size() == 2);
    for (const auto& s : r.samples) {
        CHECK(s.dialogue.turns.empty());
        CHECK_FALSE(s.question_description);
        for (const auto& g : s.segments) CHECK_FALSE(g.description);
    }
    CHECK(r.manifest.stage_calls.at("chat") == 0);
    CHECK(r.manifest.stage_calls.at("rewrite_subtitle") == 0);
}

TEST_CASE("one unparseable subtitle fails one sample, the rest build") {
    test::TempDir dir;
    auto corpus = small_corpus(dir.path(), 5);
    write_file_atomic(corpus.raws[2].subtitle_file, "this is not\na subtitle file\n");
    auto raws = corpus.raws;
    raws.push_back(raws[0]);  // duplicate id

    PipelineConfig cfg;
    auto providers = make_mock_providers(cfg, std::nullopt);
    auto r = build_corpus(raws, BuildOptions{cfg}, providers);
    CHECK(r.samples.size() == 4);
    CHECK(r.manifest.count(SampleStatus::failed) == 1);
    CHECK(r.manifest.count(SampleStatus::skipped) == 1);
    CHECK(r.manifest.samples[2].status == SampleStatus::failed);
    CHECK(r.manifest.samples[2].stage == "ingest");
    CHECK(r.manifest.samples[5].reason == "duplicate sample_id");

    auto late = corpus.raws[0];
    late.sample_id = "late";
    late.answer_span = {1e6, 1e6 + 1};
    try {
        build_sample(late, BuildOptions{cfg}, providers);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "ingest");
    }

    cfg.rounds = -1;
    CHECK_THROWS_AS(build_corpus(raws, BuildOptions{cfg}, providers), PreconditionError);
}

TEST_CASE("warm cache rebuild makes no provider calls and yields identical bytes") {
    test::TempDir dir;
    auto corpus = small_corpus(dir.path(), 4);
    PipelineConfig cfg;
    auto cache = dir / "cache";

    auto cold = make_mock_providers(cfg, cache);
    auto m1 = build_corpus_to_file(corpus.raws, BuildOptions{cfg}, cold, dir / "a.jsonl");
    CHECK(m1.calls_made > 0);

    auto warm = make_mock_providers(cfg, cache);
    auto m2 = build_corpus_to_file(corpus.raws, BuildOptions{cfg}, warm, dir / "b.jsonl");
    CHECK(m2.calls_made == 0);
    CHECK(m2.calls_saved == m1.calls_made + m1.calls_saved);
    CHECK(sha256_hex(read_file(dir / "a.jsonl")) == sha256_hex(read_file(dir / "b.jsonl")));
    CHECK(std::filesystem::exists(dir / "b.jsonl.manifest.json"));
    auto mj = nlohmann::json::parse(read_file(dir / "b.jsonl.manifest.json"));
    CHECK(mj["calls_made"] == 0);
}

TEST_CASE("an interrupted build resumed from the cache equals an uninterrupted one") {
    test::TempDir dir;
    auto corpus = small_corpus(dir.path(), 6);
    PipelineConfig cfg;

    auto fresh = make_mock_providers(cfg, dir / "c1");
    auto whole = build_corpus(corpus.raws, BuildOptions{cfg}, fresh);

    auto first = make_mock_providers(cfg, dir / "c2");
    std::vector<RawValSample> half(corpus.raws.begin(), corpus.raws.begin() + 3);
    build_corpus(half, BuildOptions{cfg}, first);
    auto resumed_providers = make_mock_providers(cfg, dir / "c2");
    auto resumed = build_corpus(corpus.raws, BuildOptions{cfg}, resumed_providers);

    CHECK(resumed.samples == whole.samples);
    CHECK(resumed.manifest.calls_saved > 0);
    CHECK(resumed.manifest.calls_made < whole.manifest.calls_made);
}

TEST_CASE("dataset store and load round trip") {
    std::vector<InValSample> samples;
    for (int i = 0; i < 10; ++i) {
        auto s = test::valid_sample("s" + std::to_string(i));
        if (i % 3 == 0) s.question_description.reset();
        if (i % 4 == 0) s.segments[1].description.reset();
        if (i == 5) s.lang = Language::zh;
        if (i == 7) s.split = Split::test;
        samples.push_back(s);
    }
    test::TempDir dir;
    store_dataset(samples, dir / "d.jsonl");
    CHECK(load_dataset(dir / "d.jsonl") == samples);
    CHECK(decode_dataset(encode_dataset(samples)) == samples);

    auto text = encode_dataset(samples);
    CHECK(text.ends_with("\n"));
    CHECK(std::count(text.begin(), text.end(), '\n') == 10);
}

TEST_CASE("decode_dataset rejects a bad label and names the line") {
    std::vector<InValSample> samples = {test::valid_sample("a"), test::valid_sample("b")};
    auto text0 = encode_dataset(samples);
    auto nl = text0.find('\n');
    std::vector<std::string> lines = {text0.substr(0, nl), text0.substr(nl + 1, text0.size() - nl - 2)};
    auto j = nlohmann::json::parse(lines[1]);
    j["segments"][0]["label"] = 2;
    std::string text = lines[0] + "\n" + j.dump() + "\n";
    try {
        decode_dataset(text);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).starts_with("line 2: "));
    }
    CHECK_THROWS_AS(decode_dataset("{not json\n"), ParseError);
}

TEST_CASE("a missing description loads as unset") {
    auto s = test::valid_sample();
    auto j = sample_to_json(s);
    j["segments"][2].erase("description");
    j.erase("question_description");
    auto back = sample_from_json(nlohmann::json::parse(j.dump()));
    CHECK_FALSE(back.segments[2].description);
    CHECK_FALSE(back.question_description);
    CHECK(back.segments[1].description == s.segments[1].description);
}

TEST_CASE("corpus statistics") {
    CorpusStats table{846, 2800, 381.5, 752.9, 61.5, 2660, 140};
    CHECK(format_corpus_stats(table) ==
          "#V | #Q | VL | SW | AL | Train | Test\n846 | 2800 | 381.5 | 752.9 | 61.5 | 2660 | 140\n");

    // Two questions over one video, one over another.
    auto a = test::valid_sample("a");  // 11 s, 8 words, 7 s answer
    auto b = test::valid_sample("b");
    b.video_id = a.video_id;
    b.split = Split::test;
    b.answer_span = Span{0, 3};
    auto c = test::valid_sample("c");
    c.segments.resize(2);  // 5.5 s, 4 words
    c.segments[0].subtitle = "one two three";
    c.answer_span = Span{0, 2};
    auto st = corpus_stats({a, b, c});
    CHECK(st.videos == 2);
    CHECK(st.questions == 3);
    CHECK(st.avg_video_length_s == doctest::Approx((11.0 + 5.5) / 2));
    CHECK(st.avg_subtitle_words == doctest::Approx((8.0 + 5.0) / 2));
    CHECK(st.avg_answer_length_s == doctest::Approx((7.0 + 3.0 + 2.0) / 3));
    CHECK(st.train == 2);
    CHECK(st.test == 1);
    CHECK(format_corpus_stats(corpus_stats({})) == "#V | #Q | VL | SW | AL | Train | Test\n0 | 0 | 0.0 | 0.0 | 0.0 | 0 | 0\n");
}

TEST_CASE("raw samples round trip with relative subtitle paths") {
    test::TempDir dir;
    auto corpus = small_corpus(dir.path(), 3);
    auto loaded = load_raw_samples(dir / "raw.jsonl");
    REQUIRE(loaded.size() == 3);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(std::filesystem::equivalent(loaded[i].subtitle_file, corpus.raws[i].subtitle_file));
        CHECK(loaded[i].answer_span == corpus.raws[i].answer_span);
    }
    store_raw_samples(loaded, dir / "copy.jsonl");
    auto text = read_file(dir / "copy.jsonl");
    CHECK(text.find("\"subtitle_file\":\"subtitles/") != std::string::npos);

    write_file_atomic(dir / "bad.jsonl", text + "{\"sample_id\":\"x\"}\n");
    try {
        load_raw_samples(dir / "bad.jsonl");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
}

TEST_CASE("property: decode(encode(x)) == x for random samples") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dur(0.25, 9.0);
    for (int trial = 0; trial < 200; ++trial) {
        InValSample s;
        s.sample_id = "r" + std::to_string(trial);
        s.video_id = "v" + std::to_string(trial % 7);
        s.question = trial % 2 ? "如何包扎?" : "how \"quoted\" \\ text\n";
        s.dialogue.initial_question = s.question;
        const int n = 1 + static_cast<int>(rng() % 9);
        std::vector<double> durations;
        for (int i = 0; i < n; ++i) durations.push_back(dur(rng));
        s.segments = test::make_segments(durations, s.video_id);
        for (auto& g : s.segments) {
            g.label = static_cast<int>(rng() % 2);
            if (rng() % 2) g.description = "d" + std::to_string(rng() % 1000);
            if (rng() % 3) g.predicted_prob = std::uniform_real_distribution<double>()(rng);
        }
        if (rng() % 2) s.answer_span = Span{0.0, s.segments.back().end_s()};
        auto back = decode_dataset(encode_dataset({s}));
        REQUIRE(back.size() == 1);
        CHECK(back[0].sample_id == s.sample_id);
        CHECK(back[0].segments.size() == s.segments.size());
        CHECK(encode_dataset(back) == encode_dataset({s}));
    }
}
