#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "inval/app_config.hpp"
#include "inval/cli.hpp"
#include "inval/errors.hpp"
#include "inval/evaluation.hpp"
#include "inval/util.hpp"
#include "support/support.hpp"

using namespace inval;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "inval");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli_run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("cli: usage and help") {
    auto help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("build") != std::string::npos);
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"build", "--raw"}).code == 2);
    CHECK(run({"eval", "--pred", "/nonexistent.csv", "--truth", "/nonexistent.csv"}).code == 2);
}

TEST_CASE("cli: ingest prints aligned segments") {
    auto r = run({"ingest", test::fixture("subtitles/basic.srt").string(), "--video-id", "clip"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["video_id"] == "clip");
    CHECK(j["format"] == "srt");
    CHECK(j["segments"].size() >= 1);
    CHECK(j["segments"][0]["seg_id"] == 0);
}

TEST_CASE("cli: synth, build, train, localize, eval") {
    test::TempDir dir;
    const auto d = [&](const std::string& rel) { return (dir / rel).string(); };
    const std::vector<std::string> common = {"--mock-providers", "--cache-dir", d("cache")};
    auto with = [&](std::vector<std::string> args) {
        args.insert(args.end(), common.begin(), common.end());
        return run(args);
    };

    auto synth = run({"synth", "--out", d("corpus"), "--videos", "12"});
    REQUIRE(synth.code == 0);
    CHECK(synth.out.find("wrote 12 samples") != std::string::npos);

    auto build = with({"build", "--raw", d("corpus/raw.jsonl"), "--out", d("ds.jsonl")});
    REQUIRE(build.code == 0);
    CHECK(build.out.starts_with("built 12, skipped 0, failed 0"));
    auto manifest = nlohmann::json::parse(read_file(dir / "ds.jsonl.manifest.json"));
    CHECK(manifest["counts"]["built"] == 12);

    auto rebuild = with({"build", "--raw", d("corpus/raw.jsonl"), "--out", d("ds2.jsonl")});
    CHECK(rebuild.out.find("provider calls 0") != std::string::npos);
    CHECK(read_file(dir / "ds.jsonl") == read_file(dir / "ds2.jsonl"));

    auto rel = with({"train-relevance", "--dataset", d("ds.jsonl"), "--out", d("head.bin"), "--epochs", "2"});
    REQUIRE(rel.code == 0);
    CHECK(rel.out.find("epoch 2 loss") != std::string::npos);

    auto det = with({"train-detector", "--dataset", d("ds.jsonl"), "--out", d("det.bin"), "--lr", "0.01"});
    REQUIRE(det.code == 0);
    CHECK(det.out.find("epoch 1 loss") != std::string::npos);

    auto loc = with({"localize", "--dataset", d("ds.jsonl"), "--detector", d("det.bin"), "--split", "all",
                     "--source-dir", "media", "--source-ext", ".mp4", "--pred-out", d("pred.csv"), "--truth-out",
                     d("truth.csv")});
    REQUIRE(loc.code == 0);
    std::istringstream lines(loc.out);
    std::string line;
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(line.find(",media/") != std::string::npos);
        CHECK(line.find(".mp4,") != std::string::npos);
    }
    CHECK(rows == 12);

    auto ev = with({"eval", "--pred", d("pred.csv"), "--truth", d("truth.csv"), "--method", "trained",
                    "--random-baseline", d("ds.jsonl"), "--per-sample", d("per.csv"), "--seed", "3"});
    REQUIRE(ev.code == 0);
    CHECK(ev.out.starts_with("Method | IoU=0.3 | IoU=0.5 | IoU=0.7 | mIoU\ntrained | "));
    CHECK(ev.out.find(random_guess_label(3) + " | ") != std::string::npos);
    CHECK(read_file(dir / "per.csv").starts_with("sample_id,iou\n"));

    auto with_head = with({"build", "--raw", d("corpus/raw.jsonl"), "--out", d("ds3.jsonl"), "--relevance",
                           d("head.bin"), "--description-mode", "all"});
    CHECK(with_head.code == 0);
    CHECK(nlohmann::json::parse(read_file(dir / "ds3.jsonl.manifest.json"))["description_mode"] == "all");
}

TEST_CASE("cli: stage failures exit 1") {
    test::TempDir dir;
    write_file_atomic(dir / "bad.srt", "nothing here\n");
    write_file_atomic(dir / "raw.jsonl",
                      R"({"sample_id":"a","video_id":"a","question":"q","subtitle_file":"bad.srt","answer_span":{"start_s":0,"end_s":1}})"
                      "\n");
    auto r = run({"build", "--mock-providers", "--raw", (dir / "raw.jsonl").string(), "--out",
                  (dir / "out.jsonl").string()});
    CHECK(r.code == 1);
    CHECK(r.out.starts_with("built 0, skipped 0, failed 1"));
    CHECK(r.err.find("a: ") != std::string::npos);

    write_file_atomic(dir / "broken.jsonl", "{\"sample_id\": \n");
    auto p = run({"build", "--mock-providers", "--raw", (dir / "broken.jsonl").string(), "--out",
                  (dir / "out.jsonl").string()});
    CHECK(p.code == 1);
    CHECK(p.err.find("line 1") != std::string::npos);

    write_file_atomic(dir / "empty.bin", "");
    write_file_atomic(dir / "ds.jsonl", "");
    CHECK(run({"localize", "--mock-providers", "--dataset", (dir / "ds.jsonl").string(), "--detector",
               (dir / "empty.bin").string()})
              .code == 1);
}

TEST_CASE("app config parsing") {
    auto cfg = app_config_from_json(nlohmann::json::parse(
        R"({"pipeline": {"rounds": 2, "top_k": 4, "chatting": false}, "mock_providers": true, "cache_dir": "c"})"));
    CHECK(cfg.pipeline.rounds == 2);
    CHECK(cfg.pipeline.top_k == 4);
    CHECK_FALSE(cfg.pipeline.toggles.chatting);
    CHECK(cfg.mock_providers);
    CHECK(cfg.cache_dir == std::optional<std::filesystem::path>("c"));
    CHECK(cfg.chat.api_key_env == "ASK2LOC_CHAT_KEY");
    CHECK(cfg.embedding.api_key_env == "ASK2LOC_EMBED_KEY");

    CHECK_THROWS_AS(app_config_from_json(nlohmann::json::parse(R"({"pipline": {}})")), PreconditionError);
    CHECK_THROWS_AS(app_config_from_json(nlohmann::json::parse(R"({"pipeline": {"roundz": 1}})")), PreconditionError);
    CHECK_THROWS_AS(app_config_from_json(nlohmann::json::parse(R"({"pipeline": {"rounds": "3"}})")), PreconditionError);
    CHECK_THROWS_AS(app_config_from_json(nlohmann::json::parse(R"({"pipeline": {"top_k": 0}})")), PreconditionError);

    auto defaults = app_config_from_json(nlohmann::json::object());
    CHECK(pipeline_to_json(defaults.pipeline) == pipeline_to_json(PipelineConfig{}));
}
