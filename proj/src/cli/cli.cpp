#include "inval/cli.hpp"

#include <CLI11.hpp>

#include "inval/app_config.hpp"
#include "inval/builder.hpp"
#include "inval/dataset.hpp"
#include "inval/pipeline.hpp"
#include "inval/service.hpp"
#include "inval/subtitles.hpp"
#include "inval/synthetic.hpp"
#include "inval/util.hpp"

namespace inval {

namespace {

struct GlobalFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    bool mock = false;
    std::optional<int> rounds, top_k, epochs;
    std::optional<double> lr, threshold;
    std::string cache_dir;
};

enum class Stage { relevance, detector, other };

AppConfig resolve(const GlobalFlags& g, Stage stage) {
    AppConfig cfg = g.config.empty() ? AppConfig{} : load_app_config(g.config);
    auto& p = cfg.pipeline;
    if (g.seed) p.seed = *g.seed;
    if (g.mock) cfg.mock_providers = true;
    if (g.rounds) p.rounds = *g.rounds;
    if (g.top_k) p.top_k = *g.top_k;
    if (g.threshold) p.threshold = *g.threshold;
    if (stage == Stage::relevance) {
        if (g.epochs) p.relevance_epochs = *g.epochs;
        if (g.lr) p.relevance_learning_rate = *g.lr;
    } else {
        if (g.epochs) p.detector_epochs = *g.epochs;
        if (g.lr) p.learning_rate = *g.lr;
    }
    if (!g.cache_dir.empty()) cfg.cache_dir = g.cache_dir;
    if (auto v = validate_config(p); !v.empty()) throw PreconditionError(v.front());
    return cfg;
}

nlohmann::ordered_json segments_json(const std::vector<VideoSegment>& segments) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& s : segments) {
        list.push_back({{"seg_id", s.seg_id}, {"start_s", s.start_s}, {"duration_s", s.duration_s},
                        {"subtitle", s.subtitle}});
    }
    return list;
}

std::vector<InValSample> select_split(const std::vector<InValSample>& all, const std::string& split) {
    if (split == "all") return all;
    auto parts = split_samples(all);
    return split == "train" ? parts.train : parts.test;
}

}  // namespace

int cli_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Interactive visual answer localization: dataset building, training, localization and serving.",
                 "inval"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Seed for sampling, initialization and mock providers");
    app.add_flag("--mock-providers", g.mock, "Use the offline deterministic providers");
    app.add_option("--rounds", g.rounds, "Follow-up rounds R (default 3)");
    app.add_option("--top-k", g.top_k, "Context segments per segment (default 3)");
    app.add_option("--epochs", g.epochs, "Training epochs for the stage being run");
    app.add_option("--lr", g.lr, "Learning rate for the stage being run");
    app.add_option("--threshold", g.threshold, "Segment probability threshold (default 0.5)");
    app.add_option("--cache-dir", g.cache_dir, "Provider response cache directory");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse, merge and align one subtitle file; prints segments as JSON");
    std::string sub_path, sub_format, video_id;
    ingest->add_option("subtitles", sub_path, "SRT or VTT file")->required()->check(CLI::ExistingFile);
    ingest->add_option("--format", sub_format, "srt or vtt (default: detect)")->check(CLI::IsMember({"srt", "vtt"}));
    ingest->add_option("--video-id", video_id, "Video id (default: file stem)");

    // build
    auto* build = app.add_subcommand("build", "Build an interactive dataset from raw VAL samples");
    std::string raw_path, out_path, head_path, desc_mode = "answer_span";
    double label_overlap = 0.5;
    build->add_option("--raw", raw_path, "Raw samples (JSON Lines)")->required()->check(CLI::ExistingFile);
    build->add_option("--out", out_path, "Dataset output (JSON Lines)")->required();
    build->add_option("--relevance", head_path, "Relevance head used for searching (default: cosine)")
        ->check(CLI::ExistingFile);
    build->add_option("--description-mode", desc_mode, "Questioner context: answer_span or all")
        ->check(CLI::IsMember({"answer_span", "all"}));
    build->add_option("--label-overlap", label_overlap, "Segment label threshold on covered fraction")
        ->check(CLI::Range(0.0, 1.0));

    // train-relevance
    auto* train_rel = app.add_subcommand("train-relevance", "Fit the pairwise relevance head");
    std::string dataset_path, model_out;
    train_rel->add_option("--dataset", dataset_path, "Dataset (JSON Lines)")->required()->check(CLI::ExistingFile);
    train_rel->add_option("--out", model_out, "Output head file")->required();

    // train-detector
    auto* train_det = app.add_subcommand("train-detector", "Fit the segment detector on the train split");
    train_det->add_option("--dataset", dataset_path, "Dataset (JSON Lines)")->required()->check(CLI::ExistingFile);
    train_det->add_option("--out", model_out, "Output detector file")->required();

    // localize
    auto* localize = app.add_subcommand("localize", "Predict spans and print cut specs as CSV");
    std::string detector_path, pred_out, truth_out, split = "all", source_dir, source_ext = ".mp4";
    localize->add_option("--dataset", dataset_path, "Dataset (JSON Lines)")->required()->check(CLI::ExistingFile);
    localize->add_option("--detector", detector_path, "Detector file")->required()->check(CLI::ExistingFile);
    localize->add_option("--split", split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
    localize->add_option("--source-dir", source_dir, "Directory holding <video_id><ext> media files");
    localize->add_option("--source-ext", source_ext, "Media file extension");
    localize->add_option("--pred-out", pred_out, "Also write sample_id,start_s,end_s predictions");
    localize->add_option("--truth-out", truth_out, "Also write the ground-truth spans");

    // eval
    auto* eval = app.add_subcommand("eval", "Score predicted spans against ground truth");
    std::string pred_path, truth_path, per_sample_out, method = "trained", baseline_dataset;
    eval->add_option("--pred", pred_path, "Predicted spans CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--truth", truth_path, "Ground-truth spans CSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--method", method, "Row label");
    eval->add_option("--per-sample", per_sample_out, "Write sample_id,iou lines");
    eval->add_option("--random-baseline", baseline_dataset, "Dataset for an extra RandomGuess row")
        ->check(CLI::ExistingFile);

    // serve
    auto* serve = app.add_subcommand("serve", "HTTP service for live sessions");
    std::string host = "127.0.0.1";
    int port = 8080;
    int ttl_min = 30;
    std::vector<std::string> preload;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port")->check(CLI::Range(0, 65535));
    serve->add_option("--detector", detector_path, "Detector file")->check(CLI::ExistingFile);
    serve->add_option("--relevance", head_path, "Relevance head file")->check(CLI::ExistingFile);
    serve->add_option("--session-ttl", ttl_min, "Idle session lifetime in minutes")->check(CLI::PositiveNumber);
    serve->add_option("--video", preload, "Subtitle files to ingest at startup (id = file stem)")
        ->check(CLI::ExistingFile);

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic instructional corpus with planted answer spans");
    std::string synth_dir;
    int videos = 20;
    synth->add_option("--out", synth_dir, "Output directory")->required();
    synth->add_option("--videos", videos, "Number of videos")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*ingest) {
            auto format = sub_format.empty() ? std::nullopt : parse_subtitle_format(sub_format);
            auto doc = parse_subtitles(read_file(sub_path), format);
            auto id = video_id.empty() ? std::filesystem::path(sub_path).stem().string() : video_id;
            auto segments = align_segments(merge_dedupe(doc), id);
            nlohmann::ordered_json j = {{"video_id", id},
                                        {"format", to_string(doc.format)},
                                        {"raw_cues", doc.cues.size()},
                                        {"segments", segments_json(segments)}};
            out << j.dump(2) << "\n";
            return 0;
        }
        if (*build) {
            auto cfg = resolve(g, Stage::other);
            auto providers = make_providers(cfg);
            BuildOptions bo;
            bo.cfg = cfg.pipeline;
            bo.description_mode = desc_mode == "all" ? DescriptionMode::all : DescriptionMode::answer_span;
            bo.label_overlap = label_overlap;
            if (!head_path.empty()) bo.relevance_head = load_relevance_head(head_path);
            auto raws = load_raw_samples(raw_path);
            auto m = build_corpus_to_file(raws, bo, providers, out_path);
            out << "built " << m.count(SampleStatus::built) << ", skipped " << m.count(SampleStatus::skipped)
                << ", failed " << m.count(SampleStatus::failed) << "; provider calls " << m.calls_made << ", cached "
                << m.calls_saved << "\n";
            for (const auto& r : m.samples) {
                if (r.status == SampleStatus::failed) err << r.sample_id << ": " << r.reason << "\n";
            }
            return !raws.empty() && m.count(SampleStatus::built) == 0 ? 1 : 0;
        }
        if (*train_rel) {
            auto cfg = resolve(g, Stage::relevance);
            auto providers = make_providers(cfg);
            auto parts = split_samples(load_dataset(dataset_path));
            auto r = fit_relevance(parts.train, cfg.pipeline, *providers.embedder);
            save_relevance_head(model_out, r.head);
            for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
                out << "epoch " << e + 1 << " loss " << r.epoch_loss[e] << "\n";
            }
            return 0;
        }
        if (*train_det) {
            auto cfg = resolve(g, Stage::detector);
            auto providers = make_providers(cfg);
            auto parts = split_samples(load_dataset(dataset_path));
            auto r = train_detector(parts.train, cfg.pipeline, *providers.embedder, providers.visual.get());
            save_detector(model_out, r.params);
            for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
                out << "epoch " << e + 1 << " loss " << r.epoch_loss[e] << "\n";
            }
            return 0;
        }
        if (*localize) {
            auto cfg = resolve(g, Stage::other);
            auto providers = make_providers(cfg);
            auto samples = select_split(load_dataset(dataset_path), split);
            auto det = load_detector(detector_path);
            auto results = localize_samples(samples, det, cfg.pipeline, *providers.embedder, providers.visual.get());
            for (const auto& r : results) {
                auto source = std::filesystem::path(source_dir) / (r.video_id + source_ext);
                out << emit_cut_spec(r, source.string()) << "\n";
            }
            if (!pred_out.empty()) write_file_atomic(pred_out, write_span_csv(prediction_table(samples, results)));
            if (!truth_out.empty()) write_file_atomic(truth_out, write_span_csv(truth_table(samples)));
            return 0;
        }
        if (*eval) {
            auto truths = read_span_csv(read_file(truth_path));
            auto report = evaluate(read_span_csv(read_file(pred_path)), truths);
            out << format_report(report, method);
            if (!baseline_dataset.empty()) {
                auto cfg = resolve(g, Stage::other);
                auto samples = load_dataset(baseline_dataset);
                std::erase_if(samples, [&](const InValSample& s) {
                    return std::none_of(truths.begin(), truths.end(), [&](auto& t) { return t.first == s.sample_id; });
                });
                auto rg = evaluate(random_guess(samples, cfg.pipeline.seed), truths);
                auto row = format_report(rg, random_guess_label(cfg.pipeline.seed));
                out << row.substr(row.find('\n') + 1);
            }
            if (!per_sample_out.empty()) write_file_atomic(per_sample_out, format_per_sample(report));
            return 0;
        }
        if (*serve) {
            auto cfg = resolve(g, Stage::other);
            auto providers = make_providers(cfg);
            std::optional<DetectorParams> det;
            std::optional<RelevanceHead> head;
            if (!detector_path.empty()) det = load_detector(detector_path);
            if (!head_path.empty()) head = load_relevance_head(head_path);
            ServiceOptions so;
            so.cfg = cfg.pipeline;
            so.session_ttl = std::chrono::minutes(ttl_min);
            SessionManager sessions(providers, so, det, head);
            for (const auto& f : preload) {
                sessions.add_video(std::filesystem::path(f).stem().string(), read_file(f), std::nullopt);
            }
            HttpService http(sessions);
            out << "listening on " << host << ":" << port << (det ? "" : " (no detector loaded)") << std::endl;
            if (!http.listen(host, port)) {
                err << "error: cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
            return 0;
        }
        if (*synth) {
            SyntheticOptions so;
            so.videos = videos;
            if (g.seed) so.seed = *g.seed;
            auto corpus = write_synthetic_corpus(synth_dir, so);
            out << "wrote " << corpus.raws.size() << " samples to " << (std::filesystem::path(synth_dir) / "raw.jsonl").string()
                << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace inval
