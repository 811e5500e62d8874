#include "inval/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string_view>

#include "inval/subtitles.hpp"
#include "inval/util.hpp"

namespace inval {

namespace {

constexpr std::array<std::string_view, 20> kTopics = {
    "tourniquet", "bandage", "splint",  "inhaler", "sling",    "compress", "glucometer",
    "thermometer", "syringe", "crutch",  "brace",   "nebulizer", "catheter", "dressing",
    "ointment",   "cast",    "stethoscope", "pillbox", "tweezers", "eyedrops"};

constexpr std::array<std::string_view, 24> kProcedure = {
    "wrap",   "tighten", "apply",  "press",   "secure", "fold",  "insert", "rinse",
    "attach", "adjust",  "lift",   "clean",   "place",  "hold",  "pull",   "release",
    "rotate", "measure", "squeeze", "cover",  "twist",  "slide", "tuck",   "check"};

constexpr std::array<std::string_view, 24> kChatter = {
    "welcome", "channel",  "subscribe", "thanks",   "watching", "music",  "sponsor", "comment",
    "today",   "episode",  "hello",     "everyone", "bell",     "like",   "share",   "previous",
    "video",   "intro",    "outro",     "merch",    "link",     "description", "friends", "bye"};

constexpr std::array<std::string_view, 2> kMarkers = {"step", "carefully"};

constexpr std::array<std::string_view, 8> kFiller = {"so", "and", "then", "now", "the", "we", "just", "okay"};

template <class A>
std::string_view pick(const A& words, std::mt19937_64& rng) {
    return words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
}

// `n` distinct words of `pool`.
template <class A>
std::vector<std::string_view> subset(const A& pool, int n, std::mt19937_64& rng) {
    std::vector<std::string_view> words(pool.begin(), pool.end());
    std::shuffle(words.begin(), words.end(), rng);
    words.resize(std::clamp<std::size_t>(static_cast<std::size_t>(n), 1, words.size()));
    return words;
}

}  // namespace

SyntheticCorpus write_synthetic_corpus(const std::filesystem::path& dir, const SyntheticOptions& o) {
    std::mt19937_64 rng(o.seed ^ 0x5eedc0de5eedc0deULL);
    std::filesystem::create_directories(dir / "subtitles");

    std::vector<int> order(static_cast<std::size_t>(o.videos));
    for (int i = 0; i < o.videos; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    const int n_train = static_cast<int>(o.train_fraction * o.videos + 0.5);

    SyntheticCorpus corpus;
    for (int v = 0; v < o.videos; ++v) {
        char id[32];
        std::snprintf(id, sizeof id, "vid%03d", v);
        const std::string video_id = id;
        const auto topic = std::string(kTopics[static_cast<std::size_t>(v) % kTopics.size()]);

        int len = std::uniform_int_distribution<int>(o.min_answer_segments, o.max_answer_segments)(rng);
        int first = std::uniform_int_distribution<int>(0, o.segments - len)(rng);

        const auto procedure = subset(kProcedure, o.procedure_vocabulary, rng);
        const auto chatter = subset(kChatter, o.chatter_vocabulary, rng);

        std::vector<SubtitleCue> cues;
        std::vector<int> answer;
        double t = 0.0;
        for (int s = 0; s < o.segments; ++s) {
            double d = std::round(std::uniform_real_distribution<double>(o.min_duration_s, o.max_duration_s)(rng) * 1000) /
                       1000;
            const bool in_span = s >= first && s < first + len;
            std::string text;
            for (int w = 0; w < o.words_per_segment; ++w) {
                std::string_view word;
                if (w == 0) word = topic;
                else if (in_span && w <= o.marker_words) word = kMarkers[static_cast<std::size_t>(w - 1) % kMarkers.size()];
                else if (!in_span && w % 3 == 2) word = pick(kFiller, rng);
                else word = pick(in_span ? procedure : chatter, rng);
                if (!text.empty()) text += ' ';
                text += word;
            }
            cues.push_back({s + 1, t, t + d, text});
            if (in_span) answer.push_back(s);
            t = std::round((t + d) * 1000) / 1000;
        }
        write_file_atomic(dir / "subtitles" / (video_id + ".srt"), serialize_srt(cues));

        RawValSample raw;
        raw.sample_id = "s" + video_id.substr(3);
        raw.video_id = video_id;
        raw.question = "How do I use the " + topic + "?";
        raw.subtitle_file = dir / "subtitles" / (video_id + ".srt");
        raw.answer_span = {cues[static_cast<std::size_t>(first)].start_s,
                           cues[static_cast<std::size_t>(first + len - 1)].end_s};
        raw.split = std::find(order.begin(), order.begin() + n_train, v) != order.begin() + n_train ? Split::train
                                                                                                    : Split::test;
        corpus.raws.push_back(std::move(raw));
        corpus.answer_segments.push_back(std::move(answer));
    }
    store_raw_samples(corpus.raws, dir / "raw.jsonl");
    return corpus;
}

std::vector<PairExample> synthetic_pairs(const SyntheticPairOptions& o) {
    std::mt19937_64 rng(o.seed ^ 0x9a1b2c3d4e5f6071ULL);
    std::uniform_int_distribution<int> vocab(0, o.vocabulary - 1);
    auto token = [&] { return "w" + std::to_string(vocab(rng)); };
    auto join = [](const std::vector<std::string>& words) {
        std::string s;
        for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
        return s;
    };

    std::vector<PairExample> out;
    for (int i = 0; i < o.pairs; ++i) {
        std::vector<std::string> anchor, other;
        for (int k = 0; k < o.tokens_per_text; ++k) anchor.push_back(token());
        const int label = i % 2 == 0 ? 1 : 0;
        for (int k = 0; k < o.tokens_per_text; ++k) {
            if (label == 1 && k < o.shared_tokens) {
                other.push_back(anchor[static_cast<std::size_t>(k)]);
                continue;
            }
            std::string w;
            do w = token();
            while (std::find(anchor.begin(), anchor.end(), w) != anchor.end());
            other.push_back(w);
        }
        std::shuffle(other.begin(), other.end(), rng);
        std::vector<std::string> question = {token(), token(), token()};
        PairExample p;
        p.anchor_text = anchor_text(join(question), join(anchor));
        p.other_text = join(other);
        p.label = label;
        p.video_id = "pairs";
        p.anchor_seg = i;
        p.other_seg = i;
        out.push_back(std::move(p));
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

}  // namespace inval
