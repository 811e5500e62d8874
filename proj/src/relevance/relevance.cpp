#include "inval/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include "inval/adam.hpp"
#include "inval/binary_io.hpp"
#include "inval/errors.hpp"
#include "inval/parallel.hpp"
#include "inval/util.hpp"

namespace inval {

std::string anchor_text(const std::string& question, const std::string& subtitle) {
    return "question: " + question + " [SEP] " + subtitle;
}

PairDataset build_pair_dataset(const std::vector<InValSample>& samples, std::size_t per_video_cap, std::uint64_t seed) {
    PairDataset out;
    std::mt19937_64 rng(seed);
    std::map<std::string, std::size_t> used;

    for (const auto& s : samples) {
        std::vector<const VideoSegment*> in, outside;
        for (const auto& seg : s.segments) {
            if (!seg.label) continue;
            (*seg.label == 1 ? in : outside).push_back(&seg);
        }
        if (in.empty()) {
            ++out.skipped_samples;
            continue;
        }
        auto make = [&](const VideoSegment& m, const VideoSegment& n, int label) {
            return PairExample{anchor_text(s.question, m.subtitle), n.subtitle, label, s.video_id, m.seg_id, n.seg_id};
        };
        std::vector<PairExample> pos, neg;
        for (auto* m : in) {
            for (auto* n : in) {
                if (m != n) pos.push_back(make(*m, *n, 1));
            }
            for (auto* n : outside) neg.push_back(make(*m, *n, 0));
        }
        std::shuffle(pos.begin(), pos.end(), rng);
        std::shuffle(neg.begin(), neg.end(), rng);

        auto& taken = used[s.video_id];
        std::size_t room = per_video_cap > taken ? (per_video_cap - taken) / 2 : 0;
        std::size_t n = std::min({pos.size(), neg.size(), room});
        for (std::size_t i = 0; i < n; ++i) {
            out.pairs.push_back(std::move(pos[i]));
            out.pairs.push_back(std::move(neg[i]));
        }
        taken += 2 * n;
    }
    std::shuffle(out.pairs.begin(), out.pairs.end(), rng);
    return out;
}

std::vector<double> pair_features(const EmbeddingVector& anchor, const EmbeddingVector& other) {
    if (anchor.dim() != other.dim()) {
        throw PreconditionError("pair_features: dimension mismatch " + std::to_string(anchor.dim()) + " vs " +
                                std::to_string(other.dim()));
    }
    const std::size_t d = anchor.dim();
    std::vector<double> phi(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
        phi[i] = anchor.values[i] * other.values[i];
        phi[d + i] = std::abs(anchor.values[i] - other.values[i]);
    }
    return phi;
}

double relevance_logit(const RelevanceHead& head, std::span<const double> features) {
    if (features.size() != head.w.size()) throw PreconditionError("relevance head dimension mismatch");
    return dot(head.w, features) + head.b;
}

double score_pair(const RelevanceHead& head, std::span<const double> features) {
    return sigmoid(relevance_logit(head, features));
}

double relevance_loss(const RelevanceHead& head, const std::vector<std::vector<double>>& features,
                      std::span<const int> labels, RelevanceHead* grad) {
    const double n = static_cast<double>(features.size());
    double loss = 0.0;
    for (std::size_t r = 0; r < features.size(); ++r) {
        double z = relevance_logit(head, features[r]);
        loss += bce_with_logit(z, labels[r]);
        if (grad) {
            double dz = (sigmoid(z) - labels[r]) / n;
            for (std::size_t i = 0; i < head.w.size(); ++i) grad->w[i] += dz * features[r][i];
            grad->b += dz;
        }
    }
    return loss / n;
}

RelevanceTraining train_relevance_head(const std::vector<std::vector<double>>& features, std::span<const int> labels,
                                       const TrainOptions& opts) {
    if (features.empty()) throw PreconditionError("train_relevance_head: no pairs");
    if (features.size() != labels.size()) throw PreconditionError("train_relevance_head: label count mismatch");
    const std::size_t dim = features.front().size();

    RelevanceTraining out;
    out.head.w.assign(dim, 0.0);
    std::vector<double> params(dim + 1, 0.0);
    Adam adam(params.size(), {.lr = opts.lr});
    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<std::vector<double>> batch_x;
    std::vector<int> batch_y;
    long batch_index = 0;
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size, ++batch_index) {
            auto end = std::min(order.size(), start + opts.batch_size);
            batch_x.clear();
            batch_y.clear();
            for (auto i = start; i < end; ++i) {
                batch_x.push_back(features[order[i]]);
                batch_y.push_back(labels[order[i]]);
            }
            RelevanceHead grad{std::vector<double>(dim, 0.0), 0.0};
            double loss = relevance_loss(out.head, batch_x, batch_y, &grad);
            if (!std::isfinite(loss)) {
                throw TrainingError("non-finite relevance loss at batch " + std::to_string(batch_index));
            }
            std::vector<double> g(grad.w);
            g.push_back(grad.b);
            adam.step(params, g);
            std::copy(params.begin(), params.begin() + dim, out.head.w.begin());
            out.head.b = params[dim];
        }
        out.epoch_loss.push_back(relevance_loss(out.head, features, labels));
    }
    return out;
}

RelevanceTraining train_relevance_head(const std::vector<PairExample>& pairs, Embedder& embedder,
                                       const TrainOptions& opts) {
    if (pairs.empty()) throw PreconditionError("train_relevance_head: no pairs");
    std::unordered_map<std::string, EmbeddingVector> cache;
    auto embed = [&](const std::string& t) -> const EmbeddingVector& {
        auto it = cache.find(t);
        if (it == cache.end()) it = cache.emplace(t, embedder.embed_text(t)).first;
        return it->second;
    };
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    features.reserve(pairs.size());
    for (const auto& p : pairs) {
        features.push_back(pair_features(embed(p.anchor_text), embed(p.other_text)));
        labels.push_back(p.label);
    }
    return train_relevance_head(features, labels, opts);
}

void top_k_context(std::vector<VideoSegment>& segments, const std::string& question, const RelevanceHead* head,
                   const ContextOptions& opts, Embedder& embedder) {
    if (opts.top_k < 1) throw PreconditionError("top_k_context requires k >= 1");
    if (segments.size() < 2) throw PreconditionError("top_k_context requires at least two segments");

    // Work in seg_id order so results do not depend on input order.
    std::vector<std::size_t> by_id(segments.size());
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(), [&](auto a, auto b) { return segments[a].seg_id < segments[b].seg_id; });
    const std::size_t n = segments.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(opts.top_k), n - 1);

    std::vector<std::vector<double>> score(n, std::vector<double>(n, 0.0));
    if (opts.searching) {
        std::vector<EmbeddingVector> anchors(n), others(n);
        parallel_for(2 * n, opts.max_in_flight, [&](std::size_t t) {
            const auto& seg = segments[by_id[t % n]];
            if (t < n) anchors[t] = embedder.embed_text(anchor_text(question, seg.subtitle));
            else others[t - n] = embedder.embed_text(seg.subtitle);
        });
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                score[i][j] = head ? score_pair(*head, pair_features(anchors[i], others[j]))
                                   : cosine(anchors[i].values, others[j].values);
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const int id_i = segments[by_id[i]].seg_id;
        std::vector<std::size_t> cand;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) cand.push_back(j);
        }
        auto gap = [&](std::size_t j) { return std::abs(segments[by_id[j]].seg_id - id_i); };
        std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
            if (opts.searching && score[i][a] != score[i][b]) return score[i][a] > score[i][b];
            if (gap(a) != gap(b)) return gap(a) < gap(b);
            return segments[by_id[a]].seg_id < segments[by_id[b]].seg_id;
        });
        auto& ctx = segments[by_id[i]].context_ids;
        ctx.clear();
        for (std::size_t r = 0; r < k; ++r) ctx.push_back(segments[by_id[cand[r]]].seg_id);
    }
}

namespace {
constexpr std::string_view kHeadMagic = "IVALRH01";
}

std::string encode_relevance_head(const RelevanceHead& head) {
    std::string out(kHeadMagic);
    binio::put_u32(out, static_cast<std::uint32_t>(head.w.size()));
    for (double w : head.w) binio::put_f64(out, w);
    binio::put_f64(out, head.b);
    return out;
}

RelevanceHead decode_relevance_head(std::string_view bytes) {
    binio::Reader r(bytes);
    r.expect_magic(kHeadMagic);
    RelevanceHead head;
    head.w.resize(r.u32());
    if (r.remaining() != (head.w.size() + 1) * 8) throw ParseError(0, "relevance head payload size mismatch");
    for (auto& w : head.w) w = r.f64();
    head.b = r.f64();
    return head;
}

void save_relevance_head(const std::filesystem::path& path, const RelevanceHead& head) {
    write_file_atomic(path, encode_relevance_head(head));
}

RelevanceHead load_relevance_head(const std::filesystem::path& path) {
    return decode_relevance_head(read_file(path));
}

}  // namespace inval
