#include "inval/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <sstream>
#include <unordered_map>

#include "inval/errors.hpp"
#include "inval/util.hpp"

namespace inval {

double interval_iou(const Span& a, const Span& b) {
    double inter = std::max(0.0, std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s));
    double uni = (a.end_s - a.start_s) + (b.end_s - b.start_s) - inter;
    if (uni <= 0) return 0.0;
    return inter / uni;
}

EvalReport evaluate(const SpanTable& predictions, const SpanTable& truths, const std::vector<double>& mus) {
    std::unordered_map<std::string, Span> truth;
    for (const auto& [id, span] : truths) truth[id] = span;

    EvalReport r;
    r.n_samples = predictions.size();
    for (double mu : mus) r.recall_at[mu] = 0.0;
    double total = 0.0;
    for (const auto& [id, pred] : predictions) {
        auto it = truth.find(id);
        if (it == truth.end()) throw LookupError("no ground truth for sample '" + id + "'");
        double iou = interval_iou(pred, it->second);
        r.per_sample.emplace_back(id, iou);
        total += iou;
        for (auto& [mu, hits] : r.recall_at) {
            if (iou >= mu) hits += 1.0;
        }
    }
    if (r.n_samples > 0) {
        r.miou = total / static_cast<double>(r.n_samples);
        for (auto& [mu, hits] : r.recall_at) hits /= static_cast<double>(r.n_samples);
    }
    return r;
}

SpanTable random_guess(const std::vector<InValSample>& samples, std::uint64_t seed) {
    SpanTable out;
    for (const auto& s : samples) {
        if (s.segments.empty()) throw PreconditionError("random_guess: sample " + s.sample_id + " has no segments");
        std::vector<const VideoSegment*> segs;
        for (const auto& seg : s.segments) segs.push_back(&seg);
        std::sort(segs.begin(), segs.end(), [](auto* a, auto* b) { return a->start_s < b->start_s; });

        std::mt19937_64 rng(fnv1a64(s.sample_id, seed ^ 0xcbf29ce484222325ULL));
        std::uniform_int_distribution<std::size_t> pick_start(0, segs.size() - 1);
        auto first = pick_start(rng);
        std::uniform_int_distribution<std::size_t> pick_end(first, segs.size() - 1);
        auto last = pick_end(rng);
        out.emplace_back(s.sample_id, Span{segs[first]->start_s, segs[last]->end_s()});
    }
    return out;
}

std::string random_guess_label(std::uint64_t seed) {
    return "RandomGuess[uniform-block,seed=" + std::to_string(seed) + "]";
}

std::string format_report(const EvalReport& report, std::string_view method) {
    std::ostringstream os;
    char buf[64];
    os << "Method";
    for (const auto& [mu, _] : report.recall_at) {
        std::snprintf(buf, sizeof buf, " | IoU=%.1f", mu);
        os << buf;
    }
    os << " | mIoU\n" << method;
    for (const auto& [_, recall] : report.recall_at) {
        std::snprintf(buf, sizeof buf, " | %.2f", recall * 100.0);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, " | %.2f", report.miou * 100.0);
    os << buf << "\n";
    return os.str();
}

std::string format_per_sample(const EvalReport& report) {
    std::ostringstream os;
    char buf[64];
    os << "sample_id,iou\n";
    for (const auto& [id, iou] : report.per_sample) {
        std::snprintf(buf, sizeof buf, "%.6f", iou);
        os << id << ',' << buf << '\n';
    }
    return os.str();
}

std::string write_span_csv(const SpanTable& spans) {
    std::ostringstream os;
    char buf[96];
    os << "sample_id,start_s,end_s\n";
    for (const auto& [id, span] : spans) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", span.start_s, span.end_s);
        os << id << ',' << buf << '\n';
    }
    return os.str();
}

SpanTable read_span_csv(std::string_view text) {
    SpanTable out;
    std::size_t line_no = 0;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
        ++line_no;
        auto l = trim_view(line);
        if (l.empty()) continue;
        if (line_no == 1 && l.starts_with("sample_id")) continue;
        auto c2 = l.rfind(',');
        auto c1 = c2 == std::string_view::npos ? c2 : l.rfind(',', c2 - 1);
        if (c1 == std::string_view::npos || c1 == 0) throw ParseError(line_no, "expected sample_id,start_s,end_s");
        try {
            std::size_t used = 0;
            std::string a(l.substr(c1 + 1, c2 - c1 - 1)), b(l.substr(c2 + 1));
            double start = std::stod(a, &used);
            if (used != a.size()) throw std::invalid_argument(a);
            double end = std::stod(b, &used);
            if (used != b.size()) throw std::invalid_argument(b);
            if (!(start >= 0 && start < end)) throw ParseError(line_no, "span requires 0 <= start < end");
            out.emplace_back(std::string(l.substr(0, c1)), Span{start, end});
        } catch (const std::logic_error&) {
            throw ParseError(line_no, "malformed number");
        }
    }
    return out;
}

}  // namespace inval
