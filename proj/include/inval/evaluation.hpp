#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "inval/types.hpp"

namespace inval {

inline const std::vector<double> kDefaultMus = {0.3, 0.5, 0.7};

/// Temporal intersection over union; touching or disjoint spans score 0.
double interval_iou(const Span& a, const Span& b);

using SpanTable = std::vector<std::pair<std::string, Span>>;

struct EvalReport {
    std::size_t n_samples = 0;
    double miou = 0.0;
    std::map<double, double> recall_at;  // R@1 at IoU >= mu
    std::vector<std::pair<std::string, double>> per_sample;
};

/// mIoU and R@1 over predictions matched to truths by sample_id (prediction order kept).
/// Throws LookupError naming an unmatched sample_id.
EvalReport evaluate(const SpanTable& predictions, const SpanTable& truths,
                    const std::vector<double>& mus = kDefaultMus);

/// Uniform contiguous block: start segment uniform over all segments, end segment uniform
/// over those at or after it. Each sample draws from its own stream derived from
/// (seed, sample_id), so predictions do not depend on sample order.
SpanTable random_guess(const std::vector<InValSample>& samples, std::uint64_t seed);
/// Row label naming the baseline's protocol and seed, e.g. "RandomGuess[uniform-block,seed=0]".
std::string random_guess_label(std::uint64_t seed);

/// Table with columns "IoU=0.3 | IoU=0.5 | IoU=0.7 | mIoU" (percentages, two decimals).
std::string format_report(const EvalReport& report, std::string_view method);
/// "sample_id,iou" lines.
std::string format_per_sample(const EvalReport& report);

/// "sample_id,start_s,end_s" CSV (header line optional on read).
std::string write_span_csv(const SpanTable& spans);
SpanTable read_span_csv(std::string_view text);

}  // namespace inval
