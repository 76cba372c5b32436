#pragma once

#include <cstdint>
#include <vector>

namespace tabppo::testing {

/// Per-class rates computed by scanning the label pairs directly.
struct NaiveReport {
    std::vector<double> precision, recall, f1;
    std::vector<std::uint64_t> support;
    double accuracy = 0.0, macro_f1 = 0.0, weighted_f1 = 0.0;
};

inline NaiveReport naive_report(const std::vector<std::uint32_t>& truth, const std::vector<std::uint32_t>& pred,
                                std::size_t k) {
    NaiveReport r;
    std::uint64_t hits = 0;
    for (std::size_t t = 0; t < truth.size(); ++t) hits += truth[t] == pred[t];
    r.accuracy = truth.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
    for (std::uint32_t c = 0; c < k; ++c) {
        std::uint64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t t = 0; t < truth.size(); ++t) {
            if (pred[t] == c && truth[t] == c) ++tp;
            if (pred[t] == c && truth[t] != c) ++fp;
            if (pred[t] != c && truth[t] == c) ++fn;
        }
        const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double rc = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        r.precision.push_back(p);
        r.recall.push_back(rc);
        r.f1.push_back(p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0);
        r.support.push_back(tp + fn);
    }
    for (std::size_t c = 0; c < k; ++c) {
        r.macro_f1 += r.f1[c];
        r.weighted_f1 += static_cast<double>(r.support[c]) * r.f1[c];
    }
    r.macro_f1 /= static_cast<double>(k);
    if (!truth.empty()) r.weighted_f1 /= static_cast<double>(truth.size());
    return r;
}

}  // namespace tabppo::testing
