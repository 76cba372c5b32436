#include "tabppo/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace tabppo::metrics {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes) : n_(n_classes), counts_(n_classes * n_classes, 0) {}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < n_; ++j) s += at(truth, j);
    return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t pred) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += at(i, pred);
    return s;
}

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < n_; ++i) s += at(i, i);
    return s;
}

ConfusionMatrix confusion(std::span<const std::uint32_t> truths, std::span<const std::uint32_t> predictions,
                          std::size_t n_classes) {
    if (truths.size() != predictions.size()) {
        throw UsageError("confusion: " + std::to_string(truths.size()) + " truths vs " +
                         std::to_string(predictions.size()) + " predictions");
    }
    ConfusionMatrix cm(n_classes);
    for (std::size_t t = 0; t < truths.size(); ++t) {
        if (truths[t] >= n_classes || predictions[t] >= n_classes) {
            throw UsageError("confusion: class index out of range at position " + std::to_string(t));
        }
        ++cm.at(truths[t], predictions[t]);
    }
    return cm;
}

double f1_score(double precision, double recall) {
    const double s = precision + recall;
    return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

ClassReport report(const ConfusionMatrix& cm, std::span<const std::string> class_names) {
    const std::size_t n = cm.n_classes();
    if (n == 0) throw InputError("report: empty confusion matrix");
    ClassReport r;
    r.total = cm.total();
    r.classes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& c = r.classes[i];
        c.name = i < class_names.size() ? class_names[i] : "class_" + std::to_string(i);
        c.support = cm.row_sum(i);
        const auto tp = static_cast<double>(cm.at(i, i));
        const auto predicted = cm.col_sum(i);
        c.precision_undefined = predicted == 0;
        c.recall_undefined = c.support == 0;
        c.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
        c.recall = c.support ? tp / static_cast<double>(c.support) : 0.0;
        c.f1_undefined = c.precision + c.recall == 0.0;
        c.f1 = f1_score(c.precision, c.recall);

        r.macro_precision += c.precision;
        r.macro_recall += c.recall;
        r.macro_f1 += c.f1;
        const auto w = static_cast<double>(c.support);
        r.weighted_precision += w * c.precision;
        r.weighted_recall += w * c.recall;
        r.weighted_f1 += w * c.f1;
    }
    const auto dn = static_cast<double>(n);
    r.macro_precision /= dn;
    r.macro_recall /= dn;
    r.macro_f1 /= dn;
    if (r.total > 0) {
        const auto t = static_cast<double>(r.total);
        r.weighted_precision /= t;
        r.weighted_recall /= t;
        r.weighted_f1 /= t;
        r.accuracy = static_cast<double>(cm.trace()) / t;
    }
    return r;
}

ClassReport evaluate(std::span<const std::uint32_t> truths, std::span<const std::uint32_t> predictions,
                     std::span<const std::string> class_names) {
    return report(confusion(truths, predictions, class_names.size()), class_names);
}

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

std::string ClassReport::to_table() const {
    std::size_t width = std::string("weighted avg").size();
    for (const auto& c : classes) width = std::max(width, c.name.size());
    std::ostringstream os;
    auto line = [&](const std::string& name, const std::string& p, const std::string& rc, const std::string& f,
                    const std::string& s) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s  %9s\n", static_cast<int>(width), name.c_str(), p.c_str(),
                      rc.c_str(), f.c_str(), s.c_str());
        os << buf;
    };
    line("Class", "Precision", "Recall", "F1-score", "Support");
    for (const auto& c : classes) {
        line(c.name, fixed4(c.precision), fixed4(c.recall), fixed4(c.f1), std::to_string(c.support));
    }
    os << '\n';
    line("accuracy", "", "", fixed4(accuracy), std::to_string(total));
    line("macro avg", fixed4(macro_precision), fixed4(macro_recall), fixed4(macro_f1), std::to_string(total));
    line("weighted avg", fixed4(weighted_precision), fixed4(weighted_recall), fixed4(weighted_f1),
         std::to_string(total));
    return os.str();
}

std::string ClassReport::to_key_values() const {
    std::ostringstream os;
    os.precision(17);
    os << "accuracy=" << accuracy << '\n'
       << "macro_precision=" << macro_precision << '\n'
       << "macro_recall=" << macro_recall << '\n'
       << "macro_f1=" << macro_f1 << '\n'
       << "weighted_precision=" << weighted_precision << '\n'
       << "weighted_recall=" << weighted_recall << '\n'
       << "weighted_f1=" << weighted_f1 << '\n'
       << "total=" << total << '\n';
    for (const auto& c : classes) {
        const std::string k = "class." + c.name + ".";
        os << k << "precision=" << c.precision << '\n'
           << k << "recall=" << c.recall << '\n'
           << k << "f1=" << c.f1 << '\n'
           << k << "support=" << c.support << '\n';
        if (c.precision_undefined) os << k << "precision_undefined=1\n";
        if (c.recall_undefined) os << k << "recall_undefined=1\n";
        if (c.f1_undefined) os << k << "f1_undefined=1\n";
    }
    return os.str();
}

}  // namespace tabppo::metrics
