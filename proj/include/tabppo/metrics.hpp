#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabppo::metrics {

/// Input vectors of different lengths or out-of-range class indices.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Rows are truth, columns are prediction.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n_classes = 0);

    std::size_t n_classes() const noexcept { return n_; }
    std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * n_ + pred]; }
    std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * n_ + pred]; }
    std::uint64_t row_sum(std::size_t truth) const;
    std::uint64_t col_sum(std::size_t pred) const;
    std::uint64_t total() const;
    std::uint64_t trace() const;

private:
    std::size_t n_;
    std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::uint32_t> truths, std::span<const std::uint32_t> predictions,
                          std::size_t n_classes);

struct ClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
    // Set when the matching denominator was zero and the value was reported as 0.
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool f1_undefined = false;
};

struct ClassReport {
    std::vector<ClassMetrics> classes;
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    std::uint64_t total = 0;

    /// Aligned table: Class, Precision, Recall, F1-score, Support.
    std::string to_table() const;
    /// One `key=value` per line.
    std::string to_key_values() const;
};

double f1_score(double precision, double recall);

/// Missing or short class_names fall back to "class_<i>".
ClassReport report(const ConfusionMatrix& cm, std::span<const std::string> class_names = {});

ClassReport evaluate(std::span<const std::uint32_t> truths, std::span<const std::uint32_t> predictions,
                     std::span<const std::string> class_names);

}  // namespace tabppo::metrics
