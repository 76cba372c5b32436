#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tabppo/data.hpp"

namespace tabppo::data {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.schema = schema;
    out.rows = indices.size();
    const std::size_t c = n_categorical();
    const std::size_t m = n_numerical();
    out.categorical.reserve(indices.size() * c);
    out.numerical = num::Tensor({indices.size(), m});
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t r = indices[i];
        out.categorical.insert(out.categorical.end(), categorical.begin() + static_cast<std::ptrdiff_t>(r * c),
                               categorical.begin() + static_cast<std::ptrdiff_t>((r + 1) * c));
        for (std::size_t j = 0; j < m; ++j) out.numerical[i * m + j] = numerical[r * m + j];
        out.labels.push_back(labels[r]);
    }
    return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(schema ? schema->n_classes() : 0, 0);
    for (auto y : labels) {
        if (y >= counts.size()) counts.resize(y + 1, 0);
        ++counts[y];
    }
    return counts;
}

void Dataset::validate() const {
    if (!schema) throw InputError("dataset has no schema");
    const std::size_t c = n_categorical();
    if (categorical.size() != rows * c || labels.size() != rows || numerical.size() != rows * n_numerical()) {
        throw InputError("dataset storage does not match its row count");
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t f = 0; f < c; ++f) {
            if (categorical[r * c + f] >= schema->categorical[f].vocab_size()) {
                throw InputError("row " + std::to_string(r) + ": categorical index out of range for field " +
                                 schema->categorical[f].name);
            }
        }
        if (labels[r] >= schema->n_classes()) throw InputError("row " + std::to_string(r) + ": label out of range");
    }
}

Partition stratified_partition(std::span<const std::uint32_t> labels, double train_fraction, std::uint64_t seed,
                               std::span<const std::string> label_names) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must lie in (0, 1)");
    }
    std::vector<std::vector<std::size_t>> by_class;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] >= by_class.size()) by_class.resize(labels[r] + 1);
        by_class[labels[r]].push_back(r);
    }
    std::mt19937_64 rng(seed);
    Partition out;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        if (members.size() < 2) {
            const std::string name = c < label_names.size() ? label_names[c] : std::to_string(c);
            out.warnings.push_back("class '" + name + "' has " + std::to_string(members.size()) +
                                   " sample(s); stratification impossible, assigned to train");
            out.train_rows.insert(out.train_rows.end(), members.begin(), members.end());
            continue;
        }
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_train =
            static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * train_fraction));
        const auto cut = members.begin() + static_cast<std::ptrdiff_t>(n_train);
        out.train_rows.insert(out.train_rows.end(), members.begin(), cut);
        out.test_rows.insert(out.test_rows.end(), cut, members.end());
    }
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    return out;
}

SplitResult split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    std::span<const std::string> names;
    if (ds.schema) names = ds.schema->labels;
    auto part = stratified_partition(ds.labels, train_fraction, seed, names);
    return SplitResult{ds.subset(part.train_rows), ds.subset(part.test_rows), std::move(part.warnings)};
}

FeatureSchema fit_standardization(const FeatureSchema& schema, const Dataset& ds) {
    FeatureSchema fitted = schema;
    const std::size_t m = schema.n_numerical();
    if (ds.rows == 0) throw InputError("cannot fit standardisation on an empty dataset");
    for (std::size_t j = 0; j < m; ++j) {
        double mean = 0.0;
        for (std::size_t r = 0; r < ds.rows; ++r) mean += ds.numerical[r * m + j];
        mean /= static_cast<double>(ds.rows);
        double var = 0.0;
        for (std::size_t r = 0; r < ds.rows; ++r) {
            const double d = ds.numerical[r * m + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(ds.rows);
        const double sd = std::sqrt(var);
        fitted.numerical[j].mean = mean;
        fitted.numerical[j].std = sd > 1e-12 ? sd : 1.0;
    }
    return fitted;
}

Dataset standardize(const Dataset& ds, std::shared_ptr<const FeatureSchema> schema) {
    Dataset out = ds;
    out.schema = std::move(schema);
    const std::size_t m = out.schema->n_numerical();
    for (std::size_t r = 0; r < out.rows; ++r) {
        for (std::size_t j = 0; j < m; ++j) {
            const auto& f = out.schema->numerical[j];
            out.numerical[r * m + j] = (ds.numerical[r * m + j] - f.mean) / f.std;
        }
    }
    return out;
}

Dataset destandardize(const Dataset& ds) {
    Dataset out = ds;
    const std::size_t m = ds.n_numerical();
    for (std::size_t r = 0; r < out.rows; ++r) {
        for (std::size_t j = 0; j < m; ++j) {
            const auto& f = ds.schema->numerical[j];
            out.numerical[r * m + j] = ds.numerical[r * m + j] * f.std + f.mean;
        }
    }
    return out;
}

PreparedData prepare(const Dataset& raw, double train_fraction, std::uint64_t seed) {
    auto parts = split(raw, train_fraction, seed);
    auto schema = std::make_shared<const FeatureSchema>(fit_standardization(*raw.schema, parts.train));
    PreparedData out;
    out.schema = schema;
    out.train = standardize(parts.train, schema);
    out.test = standardize(parts.test, schema);
    out.warnings = std::move(parts.warnings);
    return out;
}

Batch make_batch(const Dataset& ds, std::span<const std::size_t> rows) {
    Batch b;
    b.size = rows.size();
    b.n_categorical = ds.n_categorical();
    const std::size_t c = b.n_categorical;
    const std::size_t m = ds.n_numerical();
    b.categorical.reserve(rows.size() * c);
    b.numerical = num::Tensor({rows.size(), m});
    b.labels.reserve(rows.size());
    b.rows.assign(rows.begin(), rows.end());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        for (std::size_t f = 0; f < c; ++f) b.categorical.push_back(ds.categorical[r * c + f]);
        for (std::size_t j = 0; j < m; ++j) b.numerical[i * m + j] = ds.numerical[r * m + j];
        b.labels.push_back(ds.labels[r]);
    }
    return b;
}

std::vector<Batch> iterate_batches(const Dataset& ds, std::size_t batch_size,
                                   std::optional<std::uint64_t> shuffle_seed) {
    if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
    std::vector<std::size_t> order(ds.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle_seed) {
        std::mt19937_64 rng(*shuffle_seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    std::vector<Batch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t len = std::min(batch_size, order.size() - start);
        batches.push_back(make_batch(ds, std::span<const std::size_t>(order).subspan(start, len)));
    }
    return batches;
}

}  // namespace tabppo::data
