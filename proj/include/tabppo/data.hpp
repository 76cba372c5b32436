#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tabppo/tensor.hpp"

namespace tabppo::data {

/// Column layout problems: missing or duplicated columns, mismatched schemas.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vocabulary of one categorical column. Index 0 is reserved for values
/// never seen while fitting; known values are numbered from 1.
struct CategoricalField {
    std::string name;
    std::vector<std::string> values;

    std::uint32_t lookup(std::string_view value) const;
    std::uint32_t add(const std::string& value);
    std::size_t vocab_size() const { return values.size() + 1; }
    const std::string& value_at(std::uint32_t index) const;

private:
    std::unordered_map<std::string, std::uint32_t> index_;

    friend class FeatureSchema;
    void rebuild_index();
};

/// Standardisation statistics of one numerical column.
struct NumericalField {
    std::string name;
    double mean = 0.0;
    double std = 1.0;
};

class FeatureSchema {
public:
    std::vector<CategoricalField> categorical;
    std::vector<NumericalField> numerical;
    std::vector<std::string> labels;

    std::size_t n_categorical() const { return categorical.size(); }
    std::size_t n_numerical() const { return numerical.size(); }
    std::size_t n_classes() const { return labels.size(); }
    std::optional<std::uint32_t> label_index(std::string_view name) const;

    /// Throws SchemaError if field names collide, a std is not positive, or
    /// no label is declared.
    void validate() const;

    /// Human-readable field-level differences; empty when layouts agree.
    /// Statistics and vocabularies are not compared, only names and order.
    std::vector<std::string> layout_diff(const FeatureSchema& other) const;

    nlohmann::json to_json() const;
    static FeatureSchema from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static FeatureSchema load(const std::filesystem::path& path);

    bool operator==(const FeatureSchema& other) const;
};

/// Encoded table. `numerical` is [rows x M]; `categorical` is row-major
/// [rows x C] vocabulary indices.
struct Dataset {
    std::shared_ptr<const FeatureSchema> schema;
    std::size_t rows = 0;
    std::vector<std::uint32_t> categorical;
    num::Tensor numerical;
    std::vector<std::uint32_t> labels;

    std::size_t size() const { return rows; }
    std::size_t n_categorical() const { return schema ? schema->n_categorical() : 0; }
    std::size_t n_numerical() const { return schema ? schema->n_numerical() : 0; }
    Dataset subset(std::span<const std::size_t> indices) const;
    std::vector<std::size_t> class_counts() const;
    /// Throws InputError if any index is out of range for the schema.
    void validate() const;
};

/// A dataset split into train and test parts with statistics fitted on train.
struct PreparedData {
    std::shared_ptr<const FeatureSchema> schema;
    Dataset train;
    Dataset test;
    std::vector<std::string> warnings;
};

struct Partition {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    std::vector<std::string> warnings;
};

/// Stratified row partition by label; both row lists are ascending.
/// `label_names` is only used to word warnings.
Partition stratified_partition(std::span<const std::uint32_t> labels, double train_fraction, std::uint64_t seed,
                               std::span<const std::string> label_names = {});

struct SplitResult {
    Dataset train;
    Dataset test;
    std::vector<std::string> warnings;
};

/// Stratified split: each class contributes round(n_c * train_fraction)
/// samples to train. Classes with fewer than two samples go to train with a
/// warning. Row order inside each part follows the input order.
SplitResult split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Returns a copy of `schema` whose numerical means/stds are fitted on `ds`
/// (population std; constant columns get std 1).
FeatureSchema fit_standardization(const FeatureSchema& schema, const Dataset& ds);
Dataset standardize(const Dataset& ds, std::shared_ptr<const FeatureSchema> schema);
Dataset destandardize(const Dataset& ds);

/// Splits a raw dataset, fits standardisation on the train part and applies
/// it to both parts.
PreparedData prepare(const Dataset& raw, double train_fraction, std::uint64_t seed);

struct CsvOptions {
    std::string label_column = "label";
    /// When both lists are empty, columns whose every cell parses as a number
    /// are numerical and the rest categorical. When one list is given the
    /// remaining columns go to the other kind.
    std::vector<std::string> categorical_columns;
    std::vector<std::string> numerical_columns;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 0;
};

/// Column layout of the TON_IoT network-traffic CSV: 30 categorical and 10
/// numerical fields, label column "type". Identifier columns (ts, src_ip,
/// dst_ip) and the binary "label" column are not features.
CsvOptions ton_iot_options();

/// Parsed CSV before any encoding: header plus string cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
std::vector<std::string> parse_csv_line(std::string_view line);

/// Reads a CSV, splits it stratified by label, fits vocabularies and
/// standardisation on the train rows only, then encodes both parts.
PreparedData load_csv(const std::filesystem::path& path, const CsvOptions& options);

/// Encodes a CSV against a fixed schema (as stored next to a model). Unseen
/// categorical values map to 0; numericals are standardised with the
/// schema's statistics. Column layout must match the schema.
Dataset encode_csv(const std::filesystem::path& path, const std::string& label_column,
                   std::shared_ptr<const FeatureSchema> schema);

/// Writes raw (de-standardised) values and decoded strings with a header row.
void write_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column = "label");

struct SyntheticSpec {
    std::vector<std::size_t> samples_per_class{1000, 1000, 1000, 1000, 20};
    std::size_t n_categorical = 4;
    std::size_t vocab_size = 8;
    std::size_t n_numerical = 4;
    double class_separation = 2.0;
    std::uint64_t seed = 0;

    std::size_t n_classes() const { return samples_per_class.size(); }
    void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticSpec& spec);
void from_json(const nlohmann::json& j, SyntheticSpec& spec);

/// Draws a raw (unstandardised) dataset. Numerical features of class c are
/// N(mu_c, I) with |mu_c| = class_separation; each categorical field takes the
/// class's preferred value with probability s / (1 + s), otherwise a uniform
/// value. Rows are shuffled. Bit-identical for equal specs.
Dataset generate_synthetic(const SyntheticSpec& spec);

struct Batch {
    std::size_t size = 0;
    std::size_t n_categorical = 0;
    std::vector<std::uint32_t> categorical;  // [size x n_categorical]
    num::Tensor numerical;                   // [size x M]
    std::vector<std::uint32_t> labels;
    std::vector<std::size_t> rows;  // source row of each sample

    std::uint32_t cat(std::size_t sample, std::size_t field) const {
        return categorical[sample * n_categorical + field];
    }
};

Batch make_batch(const Dataset& ds, std::span<const std::size_t> rows);

/// Splits the dataset into consecutive batches (the last may be partial).
/// With a seed the row order is shuffled first.
std::vector<Batch> iterate_batches(const Dataset& ds, std::size_t batch_size,
                                   std::optional<std::uint64_t> shuffle_seed);

}  // namespace tabppo::data
