#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tabppo/data.hpp"

namespace tabppo::data {

void SyntheticSpec::validate() const {
    if (samples_per_class.size() < 2) throw std::invalid_argument("synthetic spec needs at least two classes");
    for (auto n : samples_per_class)
        if (n < 1) throw std::invalid_argument("samples_per_class entries must be >= 1");
    if (!(class_separation >= 0.0) || !std::isfinite(class_separation)) {
        throw std::invalid_argument("class_separation must be a finite value >= 0");
    }
    if (n_categorical > 0 && vocab_size < 1) throw std::invalid_argument("vocab_size must be >= 1");
    if (n_categorical + n_numerical == 0) throw std::invalid_argument("synthetic spec declares no features");
}

void to_json(nlohmann::json& j, const SyntheticSpec& spec) {
    j = {{"samples_per_class", spec.samples_per_class},
         {"n_categorical", spec.n_categorical},
         {"vocab_size", spec.vocab_size},
         {"n_numerical", spec.n_numerical},
         {"class_separation", spec.class_separation},
         {"seed", spec.seed}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& spec) {
    SyntheticSpec d;
    spec.samples_per_class = j.value("samples_per_class", d.samples_per_class);
    spec.n_categorical = j.value("n_categorical", d.n_categorical);
    spec.vocab_size = j.value("vocab_size", d.vocab_size);
    spec.n_numerical = j.value("n_numerical", d.n_numerical);
    spec.class_separation = j.value("class_separation", d.class_separation);
    spec.seed = j.value("seed", d.seed);
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t k = spec.n_classes();
    const std::size_t c = spec.n_categorical;
    const std::size_t m = spec.n_numerical;

    auto schema = std::make_shared<FeatureSchema>();
    for (std::size_t f = 0; f < c; ++f) {
        CategoricalField field;
        field.name = "cat_" + std::to_string(f);
        for (std::size_t v = 0; v < spec.vocab_size; ++v) field.add("f" + std::to_string(f) + "_v" + std::to_string(v));
        schema->categorical.push_back(std::move(field));
    }
    for (std::size_t j = 0; j < m; ++j) schema->numerical.push_back({"num_" + std::to_string(j), 0.0, 1.0});
    for (std::size_t y = 0; y < k; ++y) schema->labels.push_back("class_" + std::to_string(y));

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // class prototypes: a random direction scaled to the separation
    std::vector<std::vector<double>> means(k, std::vector<double>(m, 0.0));
    for (auto& mu : means) {
        double norm = 0.0;
        for (auto& v : mu) {
            v = gauss(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : mu) v = norm > 0.0 ? v / norm * spec.class_separation : 0.0;
    }
    std::uniform_int_distribution<std::uint32_t> any_value(1, static_cast<std::uint32_t>(std::max<std::size_t>(spec.vocab_size, 1)));
    std::vector<std::vector<std::uint32_t>> preferred(k, std::vector<std::uint32_t>(c));
    for (auto& row : preferred)
        for (auto& v : row) v = any_value(rng);
    std::bernoulli_distribution take_preferred(spec.class_separation / (1.0 + spec.class_separation));

    std::size_t total = 0;
    for (auto n : spec.samples_per_class) total += n;

    Dataset ds;
    ds.schema = schema;
    ds.rows = total;
    ds.categorical.resize(total * c);
    ds.numerical = num::Tensor({total, m});
    ds.labels.resize(total);

    std::vector<std::uint32_t> class_of_row;
    class_of_row.reserve(total);
    for (std::size_t y = 0; y < k; ++y) class_of_row.insert(class_of_row.end(), spec.samples_per_class[y], static_cast<std::uint32_t>(y));
    std::shuffle(class_of_row.begin(), class_of_row.end(), rng);

    for (std::size_t r = 0; r < total; ++r) {
        const auto y = class_of_row[r];
        ds.labels[r] = y;
        for (std::size_t f = 0; f < c; ++f) ds.categorical[r * c + f] = take_preferred(rng) ? preferred[y][f] : any_value(rng);
        for (std::size_t j = 0; j < m; ++j) ds.numerical[r * m + j] = means[y][j] + gauss(rng);
    }
    return ds;
}

}  // namespace tabppo::data
