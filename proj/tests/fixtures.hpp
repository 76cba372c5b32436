#pragma once

#include <random>
#include <vector>

#include "tabppo/data.hpp"
#include "tabppo/heads.hpp"

namespace tabppo::testing {

/// Small standardised synthetic problem used across model tests.
inline data::PreparedData tiny_data(std::size_t n_categorical = 3, std::size_t n_numerical = 2,
                                    std::vector<std::size_t> per_class = {8, 8, 8}, std::uint64_t seed = 1) {
    data::SyntheticSpec spec;
    spec.samples_per_class = std::move(per_class);
    spec.n_categorical = n_categorical;
    spec.n_numerical = n_numerical;
    spec.vocab_size = 5;
    spec.class_separation = 1.5;
    spec.seed = seed;
    return data::prepare(data::generate_synthetic(spec), 0.75, seed);
}

inline data::Batch first_rows(const data::Dataset& ds, std::size_t n) {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    return data::make_batch(ds, rows);
}

inline model::EncoderConfig small_config(model::EncoderKind kind = model::EncoderKind::transformer) {
    model::EncoderConfig c;
    c.embed_dim = 8;
    c.n_layers = 2;
    c.n_heads = 4;
    c.ffn_hidden = 16;
    c.kind = kind;
    return c;
}

inline model::PolicyValueNet small_net(const data::FeatureSchema& schema, std::uint64_t seed = 3,
                                       model::EncoderKind kind = model::EncoderKind::transformer) {
    std::mt19937_64 rng(seed);
    return model::PolicyValueNet(small_config(kind), model::InputLayout::from_schema(schema), rng);
}

}  // namespace tabppo::testing
