#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabppo/autodiff.hpp"
#include "tabppo/data.hpp"

namespace tabppo::model {

enum class EncoderKind { transformer, mlp };

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& name);

struct EncoderConfig {
    std::size_t embed_dim = 32;
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t ffn_hidden = 128;
    EncoderKind kind = EncoderKind::transformer;

    void validate() const;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

/// Shape of the model input, derived from a FeatureSchema.
struct InputLayout {
    std::vector<std::size_t> vocab_sizes;  // one per categorical field
    std::size_t n_numerical = 0;
    std::size_t n_classes = 0;

    static InputLayout from_schema(const data::FeatureSchema& schema);
    std::size_t n_categorical() const { return vocab_sizes.size(); }
    /// Categorical tokens plus one numerical token when numericals exist.
    std::size_t n_tokens() const { return vocab_sizes.size() + (n_numerical > 0 ? 1 : 0); }
    bool operator==(const InputLayout&) const = default;
};

void to_json(nlohmann::json& j, const InputLayout& l);
void from_json(const nlohmann::json& j, InputLayout& l);

/// Per-layer attention probabilities [B*H x T x T] captured during encode.
struct AttentionTrace {
    std::vector<num::Var> weights;
};

/// Feature encoder producing the pooled state vector. In transformer mode:
/// per-field embedding tables, a linear+ReLU numerical token, a per-token
/// dimension-adjustment affine layer, pre-norm self-attention blocks and mean
/// pooling (no positional encoding). In MLP mode: flattened embeddings and raw
/// numericals through two affine+ReLU layers.
class Encoder {
public:
    Encoder() = default;
    Encoder(const EncoderConfig& config, const InputLayout& layout, std::mt19937_64& rng);

    const EncoderConfig& config() const { return config_; }
    const InputLayout& layout() const { return layout_; }

    /// [B x C x D]
    num::Var embed_categorical(num::Tape& tape, const data::Batch& batch);
    /// [B x D]; requires at least one numerical field.
    num::Var project_numerical(num::Tape& tape, const data::Batch& batch);
    /// Categorical tokens in field order followed by the numerical token, each [B x D].
    std::vector<num::Var> tokens(num::Tape& tape, const data::Batch& batch);
    /// Transformer stack over an arbitrary token list -> pooled [B x D].
    num::Var encode_tokens(num::Tape& tape, std::span<const num::Var> tokens, AttentionTrace* trace = nullptr);
    num::Var encode_mlp(num::Tape& tape, const data::Batch& batch);
    /// Dispatches on the configured kind.
    num::Var encode(num::Tape& tape, const data::Batch& batch, AttentionTrace* trace = nullptr);

    std::vector<num::Parameter>& parameters() { return params_; }
    const std::vector<num::Parameter>& parameters() const { return params_; }

private:
    struct Linear {
        std::size_t weight = 0, bias = 0;
    };
    struct Norm {
        std::size_t gain = 0, bias = 0;
    };
    struct Block {
        Norm attn_norm;
        Linear query, key, value, out;
        Norm ffn_norm;
        Linear ffn_in, ffn_out;
    };

    Linear add_linear(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng);
    Norm add_norm(const std::string& name, std::size_t dim);
    num::Var apply(num::Tape& tape, const Linear& l, num::Var x);
    num::Var apply(num::Tape& tape, const Norm& n, num::Var x);
    num::Var attention(num::Tape& tape, const Block& b, num::Var x, std::size_t batch, std::size_t n_tokens,
                       AttentionTrace* trace);

    EncoderConfig config_;
    InputLayout layout_;
    std::vector<num::Parameter> params_;
    std::vector<std::size_t> embeddings_;
    Linear numeric_proj_;
    Linear adjust_;
    std::vector<Block> blocks_;
    Norm final_norm_;
    Linear mlp_hidden_, mlp_out_;
};

}  // namespace tabppo::model
