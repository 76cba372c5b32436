#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tabppo/encoder.hpp"

namespace tabppo::model {

/// Policy/value outputs of a recorded forward pass.
struct NetOutputs {
    num::Var state;      // [B x D]
    num::Var logits;     // [B x K]
    num::Var log_probs;  // [B x K]
    num::Var values;     // [B]
};

/// One classification decision.
struct ActionOutput {
    std::vector<double> probs;
    double log_prob_of_action = 0.0;
    std::uint32_t action = 0;
    double value = 0.0;
};

/// Encoder plus a policy head (D -> K logits) and a value head (D -> 1).
class PolicyValueNet {
public:
    PolicyValueNet() = default;
    PolicyValueNet(const EncoderConfig& config, const InputLayout& layout, std::mt19937_64& rng);

    Encoder& encoder() { return encoder_; }
    const Encoder& encoder() const { return encoder_; }
    std::size_t n_classes() const { return encoder_.layout().n_classes; }

    /// Heads applied to an already-encoded state [B x D].
    NetOutputs heads(num::Tape& tape, num::Var state);
    NetOutputs forward(num::Tape& tape, const data::Batch& batch);

    /// Gradient-free evaluation: row-major probabilities [B x K] and values.
    struct Evaluation {
        num::Tensor probs;
        std::vector<double> values;
    };
    Evaluation evaluate(const data::Batch& batch) const;
    std::vector<std::uint32_t> predict(const data::Batch& batch) const;

    /// Every trainable parameter, encoder first, in a stable order.
    std::vector<num::Parameter*> parameters();
    std::vector<const num::Parameter*> parameters() const;
    void zero_grad();

    nlohmann::json to_json() const;
    static PolicyValueNet from_json(const nlohmann::json& j);

private:
    Encoder encoder_;
    std::vector<num::Parameter> head_params_;  // policy.weight, policy.bias, value.weight, value.bias
};

/// Draws action ~ Categorical(probs) by inverse CDF; returns (action, ln p[action]).
std::pair<std::uint32_t, double> sample_action(std::span<const double> probs, std::mt19937_64& rng);

/// Argmax with ties broken toward the lowest index.
std::uint32_t predict_class(std::span<const double> probs);

}  // namespace tabppo::model
