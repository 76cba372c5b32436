#include "tabppo/heads.hpp"

#include <cmath>
#include <stdexcept>

#include "tabppo/ops.hpp"

namespace tabppo::model {

using num::Var;

PolicyValueNet::PolicyValueNet(const EncoderConfig& config, const InputLayout& layout, std::mt19937_64& rng)
    : encoder_(config, layout, rng) {
    if (layout.n_classes < 2) throw std::invalid_argument("policy head needs at least two classes");
    const std::size_t d = config.embed_dim;
    auto init = [&](const std::string& name, num::Shape shape) {
        num::Tensor t(std::move(shape));
        num::init_uniform_fan_in(t, d, rng);
        head_params_.push_back({name, std::move(t), {}});
    };
    init("policy.weight", {d, layout.n_classes});
    init("policy.bias", {layout.n_classes});
    init("value.weight", {d, 1});
    init("value.bias", {1});
}

NetOutputs PolicyValueNet::heads(num::Tape& tape, Var state) {
    NetOutputs out;
    out.state = state;
    out.logits = num::add_bias(num::matmul(state, tape.param(head_params_[0])), tape.param(head_params_[1]));
    out.log_probs = num::log_softmax(out.logits);
    Var v = num::add_bias(num::matmul(state, tape.param(head_params_[2])), tape.param(head_params_[3]));
    out.values = num::reshape(v, {state.value().dim(0)});
    return out;
}

NetOutputs PolicyValueNet::forward(num::Tape& tape, const data::Batch& batch) {
    return heads(tape, encoder_.encode(tape, batch));
}

PolicyValueNet::Evaluation PolicyValueNet::evaluate(const data::Batch& batch) const {
    // An inference tape records parameters as constants, so nothing is written back.
    num::Tape tape(false);
    auto out = const_cast<PolicyValueNet*>(this)->forward(tape, batch);
    Evaluation ev;
    ev.probs = out.logits.value();
    const std::size_t k = n_classes();
    for (std::size_t i = 0; i < batch.size; ++i) {
        auto row = num::softmax_values(out.logits.value().data().subspan(i * k, k));
        std::copy(row.begin(), row.end(), ev.probs.data().begin() + static_cast<std::ptrdiff_t>(i * k));
    }
    const auto& v = out.values.value();
    ev.values.assign(v.data().begin(), v.data().end());
    return ev;
}

std::vector<std::uint32_t> PolicyValueNet::predict(const data::Batch& batch) const {
    auto ev = evaluate(batch);
    const std::size_t k = n_classes();
    std::vector<std::uint32_t> out(batch.size);
    for (std::size_t i = 0; i < batch.size; ++i) out[i] = predict_class(ev.probs.data().subspan(i * k, k));
    return out;
}

std::vector<num::Parameter*> PolicyValueNet::parameters() {
    std::vector<num::Parameter*> out;
    for (auto& p : encoder_.parameters()) out.push_back(&p);
    for (auto& p : head_params_) out.push_back(&p);
    return out;
}

std::vector<const num::Parameter*> PolicyValueNet::parameters() const {
    std::vector<const num::Parameter*> out;
    for (const auto& p : encoder_.parameters()) out.push_back(&p);
    for (const auto& p : head_params_) out.push_back(&p);
    return out;
}

void PolicyValueNet::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

nlohmann::json PolicyValueNet::to_json() const {
    nlohmann::json j;
    j["encoder"] = encoder_.config();
    j["layout"] = encoder_.layout();
    j["parameters"] = nlohmann::json::array();
    for (const auto* p : parameters()) {
        j["parameters"].push_back({{"name", p->name}, {"shape", p->value.shape()}, {"values", p->value.storage()}});
    }
    return j;
}

PolicyValueNet PolicyValueNet::from_json(const nlohmann::json& j) {
    std::mt19937_64 unused(0);
    PolicyValueNet net(j.at("encoder").get<EncoderConfig>(), j.at("layout").get<InputLayout>(), unused);
    const auto& stored = j.at("parameters");
    auto params = net.parameters();
    if (stored.size() != params.size()) {
        throw std::runtime_error("checkpoint has " + std::to_string(stored.size()) + " parameters, model expects " +
                                 std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& s = stored[i];
        if (s.at("name").get<std::string>() != params[i]->name ||
            s.at("shape").get<num::Shape>() != params[i]->value.shape()) {
            throw std::runtime_error("checkpoint parameter " + std::to_string(i) + " (" +
                                     s.at("name").get<std::string>() + ") does not match model parameter " +
                                     params[i]->name);
        }
        params[i]->value = num::Tensor(params[i]->value.shape(), s.at("values").get<std::vector<double>>());
    }
    return net;
}

std::pair<std::uint32_t, double> sample_action(std::span<const double> probs, std::mt19937_64& rng) {
    if (probs.empty()) throw std::invalid_argument("sample_action on an empty distribution");
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        last_positive = i;
        cumulative += probs[i];
        if (u < cumulative) return {static_cast<std::uint32_t>(i), std::log(probs[i])};
    }
    // rounding left u above the total mass
    return {static_cast<std::uint32_t>(last_positive), std::log(probs[last_positive])};
}

std::uint32_t predict_class(std::span<const double> probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = i;
    return static_cast<std::uint32_t>(best);
}

}  // namespace tabppo::model
