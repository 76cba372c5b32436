#include <cmath>
#include <stdexcept>

#include "epoch_eval.hpp"
#include "tabppo/ops.hpp"

namespace tabppo::rl {

void CeConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("ce.learning_rate must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("ce.batch_size must be >= 1");
    if (!(max_grad_norm >= 0.0) || !std::isfinite(max_grad_norm))
        throw std::invalid_argument("ce.max_grad_norm must be >= 0");
}

void to_json(nlohmann::json& j, const CeConfig& c) {
    j = {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"max_grad_norm", c.max_grad_norm}};
}

void from_json(const nlohmann::json& j, CeConfig& c) {
    CeConfig d;
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.max_grad_norm = j.value("max_grad_norm", d.max_grad_norm);
}

namespace {

std::vector<std::size_t> as_indices(const std::vector<std::uint32_t>& labels) {
    return {labels.begin(), labels.end()};
}

}  // namespace

double cross_entropy_loss(const model::PolicyValueNet& net, const data::Dataset& ds) {
    double total = 0.0;
    for (const auto& b : data::iterate_batches(ds, 512, std::nullopt)) {
        num::Tape tape(false);
        auto out = const_cast<model::PolicyValueNet&>(net).forward(tape, b);
        const auto& lp = out.log_probs.value();
        const std::size_t k = net.n_classes();
        for (std::size_t i = 0; i < b.size; ++i) total -= lp[i * k + b.labels[i]];
    }
    return total / static_cast<double>(ds.rows);
}

std::vector<EpochMetrics> train_cross_entropy(const data::Dataset& train, TrainerState& state, const CeConfig& cfg,
                                              std::size_t epochs, const data::Dataset* test,
                                              const EpochCallback& on_epoch) {
    cfg.validate();
    if (train.rows == 0) throw std::invalid_argument("training set is empty");
    state.optimizer.set_learning_rate(cfg.learning_rate);
    const auto params = state.net.parameters();
    std::vector<EpochMetrics> log;
    while (state.epoch < epochs) {
        const std::size_t epoch = state.epoch + 1;
        const auto batches = data::iterate_batches(train, cfg.batch_size, state.shuffle_rng());
        EpochMetrics m;
        m.epoch = epoch;
        double loss_sum = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            try {
                num::Tape tape;
                auto out = state.net.forward(tape, batches[b]);
                num::Var loss = num::scale(num::mean(num::pick(out.log_probs, as_indices(batches[b].labels))), -1.0);
                state.net.zero_grad();
                tape.backward(loss);
                const double norm = clip_grad_norm(params, cfg.max_grad_norm);
                if (!std::isfinite(norm)) throw num::NumericalError("non-finite gradient norm");
                state.optimizer.step(params);
                ++state.updates;
                loss_sum += loss.value().item() * static_cast<double>(batches[b].size);
            } catch (const num::NumericalError& e) {
                throw TrainingAborted("epoch " + std::to_string(epoch) + " batch " + std::to_string(b + 1) + ": " +
                                      e.what());
            }
        }
        m.policy_loss = loss_sum / static_cast<double>(train.rows);
        finish_epoch(m, state.net, train, test);
        state.epoch = epoch;
        log.push_back(m);
        if (on_epoch) on_epoch(m, state);
    }
    return log;
}

}  // namespace tabppo::rl
