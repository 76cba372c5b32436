#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabppo/data.hpp"
#include "tabppo/heads.hpp"
#include "tabppo/metrics.hpp"
#include "tabppo/reward.hpp"

namespace tabppo::rl {

/// Raised when a loss or gradient stops being finite during training.
/// The message carries epoch, batch and update coordinates plus parameter norms.
class TrainingAborted : public num::NumericalError {
public:
    using num::NumericalError::NumericalError;
};

struct Transition {
    std::size_t row = 0;  // dataset row
    std::uint32_t action = 0;
    std::uint32_t truth = 0;
    double old_log_prob = 0.0;
    double value = 0.0;
    double reward = 0.0;
    double advantage = 0.0;
    double return_target = 0.0;
    bool terminal = false;
};

struct PpoConfig {
    double clip_epsilon = 0.2;
    std::size_t ppo_epochs = 4;
    std::size_t minibatch_size = 256;
    double discount = 0.99;
    double gae_lambda = 0.95;
    double value_loss_coef = 0.5;
    double entropy_coef = 0.0;
    double learning_rate = 3e-4;
    double max_grad_norm = 1.0;
    /// Rows collected per rollout before the update epochs run.
    std::size_t batch_size = 1024;
    /// Transitions per episode inside a rollout; 0 means the whole rollout.
    std::size_t episode_length = 0;
    bool normalize_advantages = true;

    void validate() const;
};

void to_json(nlohmann::json& j, const PpoConfig& c);
void from_json(const nlohmann::json& j, PpoConfig& c);

struct CeConfig {
    double learning_rate = 3e-4;
    std::size_t batch_size = 256;
    double max_grad_norm = 1.0;

    void validate() const;
};

void to_json(nlohmann::json& j, const CeConfig& c);
void from_json(const nlohmann::json& j, CeConfig& c);

/// Bias-corrected first/second moment optimizer.
class Adam {
public:
    Adam() = default;
    Adam(std::span<num::Parameter* const> params, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);

    void step(std::span<num::Parameter* const> params);
    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }
    std::uint64_t steps() const { return t_; }
    const std::vector<num::Tensor>& first_moments() const { return m_; }
    const std::vector<num::Tensor>& second_moments() const { return v_; }

    nlohmann::json to_json() const;
    static Adam from_json(const nlohmann::json& j);

private:
    double lr_ = 3e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::uint64_t t_ = 0;
    std::vector<num::Tensor> m_, v_;
};

double global_grad_norm(std::span<num::Parameter* const> params);
/// Rescales gradients so their global L2 norm is at most max_norm; returns the norm before scaling.
double clip_grad_norm(std::span<num::Parameter* const> params, double max_norm);

/// Everything needed to resume training exactly.
struct TrainerState {
    model::PolicyValueNet net;
    Adam optimizer;
    std::mt19937_64 sampling_rng;
    std::mt19937_64 shuffle_rng;
    reward::MistakeWindow window;
    std::size_t epoch = 0;
    std::uint64_t updates = 0;

    /// Fresh state around an initialised network; rng streams derive from seed.
    static TrainerState create(model::PolicyValueNet net, double learning_rate, std::size_t window_k,
                               std::uint64_t seed);

    nlohmann::json to_json() const;
    static TrainerState from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static TrainerState load(const std::filesystem::path& path);
};

/// One transition per row in batch order. Actions are sampled from the current
/// policy; the reward window is consumed and updated in order.
std::vector<Transition> collect_trajectory(const data::Batch& batch, const model::PolicyValueNet& net,
                                           const reward::RewardConfig& reward_cfg, reward::MistakeWindow& window,
                                           std::mt19937_64& rng, std::size_t episode_length = 0);

/// Fills advantage and return_target. Episodes end at transitions flagged
/// terminal and at the end of the span; terminal states bootstrap with 0.
/// Normalization is per episode and skips single-step episodes.
void compute_gae(std::span<Transition> transitions, double discount, double gae_lambda, bool normalize = true);

/// min(r * A, clip(r, 1 - eps, 1 + eps) * A)
double clipped_term(double ratio, double advantage, double eps);

/// Mean clipped surrogate over a batch of ratios [B].
num::Var clipped_surrogate(num::Var ratio, const num::Tensor& advantages, double eps);

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double first_minibatch_clip_fraction = 0.0;
    double first_minibatch_policy_loss = 0.0;
    double first_minibatch_max_ratio_deviation = 0.0;
    std::size_t minibatches = 0;
};

/// K epochs of shuffled minibatches over the rollout with clipped policy and value losses.
UpdateStats ppo_update(const data::Dataset& ds, std::span<const Transition> transitions, model::PolicyValueNet& net,
                       Adam& optimizer, const PpoConfig& cfg, std::mt19937_64& rng);

struct EpochMetrics {
    std::size_t epoch = 0;
    double mean_reward = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double clip_fraction = 0.0;
    double entropy = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double test_macro_f1 = 0.0;
};

void to_json(nlohmann::json& j, const EpochMetrics& m);
void from_json(const nlohmann::json& j, EpochMetrics& m);

using EpochCallback = std::function<void(const EpochMetrics&, const TrainerState&)>;

/// Trains until state.epoch == epochs. Test metrics are zero when test is null.
std::vector<EpochMetrics> train_ppo(const data::Dataset& train, TrainerState& state, const PpoConfig& ppo_cfg,
                                    const reward::RewardConfig& reward_cfg, std::size_t epochs,
                                    const data::Dataset* test = nullptr, const EpochCallback& on_epoch = {});

/// Negative log-likelihood on the policy head; the value head is never updated.
/// policy_loss carries the mean training NLL, reward and value fields stay zero.
std::vector<EpochMetrics> train_cross_entropy(const data::Dataset& train, TrainerState& state, const CeConfig& cfg,
                                              std::size_t epochs, const data::Dataset* test = nullptr,
                                              const EpochCallback& on_epoch = {});

/// Mean NLL of the true labels under the current policy.
double cross_entropy_loss(const model::PolicyValueNet& net, const data::Dataset& ds);

std::vector<std::uint32_t> predict_dataset(const model::PolicyValueNet& net, const data::Dataset& ds,
                                           std::size_t batch_size = 512);
metrics::ClassReport evaluate_model(const model::PolicyValueNet& net, const data::Dataset& ds);

}  // namespace tabppo::rl
