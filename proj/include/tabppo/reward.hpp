#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>

#include "json.hpp"

namespace tabppo::reward {

/// Weights and scales of the composite reward
///   R = alpha * R_cls + beta * R_conf + gamma_w * R_temp.
struct RewardConfig {
    double alpha = 1.0;
    double beta = 0.5;
    double gamma_w = 0.2;
    double r_correct = 1.0;
    double r_wrong = 1.0;
    double lambda = 1.0;
    double delta = 0.5;
    std::size_t window_k = 32;

    void validate() const;
    /// Upper bound on |R| for any prediction and window state.
    double bound() const;
};

void to_json(nlohmann::json& j, const RewardConfig& c);
void from_json(const nlohmann::json& j, RewardConfig& c);

/// Correctness flags of the last `capacity` decisions.
class MistakeWindow {
public:
    explicit MistakeWindow(std::size_t capacity = 32);

    void push(bool correct);
    void reset();
    std::size_t count_wrong() const noexcept { return wrong_; }
    std::size_t size() const noexcept { return flags_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }

private:
    std::size_t capacity_;
    std::deque<bool> flags_;
    std::size_t wrong_ = 0;
};

/// +r_correct when predicted == truth, -r_wrong otherwise.
double reward_cls(std::uint32_t predicted, std::uint32_t truth, const RewardConfig& cfg);

/// lambda * s * p, s = +1 when correct and -1 when wrong, p the probability
/// assigned to the predicted class.
double reward_conf(std::uint32_t predicted, std::uint32_t truth, double prob_of_predicted, const RewardConfig& cfg);

/// -delta * ln(1 + count_wrong). The window holds history only.
double reward_temp(const MistakeWindow& window, const RewardConfig& cfg);

/// Weighted sum of the three terms, computed against the current window;
/// the window then records this step's correctness.
double total_reward(std::uint32_t predicted, std::uint32_t truth, double prob_of_predicted, MistakeWindow& window,
                    const RewardConfig& cfg);

}  // namespace tabppo::reward
