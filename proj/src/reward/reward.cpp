#include "tabppo/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tabppo::reward {

void RewardConfig::validate() const {
    const std::pair<const char*, double> fields[] = {{"alpha", alpha},         {"beta", beta},       {"gamma_w", gamma_w},
                                                     {"r_correct", r_correct}, {"r_wrong", r_wrong}, {"lambda", lambda},
                                                     {"delta", delta}};
    for (const auto& [name, value] : fields) {
        if (!std::isfinite(value) || value < 0.0) {
            throw std::invalid_argument(std::string("reward.") + name + " must be finite and non-negative");
        }
    }
    if (window_k < 1) throw std::invalid_argument("reward.window_k must be >= 1");
}

double RewardConfig::bound() const {
    return alpha * std::max(r_correct, r_wrong) + beta * lambda +
           gamma_w * delta * std::log(1.0 + static_cast<double>(window_k));
}

void to_json(nlohmann::json& j, const RewardConfig& c) {
    j = {{"alpha", c.alpha},     {"beta", c.beta},     {"gamma_w", c.gamma_w}, {"r_correct", c.r_correct},
         {"r_wrong", c.r_wrong}, {"lambda", c.lambda}, {"delta", c.delta},     {"window_k", c.window_k}};
}

void from_json(const nlohmann::json& j, RewardConfig& c) {
    RewardConfig d;
    c.alpha = j.value("alpha", d.alpha);
    c.beta = j.value("beta", d.beta);
    c.gamma_w = j.value("gamma_w", d.gamma_w);
    c.r_correct = j.value("r_correct", d.r_correct);
    c.r_wrong = j.value("r_wrong", d.r_wrong);
    c.lambda = j.value("lambda", d.lambda);
    c.delta = j.value("delta", d.delta);
    c.window_k = j.value("window_k", d.window_k);
}

MistakeWindow::MistakeWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw std::invalid_argument("mistake window capacity must be >= 1");
}

void MistakeWindow::push(bool correct) {
    if (flags_.size() == capacity_) {
        if (!flags_.front()) --wrong_;
        flags_.pop_front();
    }
    flags_.push_back(correct);
    if (!correct) ++wrong_;
}

void MistakeWindow::reset() {
    flags_.clear();
    wrong_ = 0;
}

double reward_cls(std::uint32_t predicted, std::uint32_t truth, const RewardConfig& cfg) {
    return predicted == truth ? cfg.r_correct : -cfg.r_wrong;
}

double reward_conf(std::uint32_t predicted, std::uint32_t truth, double prob_of_predicted, const RewardConfig& cfg) {
    const double sign = predicted == truth ? 1.0 : -1.0;
    return cfg.lambda * sign * prob_of_predicted;
}

double reward_temp(const MistakeWindow& window, const RewardConfig& cfg) {
    return -cfg.delta * std::log(1.0 + static_cast<double>(window.count_wrong()));
}

double total_reward(std::uint32_t predicted, std::uint32_t truth, double prob_of_predicted, MistakeWindow& window,
                    const RewardConfig& cfg) {
    const double r = cfg.alpha * reward_cls(predicted, truth, cfg) +
                     cfg.beta * reward_conf(predicted, truth, prob_of_predicted, cfg) +
                     cfg.gamma_w * reward_temp(window, cfg);
    window.push(predicted == truth);
    return r;
}

}  // namespace tabppo::reward
