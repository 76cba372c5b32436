#pragma once

// Central finite-difference oracle used by the gradient tests. It only calls
// the forward pass and never looks at analytic gradients except to compare.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "tabppo/autodiff.hpp"

namespace tabppo::testing {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst;
    std::size_t checked = 0;
    std::size_t kinks = 0;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps exact zeros from producing 0/0.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / scale;
}

/// `loss_fn(Tape&) -> Var` must rebuild the loss from the current parameter
/// values each call. When `max_entries_per_param` is nonzero, a random subset
/// of entries is checked per parameter. With `skip_kinks`, entries whose
/// forward and backward one-sided slopes disagree by more than 1e-3 (a ReLU
/// kink inside the stencil) are counted in `kinks` instead of compared.
template <typename LossFn>
GradCheckResult grad_check(const std::vector<num::Parameter*>& params, LossFn&& loss_fn, double step = 1e-5,
                           std::size_t max_entries_per_param = 0, std::uint64_t subset_seed = 0,
                           bool skip_kinks = false) {
    for (auto* p : params) p->zero_grad();
    {
        num::Tape tape;
        auto loss = loss_fn(tape);
        tape.backward(loss);
    }
    auto eval = [&]() {
        num::Tape tape;
        return loss_fn(tape).value().item();
    };

    GradCheckResult result;
    const double base = skip_kinks ? eval() : 0.0;
    std::mt19937_64 rng(subset_seed);
    for (auto* p : params) {
        std::vector<std::size_t> entries(p->value.size());
        for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = i;
        if (max_entries_per_param && entries.size() > max_entries_per_param) {
            std::shuffle(entries.begin(), entries.end(), rng);
            entries.resize(max_entries_per_param);
        }
        for (auto i : entries) {
            const double saved = p->value[i];
            p->value[i] = saved + step;
            const double up = eval();
            p->value[i] = saved - step;
            const double down = eval();
            p->value[i] = saved;
            const double numeric = (up - down) / (2.0 * step);
            if (skip_kinks) {
                const double forward = (up - base) / step, backward = (base - down) / step;
                if (std::abs(forward - backward) > 1e-3 * std::max(1.0, std::abs(numeric))) {
                    ++result.kinks;
                    continue;
                }
            }
            const double err = relative_error(p->grad[i], numeric);
            ++result.checked;
            if (err > result.max_rel_error) {
                result.max_rel_error = err;
                result.worst = p->name + "[" + std::to_string(i) + "] analytic=" + std::to_string(p->grad[i]) +
                               " numeric=" + std::to_string(numeric);
            }
        }
    }
    return result;
}

inline num::Parameter random_parameter(const std::string& name, num::Shape shape, std::mt19937_64& rng,
                                       double lo = -1.0, double hi = 1.0) {
    num::Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : t.data()) v = dist(rng);
    return num::Parameter{name, std::move(t), {}};
}

}  // namespace tabppo::testing
