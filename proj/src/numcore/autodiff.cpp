#include "tabppo/autodiff.hpp"

#include <cmath>

namespace tabppo::num {

void Parameter::zero_grad() {
    if (grad.shape() != value.shape()) {
        grad = Tensor(value.shape());
    } else {
        grad.fill(0.0);
    }
}

void init_uniform_fan_in(Tensor& p, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : p.data()) v = dist(rng);
}

const Tensor& Var::value() const {
    if (!tape) throw UsageError("Var is not attached to a tape");
    return tape->value(id);
}

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, false});
    return Var{this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
    if (!record_gradients_) return constant(p.value);
    nodes_.push_back(Node{p.value, {}, {}, {}, &p, true});
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
    bool needs = false;
    for (auto in : inputs) needs = needs || nodes_[in].needs_grad;
    Node node{std::move(value), {}, std::move(inputs), {}, nullptr, needs};
    if (needs) node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
    auto& node = nodes_[id];
    if (node.grad.shape() != node.value.shape()) node.grad = Tensor(node.value.shape());
    return node.grad;
}

void Tape::backward(Var loss) {
    if (loss.tape != this) throw UsageError("loss belongs to a different tape");
    const auto& lv = nodes_[loss.id].value;
    if (lv.size() != 1) {
        throw UsageError("backward requires a scalar loss, got shape " + shape_string(lv.shape()));
    }
    if (!std::isfinite(lv[0])) throw NumericalError("non-finite loss value");

    std::vector<bool> reachable(loss.id + 1, false);
    reachable[loss.id] = true;
    grad(loss.id)[0] = 1.0;
    last_visits_ = 0;

    for (std::size_t i = loss.id + 1; i-- > 0;) {
        if (!reachable[i]) continue;
        auto& node = nodes_[i];
        if (!node.needs_grad) continue;
        if (node.param) {
            Parameter& p = *node.param;
            if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
            const auto& g = grad(i);
            for (std::size_t k = 0; k < g.size(); ++k) p.grad[k] += g[k];
            continue;
        }
        grad(i);  // a reachable node always has a (possibly zero) gradient
        node.backward(*this, i);
        ++last_visits_;
        for (auto in : nodes_[i].inputs) reachable[in] = true;
    }
}

}  // namespace tabppo::num
