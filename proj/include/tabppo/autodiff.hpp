#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tabppo/tensor.hpp"

namespace tabppo::num {

/// A trainable leaf tensor with its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    void zero_grad();
};

/// Fills `p` uniformly in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
void init_uniform_fan_in(Tensor& p, std::size_t fan_in, std::mt19937_64& rng);

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

/// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so
/// every node's inputs precede it and a reverse sweep is a valid topological
/// order for the backward pass.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    /// With `record_gradients` false, parameters enter as constants and no
    /// backward closures are kept (inference mode).
    explicit Tape(bool record_gradients) : record_gradients_(record_gradients) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var param(Parameter& p);

    /// Appends an op node. `fn` is dropped when no input requires a gradient.
    Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

    /// Gradient buffer of node `id`, zero-initialised on first access.
    Tensor& grad(std::size_t id);

    /// Runs the backward sweep from a scalar loss and accumulates into the
    /// `grad` of every Parameter reachable from it.
    void backward(Var loss);

    std::size_t size() const noexcept { return nodes_.size(); }
    /// Number of op nodes whose backward function ran in the last sweep.
    std::size_t last_backward_visits() const noexcept { return last_visits_; }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        Parameter* param = nullptr;
        bool needs_grad = false;
    };

    std::deque<Node> nodes_;
    std::size_t last_visits_ = 0;
    bool record_gradients_ = true;
};

}  // namespace tabppo::num
