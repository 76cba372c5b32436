#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tabppo/random.hpp"
#include "tabppo/rl.hpp"

namespace tabppo::rl {

Adam::Adam(std::span<num::Parameter* const> params, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto* p : params) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void Adam::step(std::span<num::Parameter* const> params) {
    if (params.size() != m_.size()) throw std::logic_error("optimizer was built for a different parameter list");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        if (p.grad.size() == 0) continue;
        if (p.grad.shape() != p.value.shape()) throw std::logic_error("gradient shape mismatch for " + p.name);
        auto w = p.value.data();
        auto g = p.grad.data();
        auto m = m_[i].data();
        auto v = v_[i].data();
        for (std::size_t k = 0; k < w.size(); ++k) {
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
            w[k] -= lr_ * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
        }
    }
}

nlohmann::json Adam::to_json() const {
    nlohmann::json j{{"learning_rate", lr_}, {"beta1", beta1_}, {"beta2", beta2_}, {"eps", eps_}, {"t", t_}};
    j["m"] = nlohmann::json::array();
    j["v"] = nlohmann::json::array();
    for (std::size_t i = 0; i < m_.size(); ++i) {
        j["m"].push_back({{"shape", m_[i].shape()}, {"values", m_[i].storage()}});
        j["v"].push_back({{"shape", v_[i].shape()}, {"values", v_[i].storage()}});
    }
    return j;
}

Adam Adam::from_json(const nlohmann::json& j) {
    Adam a;
    a.lr_ = j.at("learning_rate").get<double>();
    a.beta1_ = j.at("beta1").get<double>();
    a.beta2_ = j.at("beta2").get<double>();
    a.eps_ = j.at("eps").get<double>();
    a.t_ = j.at("t").get<std::uint64_t>();
    for (const auto& e : j.at("m")) a.m_.emplace_back(e.at("shape").get<num::Shape>(), e.at("values").get<std::vector<double>>());
    for (const auto& e : j.at("v")) a.v_.emplace_back(e.at("shape").get<num::Shape>(), e.at("values").get<std::vector<double>>());
    return a;
}

double global_grad_norm(std::span<num::Parameter* const> params) {
    double sq = 0.0;
    for (const auto* p : params)
        for (double g : p->grad.data()) sq += g * g;
    return std::sqrt(sq);
}

double clip_grad_norm(std::span<num::Parameter* const> params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (std::isfinite(norm) && max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (auto* p : params)
            for (auto& g : p->grad.data()) g *= s;
    }
    return norm;
}

namespace {

std::string rng_to_string(const std::mt19937_64& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

std::mt19937_64 rng_from_string(const std::string& s) {
    std::mt19937_64 rng;
    std::istringstream is(s);
    is >> rng;
    if (!is) throw std::runtime_error("checkpoint rng state is corrupt");
    return rng;
}

}  // namespace

TrainerState TrainerState::create(model::PolicyValueNet net, double learning_rate, std::size_t window_k,
                                  std::uint64_t seed) {
    TrainerState s;
    s.net = std::move(net);
    s.optimizer = Adam(s.net.parameters(), learning_rate);
    s.sampling_rng.seed(derive_seed(seed, "sampling"));
    s.shuffle_rng.seed(derive_seed(seed, "shuffle"));
    s.window = reward::MistakeWindow(window_k);
    return s;
}

nlohmann::json TrainerState::to_json() const {
    return {{"format", "tabppo-checkpoint-1"},
            {"net", net.to_json()},
            {"optimizer", optimizer.to_json()},
            {"sampling_rng", rng_to_string(sampling_rng)},
            {"shuffle_rng", rng_to_string(shuffle_rng)},
            {"window_k", window.capacity()},
            {"epoch", epoch},
            {"updates", updates}};
}

TrainerState TrainerState::from_json(const nlohmann::json& j) {
    TrainerState s;
    s.net = model::PolicyValueNet::from_json(j.at("net"));
    s.optimizer = Adam::from_json(j.at("optimizer"));
    const auto params = s.net.parameters();
    const auto& m = s.optimizer.first_moments();
    if (m.size() != params.size()) throw std::runtime_error("checkpoint optimizer state does not match the network");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (m[i].shape() != params[i]->value.shape() || s.optimizer.second_moments()[i].shape() != m[i].shape()) {
            throw std::runtime_error("checkpoint optimizer moment shape mismatch for " + params[i]->name);
        }
    }
    s.sampling_rng = rng_from_string(j.at("sampling_rng").get<std::string>());
    s.shuffle_rng = rng_from_string(j.at("shuffle_rng").get<std::string>());
    s.window = reward::MistakeWindow(j.at("window_k").get<std::size_t>());
    s.epoch = j.at("epoch").get<std::size_t>();
    s.updates = j.at("updates").get<std::uint64_t>();
    return s;
}

void TrainerState::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << to_json().dump() << '\n';
}

TrainerState TrainerState::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

}  // namespace tabppo::rl
