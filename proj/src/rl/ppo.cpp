#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "epoch_eval.hpp"
#include "tabppo/ops.hpp"
#include "tabppo/rl.hpp"

namespace tabppo::rl {

using num::Tensor;
using num::Var;

void PpoConfig::validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("ppo." + m); };
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) fail("clip_epsilon must be in (0, 1)");
    if (ppo_epochs < 1) fail("ppo_epochs must be >= 1");
    if (minibatch_size < 1) fail("minibatch_size must be >= 1");
    if (!(discount >= 0.0 && discount <= 1.0)) fail("discount must be in [0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must be in [0, 1]");
    if (!(value_loss_coef >= 0.0) || !std::isfinite(value_loss_coef)) fail("value_loss_coef must be >= 0");
    if (!(entropy_coef >= 0.0) || !std::isfinite(entropy_coef)) fail("entropy_coef must be >= 0");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be >= 0");
    if (!(max_grad_norm >= 0.0) || !std::isfinite(max_grad_norm)) fail("max_grad_norm must be >= 0");
    if (batch_size < 1) fail("batch_size must be >= 1");
}

void to_json(nlohmann::json& j, const PpoConfig& c) {
    j = {{"clip_epsilon", c.clip_epsilon},
         {"ppo_epochs", c.ppo_epochs},
         {"minibatch_size", c.minibatch_size},
         {"discount", c.discount},
         {"gae_lambda", c.gae_lambda},
         {"value_loss_coef", c.value_loss_coef},
         {"entropy_coef", c.entropy_coef},
         {"learning_rate", c.learning_rate},
         {"max_grad_norm", c.max_grad_norm},
         {"batch_size", c.batch_size},
         {"episode_length", c.episode_length},
         {"normalize_advantages", c.normalize_advantages}};
}

void from_json(const nlohmann::json& j, PpoConfig& c) {
    PpoConfig d;
    c.clip_epsilon = j.value("clip_epsilon", d.clip_epsilon);
    c.ppo_epochs = j.value("ppo_epochs", d.ppo_epochs);
    c.minibatch_size = j.value("minibatch_size", d.minibatch_size);
    c.discount = j.value("discount", d.discount);
    c.gae_lambda = j.value("gae_lambda", d.gae_lambda);
    c.value_loss_coef = j.value("value_loss_coef", d.value_loss_coef);
    c.entropy_coef = j.value("entropy_coef", d.entropy_coef);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.max_grad_norm = j.value("max_grad_norm", d.max_grad_norm);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.episode_length = j.value("episode_length", d.episode_length);
    c.normalize_advantages = j.value("normalize_advantages", d.normalize_advantages);
}

void to_json(nlohmann::json& j, const EpochMetrics& m) {
    j = {{"epoch", m.epoch},
         {"mean_reward", m.mean_reward},
         {"policy_loss", m.policy_loss},
         {"value_loss", m.value_loss},
         {"clip_fraction", m.clip_fraction},
         {"entropy", m.entropy},
         {"train_accuracy", m.train_accuracy},
         {"test_accuracy", m.test_accuracy},
         {"test_macro_f1", m.test_macro_f1}};
}

void from_json(const nlohmann::json& j, EpochMetrics& m) {
    m.epoch = j.at("epoch").get<std::size_t>();
    m.mean_reward = j.at("mean_reward").get<double>();
    m.policy_loss = j.at("policy_loss").get<double>();
    m.value_loss = j.at("value_loss").get<double>();
    m.clip_fraction = j.at("clip_fraction").get<double>();
    m.entropy = j.value("entropy", 0.0);
    m.train_accuracy = j.value("train_accuracy", 0.0);
    m.test_accuracy = j.value("test_accuracy", 0.0);
    m.test_macro_f1 = j.at("test_macro_f1").get<double>();
}

std::vector<Transition> collect_trajectory(const data::Batch& batch, const model::PolicyValueNet& net,
                                           const reward::RewardConfig& reward_cfg, reward::MistakeWindow& window,
                                           std::mt19937_64& rng, std::size_t episode_length) {
    num::Tape tape(false);
    auto out = const_cast<model::PolicyValueNet&>(net).forward(tape, batch);
    const Tensor& log_probs = out.log_probs.value();
    const Tensor& values = out.values.value();
    const std::size_t k = net.n_classes();
    const std::size_t len = episode_length == 0 ? batch.size : episode_length;

    std::vector<Transition> tr(batch.size);
    std::vector<double> probs(k);
    for (std::size_t i = 0; i < batch.size; ++i) {
        auto lp = log_probs.data().subspan(i * k, k);
        std::transform(lp.begin(), lp.end(), probs.begin(), [](double v) { return std::exp(v); });
        auto [action, sampled_lp] = model::sample_action(probs, rng);
        auto& t = tr[i];
        t.row = batch.rows[i];
        t.action = action;
        t.truth = batch.labels[i];
        t.old_log_prob = lp[action];
        t.value = values[i];
        t.reward = reward::total_reward(action, t.truth, probs[action], window, reward_cfg);
        t.terminal = (i + 1) % len == 0 || i + 1 == batch.size;
    }
    return tr;
}

namespace {

void gae_episode(std::span<Transition> ep, double discount, double gae_lambda, bool normalize) {
    double next_adv = 0.0;
    double next_value = 0.0;  // terminal bootstrap
    for (std::size_t i = ep.size(); i-- > 0;) {
        auto& t = ep[i];
        const double delta = t.reward + discount * next_value - t.value;
        t.advantage = delta + discount * gae_lambda * next_adv;
        t.return_target = t.advantage + t.value;
        next_adv = t.advantage;
        next_value = t.value;
    }
    if (!normalize || ep.size() < 2) return;
    double mean = 0.0;
    for (const auto& t : ep) mean += t.advantage;
    mean /= static_cast<double>(ep.size());
    double var = 0.0;
    for (const auto& t : ep) var += (t.advantage - mean) * (t.advantage - mean);
    const double sd = std::sqrt(var / static_cast<double>(ep.size()));
    for (auto& t : ep) t.advantage = (t.advantage - mean) / (sd + 1e-8);
}

}  // namespace

void compute_gae(std::span<Transition> transitions, double discount, double gae_lambda, bool normalize) {
    std::size_t start = 0;
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        if (transitions[i].terminal || i + 1 == transitions.size()) {
            gae_episode(transitions.subspan(start, i + 1 - start), discount, gae_lambda, normalize);
            start = i + 1;
        }
    }
}

double clipped_term(double ratio, double advantage, double eps) {
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    return std::min(ratio * advantage, clipped * advantage);
}

Var clipped_surrogate(Var ratio, const Tensor& advantages, double eps) {
    Var adv = ratio.tape->constant(advantages);
    Var unclipped = num::mul(ratio, adv);
    Var clipped = num::mul(num::clamp(ratio, 1.0 - eps, 1.0 + eps), adv);
    return num::mean(num::minimum(unclipped, clipped));
}

namespace {

std::string parameter_norms(const model::PolicyValueNet& net) {
    std::ostringstream os;
    os << "parameter norms:";
    for (const auto* p : net.parameters()) {
        double sq = 0.0;
        for (double v : p->value.data()) sq += v * v;
        os << ' ' << p->name << '=' << std::sqrt(sq);
    }
    return os.str();
}

}  // namespace

UpdateStats ppo_update(const data::Dataset& ds, std::span<const Transition> transitions, model::PolicyValueNet& net,
                       Adam& optimizer, const PpoConfig& cfg, std::mt19937_64& rng) {
    UpdateStats stats;
    if (transitions.empty()) return stats;
    const auto params = net.parameters();
    std::vector<std::size_t> order(transitions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t clipped_total = 0, seen = 0;

    for (std::size_t epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.minibatch_size) {
            const std::size_t n = std::min(cfg.minibatch_size, order.size() - start);
            std::vector<std::size_t> rows(n), actions(n);
            Tensor old_lp({n}), adv({n}), ret({n});
            for (std::size_t i = 0; i < n; ++i) {
                const auto& t = transitions[order[start + i]];
                rows[i] = t.row;
                actions[i] = t.action;
                old_lp[i] = t.old_log_prob;
                adv[i] = t.advantage;
                ret[i] = t.return_target;
            }
            const auto batch = data::make_batch(ds, rows);
            const std::size_t k = net.n_classes();

            try {
                num::Tape tape;
                auto out = net.forward(tape, batch);
                Var new_lp = num::pick(out.log_probs, actions);
                Var ratio = num::exp(num::sub(new_lp, tape.constant(old_lp)));
                Var policy_loss = num::scale(clipped_surrogate(ratio, adv, cfg.clip_epsilon), -1.0);
                Var value_loss = num::mean(num::square(num::sub(out.values, tape.constant(ret))));
                Var total = num::add(policy_loss, num::scale(value_loss, cfg.value_loss_coef));

                const auto& lp = out.log_probs.value();
                double entropy = 0.0;
                for (std::size_t i = 0; i < n * k; ++i) entropy -= std::exp(lp[i]) * lp[i];
                entropy /= static_cast<double>(n);
                if (cfg.entropy_coef > 0.0) {
                    Var neg_ent = num::scale(num::sum(num::mul(num::exp(out.log_probs), out.log_probs)),
                                             1.0 / static_cast<double>(n));
                    total = num::add(total, num::scale(neg_ent, cfg.entropy_coef));
                }

                std::size_t clipped = 0;
                double max_dev = 0.0;
                for (double r : ratio.value().data()) {
                    const double dev = std::abs(r - 1.0);
                    max_dev = std::max(max_dev, dev);
                    clipped += dev > cfg.clip_epsilon;
                }
                if (stats.minibatches == 0) {
                    stats.first_minibatch_clip_fraction = static_cast<double>(clipped) / static_cast<double>(n);
                    stats.first_minibatch_policy_loss = policy_loss.value().item();
                    stats.first_minibatch_max_ratio_deviation = max_dev;
                }

                net.zero_grad();
                tape.backward(total);
                const double norm = clip_grad_norm(params, cfg.max_grad_norm);
                if (!std::isfinite(norm)) throw num::NumericalError("non-finite gradient norm");
                optimizer.step(params);

                clipped_total += clipped;
                seen += n;
                stats.policy_loss += policy_loss.value().item();
                stats.value_loss += value_loss.value().item();
                stats.entropy += entropy;
                ++stats.minibatches;
            } catch (const num::NumericalError& e) {
                std::ostringstream os;
                os << "update " << optimizer.steps() + 1 << " (ppo epoch " << epoch + 1 << "): " << e.what() << "; "
                   << parameter_norms(net);
                throw TrainingAborted(os.str());
            }
        }
    }
    const auto mb = static_cast<double>(stats.minibatches);
    stats.policy_loss /= mb;
    stats.value_loss /= mb;
    stats.entropy /= mb;
    stats.clip_fraction = static_cast<double>(clipped_total) / static_cast<double>(seen);
    return stats;
}

std::vector<std::uint32_t> predict_dataset(const model::PolicyValueNet& net, const data::Dataset& ds,
                                           std::size_t batch_size) {
    std::vector<std::uint32_t> out;
    out.reserve(ds.rows);
    for (const auto& b : data::iterate_batches(ds, batch_size, std::nullopt)) {
        auto p = net.predict(b);
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

metrics::ClassReport evaluate_model(const model::PolicyValueNet& net, const data::Dataset& ds) {
    const auto pred = predict_dataset(net, ds);
    return metrics::evaluate(ds.labels, pred, ds.schema->labels);
}

namespace {

double accuracy_of(const model::PolicyValueNet& net, const data::Dataset& ds) {
    if (ds.rows == 0) return 0.0;
    const auto pred = predict_dataset(net, ds);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == ds.labels[i];
    return static_cast<double>(hits) / static_cast<double>(ds.rows);
}

}  // namespace

void finish_epoch(EpochMetrics& m, const model::PolicyValueNet& net, const data::Dataset& train,
                  const data::Dataset* test) {
    m.train_accuracy = accuracy_of(net, train);
    if (test && test->rows > 0) {
        const auto r = evaluate_model(net, *test);
        m.test_accuracy = r.accuracy;
        m.test_macro_f1 = r.macro_f1;
    }
}

std::vector<EpochMetrics> train_ppo(const data::Dataset& train, TrainerState& state, const PpoConfig& ppo_cfg,
                                    const reward::RewardConfig& reward_cfg, std::size_t epochs,
                                    const data::Dataset* test, const EpochCallback& on_epoch) {
    ppo_cfg.validate();
    reward_cfg.validate();
    if (train.rows == 0) throw std::invalid_argument("training set is empty");
    state.optimizer.set_learning_rate(ppo_cfg.learning_rate);
    state.window = reward::MistakeWindow(reward_cfg.window_k);
    std::vector<EpochMetrics> log;
    while (state.epoch < epochs) {
        const std::size_t epoch = state.epoch + 1;
        state.window.reset();
        const auto batches = data::iterate_batches(train, ppo_cfg.batch_size, state.shuffle_rng());
        EpochMetrics m;
        m.epoch = epoch;
        double reward_sum = 0.0;
        std::size_t reward_n = 0, mb_total = 0;
        double clip_weighted = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            auto tr = collect_trajectory(batches[b], state.net, reward_cfg, state.window, state.sampling_rng,
                                         ppo_cfg.episode_length);
            for (const auto& t : tr) reward_sum += t.reward;
            reward_n += tr.size();
            compute_gae(tr, ppo_cfg.discount, ppo_cfg.gae_lambda, ppo_cfg.normalize_advantages);
            UpdateStats s;
            try {
                s = ppo_update(train, tr, state.net, state.optimizer, ppo_cfg, state.shuffle_rng);
            } catch (const TrainingAborted& e) {
                throw TrainingAborted("epoch " + std::to_string(epoch) + " batch " + std::to_string(b + 1) + ": " +
                                      e.what());
            }
            state.updates += s.minibatches;
            const auto w = static_cast<double>(s.minibatches);
            m.policy_loss += s.policy_loss * w;
            m.value_loss += s.value_loss * w;
            m.entropy += s.entropy * w;
            clip_weighted += s.clip_fraction * w;
            mb_total += s.minibatches;
        }
        const auto w = static_cast<double>(std::max<std::size_t>(mb_total, 1));
        m.policy_loss /= w;
        m.value_loss /= w;
        m.entropy /= w;
        m.clip_fraction = clip_weighted / w;
        m.mean_reward = reward_sum / static_cast<double>(reward_n);
        finish_epoch(m, state.net, train, test);
        state.epoch = epoch;
        log.push_back(m);
        if (on_epoch) on_epoch(m, state);
    }
    return log;
}

}  // namespace tabppo::rl
