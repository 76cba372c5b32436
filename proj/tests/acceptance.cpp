// Acceptance runner: one PASS/FAIL line per criterion, exit code 1 if any fails.
// `acceptance --only 2,5` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "fixtures.hpp"
#include "gae_oracle.hpp"
#include "gradcheck.hpp"
#include "metrics_oracle.hpp"
#include "op_catalog.hpp"
#include "tabppo/cli.hpp"
#include "tabppo/ops.hpp"
#include "tabppo/random.hpp"
#include "test_util.hpp"

using namespace tabppo;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail = what;
            pass = false;
        }
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// ---------------------------------------------------------------- 1

Outcome gradients() {
    Outcome o;
    double worst = 0.0;
    std::size_t checked = 0, net_checked = 0, kinks = 0;
    for (const auto& op : testing::op_catalog()) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto r = op.run(seed);
            checked += r.checked;
            worst = std::max(worst, r.max_rel_error);
            o.require(r.max_rel_error < 1e-4, op.name + " seed " + std::to_string(seed) + ": " + r.worst);
        }
    }
    for (auto kind : {model::EncoderKind::transformer, model::EncoderKind::mlp}) {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            auto d = testing::tiny_data(3, 2, {6, 6, 6}, seed + 1);
            auto net = testing::small_net(*d.schema, seed, kind);
            auto batch = testing::first_rows(d.train, 3);
            std::mt19937_64 rng(seed);
            std::vector<std::size_t> labels(3);
            for (auto& l : labels) l = rng() % 3;
            auto r = testing::grad_check(
                net.parameters(),
                [&](num::Tape& t) {
                    auto out = net.forward(t, batch);
                    auto nll = num::sum(num::pick(out.log_probs, labels));
                    return num::add(nll, num::scale(num::sum(num::square(out.values)), 0.5));
                },
                1e-5, 6, seed, true);
            checked += r.checked;
            net_checked += r.checked;
            kinks += r.kinks;
            worst = std::max(worst, r.max_rel_error);
            o.require(r.max_rel_error < 1e-4, model::to_string(kind) + " net seed " + std::to_string(seed) + ": " +
                                                  r.worst);
        }
    }
    o.require(kinks * 100 <= net_checked, std::to_string(kinks) + " kink entries skipped of " +
                                              std::to_string(net_checked + kinks));
    if (o.pass) {
        o.detail = std::to_string(checked) + " entries, worst relative error " + fmt("%.2e", worst) + ", " +
                   std::to_string(kinks) + " ReLU-kink entries skipped";
    }
    return o;
}

// ---------------------------------------------------------------- 2

struct RewardCase {
    reward::RewardConfig cfg;
    std::uint32_t pred, truth;
    double p;
    std::size_t wrong_in_window, right_in_window;
    double expected;
};

reward::RewardConfig cfg_with(double alpha, double beta, double gamma_w, double delta, std::size_t k,
                              double r_correct = 1.0, double r_wrong = 1.0, double lambda = 1.0) {
    reward::RewardConfig c;
    c.alpha = alpha;
    c.beta = beta;
    c.gamma_w = gamma_w;
    c.delta = delta;
    c.window_k = k;
    c.r_correct = r_correct;
    c.r_wrong = r_wrong;
    c.lambda = lambda;
    return c;
}

std::vector<RewardCase> reward_table() {
    const reward::RewardConfig def;
    return {
        {def, 1, 1, 1.0, 0, 0, 1.5},
        {cfg_with(0, 0, 0, 0.5, 8), 0, 3, 0.7, 5, 0, 0.0},
        {cfg_with(1, 0.5, 0.2, 1.0, 4), 0, 1, 1.0, 4, 0, -1.0 - 0.5 - 0.2 * std::log(5.0)},
        {cfg_with(0, 0, 1, 1.0, 4), 2, 2, 0.3, 1, 0, -std::log(2.0)},
        {def, 0, 0, 0.8, 0, 0, 1.0 + 0.5 * 0.8},
        {def, 0, 1, 0.8, 0, 0, -1.0 - 0.5 * 0.8},
        {def, 3, 3, 0.25, 3, 10, 1.0 + 0.125 - 0.2 * 0.5 * std::log(4.0)},
        {def, 3, 2, 0.6, 32, 0, -1.0 - 0.3 - 0.1 * std::log(33.0)},
        {def, 1, 1, 0.0, 0, 0, 1.0},
        {def, 4, 0, 0.0, 0, 0, -1.0},
        {cfg_with(2, 1, 0.5, 0.5, 16), 1, 1, 0.9, 2, 5, 2.0 + 0.9 - 0.25 * std::log(3.0)},
        {cfg_with(2, 1, 0.5, 0.5, 16), 1, 0, 0.9, 2, 5, -2.0 - 0.9 - 0.25 * std::log(3.0)},
        {cfg_with(1, 0, 0, 0.5, 8, 3.0, 2.0), 5, 5, 0.5, 0, 0, 3.0},
        {cfg_with(1, 0, 0, 0.5, 8, 3.0, 2.0), 5, 4, 0.5, 0, 0, -2.0},
        {cfg_with(0, 1, 0, 0.5, 8, 1.0, 1.0, 2.0), 0, 0, 0.4, 0, 0, 0.8},
        {cfg_with(0, 1, 0, 0.5, 8, 1.0, 1.0, 2.0), 0, 2, 0.4, 0, 0, -0.8},
        {cfg_with(0, 0, 1, 2.0, 1), 0, 1, 0.5, 1, 0, -2.0 * std::log(2.0)},
        {cfg_with(0, 0, 1, 2.0, 1), 0, 0, 0.5, 0, 1, 0.0},
        {cfg_with(0.5, 0.25, 1.5, 0.1, 64), 7, 7, 0.99, 63, 1, 0.5 + 0.2475 - 0.15 * std::log(64.0)},
        {cfg_with(3, 0, 0, 0.5, 2), 2, 1, 0.1, 2, 0, -3.0},
    };
}

reward::RewardConfig random_reward_config(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 3.0);
    return cfg_with(u(rng), u(rng), u(rng), u(rng), std::uniform_int_distribution<std::size_t>(1, 64)(rng), u(rng),
                    u(rng), u(rng));
}

reward::MistakeWindow filled(std::size_t k, std::size_t wrong, std::size_t right) {
    reward::MistakeWindow w(k);
    for (std::size_t i = 0; i < right; ++i) w.push(true);
    for (std::size_t i = 0; i < wrong; ++i) w.push(false);
    return w;
}

Outcome rewards() {
    Outcome o;
    const auto table = reward_table();
    double worst = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& c = table[i];
        auto w = filled(c.cfg.window_k, c.wrong_in_window, c.right_in_window);
        const double got = reward::total_reward(c.pred, c.truth, c.p, w, c.cfg);
        worst = std::max(worst, std::abs(got - c.expected));
        o.require(std::abs(got - c.expected) <= 1e-12,
                  "case " + std::to_string(i) + fmt(": got %.15g expected %.15g", got, c.expected));
    }
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const auto c = random_reward_config(rng);
        const std::uint32_t pred = rng() % 4, truth = rng() % 4;
        const double p = unit(rng);
        const std::size_t wrong = rng() % (c.window_k + 1);
        auto w1 = filled(c.window_k, wrong, 0), w2 = filled(c.window_k, wrong, 0);
        const double r1 = reward::total_reward(pred, truth, p, w1, c);
        auto c2 = c;
        c2.alpha *= 2.0;
        c2.beta *= 2.0;
        c2.gamma_w *= 2.0;
        const double r2 = reward::total_reward(pred, truth, p, w2, c2);
        o.require(r2 == 2.0 * r1, "linearity config " + std::to_string(i));
        o.require(std::abs(r1) <= c.bound() + 1e-12, "bound config " + std::to_string(i));
    }
    if (o.pass) o.detail = "20 cases, max error " + fmt("%.1e", worst) + "; 10000 linearity/bound configs";
    return o;
}

// ---------------------------------------------------------------- 3

Outcome gae() {
    Outcome o;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        std::mt19937_64 rng(seed);
        auto ep = testing::random_episode(rng, 64);
        const double discount = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const auto oracle = testing::monte_carlo_advantages(ep, discount);
        rl::compute_gae(ep, discount, 1.0, false);
        for (std::size_t t = 0; t < ep.size(); ++t) {
            const double err = std::abs(ep[t].advantage - oracle[t]);
            worst = std::max(worst, err);
            o.require(err < 1e-9, "seed " + std::to_string(seed) + " step " + std::to_string(t));
        }
    }
    if (o.pass) o.detail = "1000 episodes, max error " + fmt("%.1e", worst);
    return o;
}

// ---------------------------------------------------------------- 4

Outcome ppo_mechanics() {
    Outcome o;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto d = testing::tiny_data(3, 2, {20, 20, 20}, seed + 1);
        std::mt19937_64 init(derive_seed(seed, "init"));
        auto net = model::PolicyValueNet(testing::small_config(seed % 2 ? model::EncoderKind::mlp
                                                                         : model::EncoderKind::transformer),
                                         model::InputLayout::from_schema(*d.schema), init);
        auto state = rl::TrainerState::create(std::move(net), 3e-3, 32, seed);
        auto tr = rl::collect_trajectory(testing::first_rows(d.train, 36), state.net, reward::RewardConfig{},
                                         state.window, state.sampling_rng);
        rl::compute_gae(tr, 0.99, 0.95, true);
        rl::PpoConfig cfg;
        cfg.minibatch_size = 12;
        cfg.learning_rate = 3e-3;
        auto stats = rl::ppo_update(d.train, tr, state.net, state.optimizer, cfg, state.shuffle_rng);
        worst_ratio = std::max(worst_ratio, stats.first_minibatch_max_ratio_deviation);
        o.require(stats.first_minibatch_max_ratio_deviation < 1e-12, "ratio deviation seed " + std::to_string(seed));
        o.require(stats.first_minibatch_clip_fraction == 0.0, "clip fraction seed " + std::to_string(seed));
    }
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ratio(0.0, 3.0), adv(-3.0, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        num::Tensor r({16}), a({16});
        for (std::size_t i = 0; i < 16; ++i) {
            r[i] = ratio(rng);
            a[i] = adv(rng);
            o.require(rl::clipped_term(r[i], a[i], 0.2) <= r[i] * a[i], "clipped term above unclipped");
        }
        num::Tape tape(false);
        const double surrogate = rl::clipped_surrogate(tape.constant(r), a, 0.2).value().item();
        double unclipped = 0.0;
        for (std::size_t i = 0; i < 16; ++i) unclipped += r[i] * a[i];
        o.require(surrogate <= unclipped / 16.0 + 1e-15, "surrogate above unclipped, trial " + std::to_string(trial));
    }
    if (o.pass) {
        o.detail = "20 first updates, max |ratio-1| " + fmt("%.1e", worst_ratio) +
                   ", clip fraction 0; 16000 surrogate terms bounded";
    }
    return o;
}

// ---------------------------------------------------------------- 5

Outcome metrics_oracle() {
    Outcome o;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t k = 2 + rng() % 7;
        const std::size_t n = 1 + rng() % 300;
        std::vector<std::uint32_t> truth(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = static_cast<std::uint32_t>(rng() % k);
            pred[i] = rng() % 3 == 0 ? truth[i] : static_cast<std::uint32_t>(rng() % k);
        }
        const auto cm = metrics::confusion(truth, pred, k);
        const auto rep = metrics::report(cm, {});
        const auto ref = testing::naive_report(truth, pred, k);
        bool same = rep.accuracy == ref.accuracy && rep.macro_f1 == ref.macro_f1 && rep.weighted_f1 == ref.weighted_f1;
        for (std::size_t c = 0; c < k; ++c) {
            same = same && rep.classes[c].precision == ref.precision[c] && rep.classes[c].recall == ref.recall[c] &&
                   rep.classes[c].f1 == ref.f1[c] && rep.classes[c].support == ref.support[c];
        }
        o.require(same, "report differs from oracle, seed " + std::to_string(seed));
    }
    const double f1 = metrics::f1_score(0.8661, 0.9108);
    o.require(std::abs(f1 - 0.8879) <= 5e-4, fmt("mitm F1 %.5f vs 0.8879", f1));
    if (o.pass) o.detail = "1000 label/prediction sets exact; mitm F1 " + fmt("%.5f", f1) + " vs 0.8879";
    return o;
}

// ---------------------------------------------------------------- 6, 7, 8

/// PPO settings used by the learning experiments. Classification steps are
/// i.i.d., so no credit is passed to later samples.
rl::PpoConfig experiment_ppo() {
    rl::PpoConfig c;
    c.discount = 0.0;
    c.learning_rate = 3e-3;
    c.entropy_coef = 0.01;
    return c;
}

model::EncoderConfig experiment_encoder() {
    model::EncoderConfig e;
    e.embed_dim = 16;
    e.ffn_hidden = 64;
    return e;
}

cli::RunConfig experiment_config(std::vector<std::size_t> per_class, double separation, std::uint64_t seed,
                                 std::size_t epochs, const std::string& out) {
    cli::RunConfig c;
    data::SyntheticSpec spec;
    spec.samples_per_class = std::move(per_class);
    spec.class_separation = separation;
    spec.seed = seed;
    c.data.synthetic = spec;
    c.encoder = experiment_encoder();
    c.ppo = experiment_ppo();
    c.ce.learning_rate = 1e-3;
    c.epochs = epochs;
    c.seed = seed;
    c.out = out;
    return c;
}

std::ostream& null_stream() {
    static std::ostringstream sink;
    sink.str("");
    return sink;
}

Outcome learning_sanity() {
    Outcome o;
    testing::TempDir dir;
    std::string detail;
    for (auto trainer : {cli::TrainerKind::ppo, cli::TrainerKind::ce}) {
        auto cfg = experiment_config({1000, 1000, 1000, 1000, 1000}, 4.0, 0, 10, (dir / to_string(trainer)).string());
        cfg.trainer = trainer;
        const auto result = cli::cmd_train(cfg, null_stream());
        std::size_t first = 0;
        double best = 0.0;
        for (const auto& m : result.log) {
            if (!first && m.test_accuracy >= 0.95) first = m.epoch;
            best = std::max(best, m.test_accuracy);
        }
        const std::string name = trainer == cli::TrainerKind::ppo ? "TT+PPO" : "TT+CE";
        o.require(result.report.accuracy >= 0.95, name + fmt(" final test accuracy %.4f", result.report.accuracy));
        detail += (detail.empty() ? "" : "; ") + name + fmt(" %.4f", result.report.accuracy) + " (>=0.95 from epoch " +
                  std::to_string(first) + ")";
    }
    if (o.pass) o.detail = detail;
    return o;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome rare_class() {
    Outcome o;
    testing::TempDir dir;
    std::vector<double> tt_rare, mlp_rare, tt_macro, mlp_macro;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (auto kind : {model::EncoderKind::transformer, model::EncoderKind::mlp}) {
            auto cfg = experiment_config({2000, 2000, 2000, 2000, 20}, 4.0, seed, 10,
                                         (dir / (model::to_string(kind) + std::to_string(seed))).string());
            cfg.encoder.kind = kind;
            const auto r = cli::cmd_train(cfg, null_stream()).report;
            const double rare = r.classes.back().f1;
            const bool tt = kind == model::EncoderKind::transformer;
            (tt ? tt_rare : mlp_rare).push_back(rare);
            (tt ? tt_macro : mlp_macro).push_back(r.macro_f1);
            std::cout << "    seed " << seed << ' ' << (tt ? "TT+PPO " : "MLP+PPO")
                      << fmt("  rare F1 %.4f  macro F1 %.4f", rare, r.macro_f1) << std::endl;
        }
    }
    const double tr = median(tt_rare), mr = median(mlp_rare), tm = median(tt_macro), mm = median(mlp_macro);
    o.detail = fmt("median rare F1 TT %.4f vs MLP %.4f", tr, mr) + fmt("; median macro F1 TT %.4f vs MLP %.4f", tm, mm);
    o.pass = tr > mr && tm > mm;
    return o;
}

Outcome determinism() {
    Outcome o;
    testing::TempDir dir;
    for (auto trainer : {cli::TrainerKind::ppo, cli::TrainerKind::ce}) {
        for (auto kind : {model::EncoderKind::transformer, model::EncoderKind::mlp}) {
            const std::string tag = cli::to_string(trainer) + "_" + model::to_string(kind);
            auto cfg = experiment_config({60, 60, 60, 5}, 2.0, 11, 2, (dir / (tag + "_a")).string());
            cfg.trainer = trainer;
            cfg.encoder = testing::small_config(kind);
            cfg.ppo.batch_size = 64;
            cfg.ppo.minibatch_size = 32;
            cli::cmd_train(cfg, null_stream());
            auto again = cli::load_run_config(dir / (tag + "_a") / "config.json");
            again.out = (dir / (tag + "_b")).string();
            cli::cmd_train(again, null_stream());
            for (const char* f : {"metrics.jsonl", "checkpoint.json", "report.kv"}) {
                const auto a = testing::read_file(dir / (tag + "_a") / f);
                o.require(!a.empty() && a == testing::read_file(dir / (tag + "_b") / f), tag + ": " + f + " differs");
            }
        }
    }
    data::SyntheticSpec spec;
    spec.seed = 3;
    cli::cmd_generate(spec, dir / "gen_a", null_stream());
    cli::cmd_generate(spec, dir / "gen_b", null_stream());
    o.require(testing::read_file(dir / "gen_a" / "data.csv") == testing::read_file(dir / "gen_b" / "data.csv"),
              "generate output differs");
    if (o.pass) o.detail = "train re-runs (ppo/ce x transformer/mlp) and generate byte-identical";
    return o;
}

// ---------------------------------------------------------------- 9

Outcome permutation_invariance() {
    Outcome o;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto d = testing::tiny_data(5, 3, {6, 6, 6}, seed + 1);
        auto net = testing::small_net(*d.schema, seed);
        num::Tape tape(false);
        auto toks = net.encoder().tokens(tape, testing::first_rows(d.train, 4));
        const auto reference = net.encoder().encode_tokens(tape, toks).value();
        std::mt19937_64 rng(seed);
        for (int trial = 0; trial < 10; ++trial) {
            std::shuffle(toks.begin(), toks.end(), rng);
            const auto permuted = net.encoder().encode_tokens(tape, toks).value();
            for (std::size_t i = 0; i < reference.size(); ++i) {
                worst = std::max(worst, std::abs(reference[i] - permuted[i]));
            }
        }
    }
    o.require(worst < 1e-9, fmt("max deviation %.2e", worst));
    if (o.pass) o.detail = "500 permutations, max deviation " + fmt("%.1e", worst);
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::vector<int> only;
    app.add_option("--only", only, "criterion numbers to run")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {1, "finite-difference gradients", 60, gradients},
        {2, "reward exactness", 0, rewards},
        {3, "GAE oracle", 0, gae},
        {4, "PPO mechanics", 0, ppo_mechanics},
        {5, "metrics oracle", 0, metrics_oracle},
        {6, "learning sanity", 300, learning_sanity},
        {7, "rare-class ordering", 900, rare_class},
        {8, "determinism", 0, determinism},
        {9, "encoder permutation invariance", 0, permutation_invariance},
    };
    const std::set<int> selected(only.begin(), only.end());
    bool all = true;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_seconds > 0 && secs > c.budget_seconds) {
            o.pass = false;
            o.detail += fmt(" (over the %.0f s budget)", c.budget_seconds);
        }
        all = all && o.pass;
        std::printf("%s  %d. %s [%.1f s]: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
