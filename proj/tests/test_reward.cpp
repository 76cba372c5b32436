#include <cmath>
#include <random>

#include "doctest.h"
#include "tabppo/reward.hpp"

using namespace tabppo::reward;

namespace {

RewardConfig random_config(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 3.0);
    RewardConfig c;
    c.alpha = u(rng);
    c.beta = u(rng);
    c.gamma_w = u(rng);
    c.r_correct = u(rng);
    c.r_wrong = u(rng);
    c.lambda = u(rng);
    c.delta = u(rng);
    c.window_k = std::uniform_int_distribution<std::size_t>(1, 64)(rng);
    return c;
}

MistakeWindow window_with(std::size_t k, std::size_t wrong, std::size_t right = 0) {
    MistakeWindow w(k);
    for (std::size_t i = 0; i < right; ++i) w.push(true);
    for (std::size_t i = 0; i < wrong; ++i) w.push(false);
    return w;
}

}  // namespace

TEST_CASE("classification term") {
    RewardConfig c;
    CHECK(reward_cls(3, 3, c) == 1.0);
    CHECK(reward_cls(3, 5, c) == -1.0);
    c.r_correct = 2.0;
    CHECK(reward_cls(1, 1, c) == 2.0);
}

TEST_CASE("confidence term signs with correctness") {
    RewardConfig c;
    CHECK(reward_conf(2, 2, 0.9, c) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(reward_conf(2, 1, 0.9, c) == doctest::Approx(-0.9).epsilon(1e-15));
    CHECK(reward_conf(2, 2, 0.0, c) == 0.0);
    CHECK(reward_conf(2, 1, 0.0, c) == 0.0);
}

TEST_CASE("temporal term") {
    RewardConfig c;
    c.delta = 1.0;
    CHECK(reward_temp(MistakeWindow(4), c) == 0.0);
    CHECK(std::abs(reward_temp(window_with(4, 1), c) + std::log(2.0)) < 1e-15);
    for (std::size_t n = 0; n < 31; ++n) {
        CHECK(reward_temp(window_with(32, n + 1), c) < reward_temp(window_with(32, n), c));
    }
}

TEST_CASE("total reward examples") {
    RewardConfig c;
    MistakeWindow empty(c.window_k);
    CHECK(std::abs(total_reward(1, 1, 1.0, empty, c) - 1.5) < 1e-12);

    RewardConfig zero;
    zero.alpha = zero.beta = zero.gamma_w = 0.0;
    MistakeWindow w = window_with(8, 5);
    CHECK(total_reward(0, 3, 0.7, w, zero) == 0.0);

    RewardConfig d;
    d.delta = 1.0;
    d.window_k = 4;
    MistakeWindow full = window_with(4, 4);
    const double expected = -1.0 - 0.5 - 0.2 * std::log(5.0);
    CHECK(std::abs(total_reward(0, 1, 1.0, full, d) - expected) < 1e-12);
    CHECK(std::abs(expected - (-1.8219)) < 1e-4);
}

TEST_CASE("current outcome joins the window after scoring") {
    RewardConfig c;
    c.alpha = c.beta = 0.0;
    c.gamma_w = 1.0;
    c.delta = 1.0;
    MistakeWindow w(3);
    CHECK(total_reward(0, 1, 0.5, w, c) == 0.0);
    CHECK(w.count_wrong() == 1);
    CHECK(std::abs(total_reward(0, 1, 0.5, w, c) + std::log(2.0)) < 1e-15);
    CHECK(w.count_wrong() == 2);
}

TEST_CASE("window evicts the oldest flag") {
    MistakeWindow w(3);
    w.push(false);
    w.push(true);
    w.push(true);
    CHECK(w.count_wrong() == 1);
    w.push(true);
    CHECK(w.size() == 3);
    CHECK(w.count_wrong() == 0);
    w.push(false);
    w.reset();
    CHECK(w.size() == 0);
    CHECK(w.count_wrong() == 0);
    CHECK_THROWS_AS(MistakeWindow(0), std::invalid_argument);
}

TEST_CASE("window count matches a naive recount") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 20)(rng);
        MistakeWindow w(k);
        std::vector<bool> history;
        for (int step = 0; step < 60; ++step) {
            const bool ok = std::bernoulli_distribution(0.6)(rng);
            w.push(ok);
            history.push_back(ok);
            std::size_t naive = 0;
            const std::size_t from = history.size() > k ? history.size() - k : 0;
            for (std::size_t i = from; i < history.size(); ++i) naive += history[i] ? 0 : 1;
            REQUIRE(w.count_wrong() == naive);
            REQUIRE(w.size() <= k);
        }
    }
}

TEST_CASE("linear in the three weights") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10000; ++i) {
        RewardConfig c = random_config(rng);
        const std::uint32_t pred = rng() % 4, truth = rng() % 4;
        const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const std::size_t wrong = rng() % (c.window_k + 1);
        MistakeWindow a = window_with(c.window_k, wrong);
        MistakeWindow b = window_with(c.window_k, wrong);
        const double r1 = total_reward(pred, truth, p, a, c);
        RewardConfig c2 = c;
        c2.alpha *= 2.0;
        c2.beta *= 2.0;
        c2.gamma_w *= 2.0;
        const double r2 = total_reward(pred, truth, p, b, c2);
        REQUIRE(r2 == 2.0 * r1);
    }
}

TEST_CASE("bounded by the weight budget") {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 10000; ++i) {
        RewardConfig c = random_config(rng);
        const std::uint32_t pred = rng() % 3, truth = rng() % 3;
        const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        MistakeWindow w = window_with(c.window_k, rng() % (c.window_k + 1));
        REQUIRE(std::abs(total_reward(pred, truth, p, w, c)) <= c.bound() + 1e-12);
    }
}

TEST_CASE("temporal penalty ignores mistake positions") {
    RewardConfig c;
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<bool> flags(c.window_k);
        for (auto&& f : flags) f = std::bernoulli_distribution(0.3)(rng);
        auto shuffled = flags;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        MistakeWindow a(c.window_k), b(c.window_k);
        for (bool f : flags) a.push(f);
        for (bool f : shuffled) b.push(f);
        REQUIRE(reward_temp(a, c) == reward_temp(b, c));
    }
}

TEST_CASE("more confident correct predictions earn more") {
    RewardConfig c;
    for (double q = 0.0; q < 0.99; q += 0.05) {
        MistakeWindow a(c.window_k), b(c.window_k);
        CHECK(total_reward(2, 2, q + 0.01, a, c) > total_reward(2, 2, q, b, c));
    }
}

TEST_CASE("config json round trip and validation") {
    RewardConfig c;
    c.alpha = 0.3;
    c.window_k = 7;
    nlohmann::json j = c;
    for (const char* key : {"alpha", "beta", "gamma_w", "r_correct", "r_wrong", "lambda", "delta", "window_k"}) {
        CHECK(j.contains(key));
    }
    auto back = j.get<RewardConfig>();
    CHECK(back.alpha == 0.3);
    CHECK(back.window_k == 7);
    c.delta = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.delta = 0.5;
    c.window_k = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
