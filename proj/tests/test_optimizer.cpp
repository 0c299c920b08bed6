#include "gazebench/errors.hpp"
#include "gazebench/optimizer.hpp"
#include "gazebench/rng.hpp"

#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

using namespace gazebench;
using namespace gazebench::optim;

TEST_CASE("zero gradient without decay leaves parameters alone") {
    std::vector<double> p{1.0, -2.0, 3.5};
    const auto before = p;
    const std::vector<double> g(3, 0.0);
    OptimizerState s;
    AdamWConfig c;
    c.weight_decay = 0.0;
    for (int i = 0; i < 5; ++i) adamw_step(p, g, s, c);
    CHECK(p == before);
    CHECK(s.step == 5);
}

TEST_CASE("zero gradient with decay shrinks by exactly 1 - lr*wd") {
    std::vector<double> p{1.0, -2.0, 3.5};
    const std::vector<double> g(3, 0.0);
    OptimizerState s;
    AdamWConfig c;
    c.lr = 1e-2;
    c.weight_decay = 0.1;
    adamw_step(p, g, s, c);
    CHECK(p[0] == 1.0 * (1.0 - 1e-3));
    CHECK(p[1] == -2.0 * (1.0 - 1e-3));
    CHECK(p[2] == 3.5 * (1.0 - 1e-3));
}

TEST_CASE("first step on a scalar matches the hand-evaluated update") {
    std::vector<double> p{1.0};
    const std::vector<double> g{1.0};
    OptimizerState s;
    AdamWConfig c;
    c.weight_decay = 0.0;
    adamw_step(p, g, s, c);
    // m_hat = v_hat = 1
    CHECK(p[0] == doctest::Approx(1.0 - 1e-4 * 1.0 / (1.0 + 1e-8)).epsilon(1e-15));
    CHECK(s.m[0] == doctest::Approx(0.1));
    CHECK(s.v[0] == doctest::Approx(0.001));
}

TEST_CASE("a few steps agree with a straight-line reference") {
    Rng rng(3);
    std::vector<double> p(6);
    for (auto& v : p) v = rng.uniform(-1, 1);
    auto ref = p;
    std::vector<double> m(6, 0.0), v(6, 0.0);
    OptimizerState s;
    AdamWConfig c;
    c.lr = 3e-3;
    c.weight_decay = 0.05;
    for (int t = 1; t <= 10; ++t) {
        std::vector<double> g(6);
        for (auto& x : g) x = rng.uniform(-2, 2);
        adamw_step(p, g, s, c);
        for (std::size_t i = 0; i < 6; ++i) {
            m[i] = c.beta1 * m[i] + (1 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1 - c.beta2) * g[i] * g[i];
            const double mh = m[i] / (1 - std::pow(c.beta1, t));
            const double vh = v[i] / (1 - std::pow(c.beta2, t));
            ref[i] = ref[i] - c.lr * (mh / (std::sqrt(vh) + c.eps) + c.weight_decay * ref[i]);
        }
    }
    for (std::size_t i = 0; i < 6; ++i) CHECK(p[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("non-finite gradients are rejected before anything changes") {
    std::vector<double> p{1.0, 2.0};
    std::vector<double> g{0.5, std::numeric_limits<double>::quiet_NaN()};
    OptimizerState s;
    CHECK_THROWS_AS(adamw_step(p, g, s, {}), NonFiniteGradient);
    CHECK(p == std::vector<double>{1.0, 2.0});
    g[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(adamw_step(p, g, s, {}), NonFiniteGradient);
    CHECK_THROWS(adamw_step(p, std::vector<double>{1.0}, s, {}));
}
