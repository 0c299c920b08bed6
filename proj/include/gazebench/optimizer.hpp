#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gazebench::optim {

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    friend bool operator==(const AdamWConfig&, const AdamWConfig&) = default;
};

struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

// One decoupled-weight-decay Adam update with bias correction:
//   theta <- theta * (1 - lr*wd) - lr * m_hat / (sqrt(v_hat) + eps)
// Fresh (empty) state is sized on first use. Throws NonFiniteGradient.
void adamw_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                const AdamWConfig& config);

} // namespace gazebench::optim
