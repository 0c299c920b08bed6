#include "gazebench/optimizer.hpp"

#include "gazebench/errors.hpp"

#include <cmath>

namespace gazebench::optim {

void adamw_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                const AdamWConfig& config) {
    if (params.size() != grads.size()) throw ShapeMismatch("adamw parameter/gradient size mismatch");
    if (state.m.empty() && state.v.empty() && state.step == 0) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeMismatch("adamw state does not match parameter count");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) {
            throw NonFiniteGradient("gradient " + std::to_string(i) + " is not finite");
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(config.beta1, t);
    const double bc2 = 1.0 - std::pow(config.beta2, t);
    const double decay = 1.0 - config.lr * config.weight_decay;

    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] = params[i] * decay - config.lr * (m_hat / (std::sqrt(v_hat) + config.eps));
    }
}

} // namespace gazebench::optim
