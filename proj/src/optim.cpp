// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/optim.hpp"

#include "pathforget/error.hpp"

#include <cmath>

namespace pathforget {
namespace {

void check_shapes(std::span<const Tensor> grads, std::span<const Tensor> params, const char* context) {
    if (grads.size() != params.size()) {
        throw ValidationError(std::string(context) + ": " + std::to_string(grads.size()) + " gradients for " +
                              std::to_string(params.size()) + " parameter blocks");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].shape() != params[i].shape()) {
            throw ValidationError(std::string(context) + ": block " + std::to_string(i) + " gradient " +
                                  shape_string(grads[i].shape()) + " does not match parameter " +
                                  shape_string(params[i].shape()));
        }
    }
}

} // namespace

std::vector<Tensor> StepDelta::after() const {
    std::vector<Tensor> out = before;
    apply_delta(out, delta);
    return out;
}

bool StepDelta::is_zero() const {
    for (const Tensor& d : delta) {
        for (double v : d.data()) {
            if (v != 0.0) {
                return false;
            }
        }
    }
    return true;
}

void apply_delta(std::span<Tensor> params, std::span<const Tensor> delta) {
    if (params.size() != delta.size()) {
        throw ConsistencyError("delta has " + std::to_string(delta.size()) + " blocks, parameters have " +
                               std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        require_same_shape(params[i], delta[i], "apply_delta");
        double* p = params[i].raw();
        const double* d = delta[i].raw();
        for (std::size_t k = 0; k < params[i].size(); ++k) {
            p[k] += d[k];
        }
    }
}

void AdamConfig::validate() const {
    if (!(lr >= 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
        throw ValidationError("Adam needs lr >= 0, beta1 and beta2 in [0, 1), epsilon > 0");
    }
}

AdamState::AdamState(AdamConfig config, std::span<const Tensor> params) : config_(config) {
    config_.validate();
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor& p : params) {
        m_.emplace_back(p.shape());
        v_.emplace_back(p.shape());
    }
}

StepDelta AdamState::step(std::span<const Tensor> grads, std::span<Tensor> params) {
    check_shapes(grads, params, "adam_step");
    check_shapes(m_, params, "adam_step moments");
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));

    StepDelta step;
    step.before.assign(params.begin(), params.end());
    step.delta.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor delta(params[i].shape());
        const double* g = grads[i].raw();
        double* m = m_[i].raw();
        double* v = v_[i].raw();
        double* d = delta.raw();
        for (std::size_t k = 0; k < delta.size(); ++k) {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            d[k] = -config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
        step.delta.push_back(std::move(delta));
    }
    apply_delta(params, step.delta);
    return step;
}

StepDelta adam_step(AdamState& state, std::span<const Tensor> grads, std::span<Tensor> params) {
    return state.step(grads, params);
}

StepDelta sgd_step(double lr, std::span<const Tensor> grads, std::span<Tensor> params) {
    check_shapes(grads, params, "sgd_step");
    StepDelta step;
    step.before.assign(params.begin(), params.end());
    step.delta.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor delta(params[i].shape());
        for (std::size_t k = 0; k < delta.size(); ++k) {
            delta[k] = -lr * grads[i][k];
        }
        step.delta.push_back(std::move(delta));
    }
    apply_delta(params, step.delta);
    return step;
}

} // namespace pathforget
