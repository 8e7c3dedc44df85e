// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pathforget {

/// One optimizer update. `delta` is authoritative: the optimizer applies
/// exactly `after = before + delta` to every coordinate.
struct StepDelta {
    std::vector<Tensor> before;
    std::vector<Tensor> delta;

    /// Parameters after the step, recomputed from `before` and `delta`.
    std::vector<Tensor> after() const;
    bool is_zero() const;
};

/// Adds every delta onto `params` in order.
void apply_delta(std::span<Tensor> params, std::span<const Tensor> delta);

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// Adam with bias correction.
class AdamState {
public:
    AdamState(AdamConfig config, std::span<const Tensor> params);

    const AdamConfig& config() const noexcept { return config_; }
    std::uint64_t step_count() const noexcept { return t_; }
    const std::vector<Tensor>& first_moment() const noexcept { return m_; }
    const std::vector<Tensor>& second_moment() const noexcept { return v_; }

    /// Updates the moments, moves `params`, and returns the applied change.
    StepDelta step(std::span<const Tensor> grads, std::span<Tensor> params);

private:
    AdamConfig config_;
    std::uint64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

StepDelta adam_step(AdamState& state, std::span<const Tensor> grads, std::span<Tensor> params);

/// Plain gradient descent: delta = -lr * grad.
StepDelta sgd_step(double lr, std::span<const Tensor> grads, std::span<Tensor> params);

} // namespace pathforget
