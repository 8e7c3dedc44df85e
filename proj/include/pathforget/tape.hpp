// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/ops.hpp"
#include "pathforget/tensor.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

namespace pathforget {

class GradientTape;

/// Handle to a value recorded on a GradientTape.
class Var {
public:
    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    GradientTape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }

private:
    friend class GradientTape;
    Var(GradientTape* tape, std::size_t id) : tape_(tape), id_(id) {}

    GradientTape* tape_;
    std::size_t id_;
};

/// Records primitive operations during a forward pass for reverse-mode replay.
///
/// A tape is single-owner and pinned in memory: Vars refer back to it by address.
/// Recorded values never move once appended, so operations may keep references
/// to their operands for the backward pass.
class GradientTape {
public:
    /// Accumulates the gradient of one operation into its inputs' gradients.
    /// `input_grads[k]` is null when input k does not need a gradient.
    using BackwardFn = std::function<void(const Tensor& upstream, std::span<Tensor* const> input_grads)>;

    GradientTape() = default;
    GradientTape(const GradientTape&) = delete;
    GradientTape& operator=(const GradientTape&) = delete;

    /// A differentiable leaf. backward() returns one gradient per watched leaf, in watch order.
    Var watch(Tensor value);
    /// A leaf that never receives a gradient (inputs, labels-derived constants).
    Var constant(Tensor value);
    /// Appends a custom operation.
    Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

    const Tensor& value(const Var& v) const;
    bool requires_grad(const Var& v) const;

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t watched_count() const noexcept { return watched_.size(); }

    /// Gradients of a scalar `loss` w.r.t. every watched leaf.
    /// When `visit_order` is given it receives the ids of replayed operations.
    std::vector<Tensor> backward(const Var& loss, std::vector<std::size_t>* visit_order = nullptr) const;

private:
    struct Node {
        Tensor value;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        bool requires_grad = false;
    };

    void check_owned(const Var& v, const char* context) const;

    std::deque<Node> nodes_;
    std::vector<std::size_t> watched_;
};

std::vector<Tensor> backward(const GradientTape& tape, const Var& loss);

// Traced primitives. Every operand must live on the same tape.
Var matmul(const Var& a, const Var& b);
Var add_bias(const Var& x, const Var& bias);
Var conv2d(const Var& input, const Var& kernels, const Var& bias, std::size_t stride);
Var relu(const Var& x);
Var dropout(const Var& x, double rate, Mode mode, Rng& rng);
Var reshape(const Var& x, Shape shape);
Var softmax_cross_entropy(const Var& logits, std::span<const int> labels);
Var multiply(const Var& a, const Var& b);
Var sum(const Var& x);

} // namespace pathforget
