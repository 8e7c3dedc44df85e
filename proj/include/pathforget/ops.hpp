// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/rng.hpp"
#include "pathforget/tensor.hpp"

#include <cstddef>
#include <span>

// Untraced numeric kernels. The traced versions in tape.hpp are built on these.
namespace pathforget {

enum class Mode { Train, Eval };

namespace ops {

/// [m x k] * [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// aᵀ * b for a [k x m], b [k x n].
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// a * bᵀ for a [m x k], b [n x k].
Tensor matmul_nt(const Tensor& a, const Tensor& b);

/// Adds `bias` (length C) along the last axis of `x`.
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// Sums every axis except the last: the gradient of add_bias w.r.t. its bias.
Tensor sum_leading(const Tensor& x);

/// Extent of a same-padded convolution output.
constexpr std::size_t same_padded_extent(std::size_t n, std::size_t stride) { return (n + stride - 1) / stride; }

/// Index arithmetic for a same-padded NHWC convolution.
///
/// Padding follows the usual "SAME" rule: total padding is whatever makes the
/// output extent ceil(n / stride), with the odd pixel going to the bottom/right.
struct ConvGeometry {
    std::size_t batch = 1;
    std::size_t in_h = 0, in_w = 0, in_c = 0;
    std::size_t k_h = 0, k_w = 0, out_c = 0;
    std::size_t stride = 1;
    std::size_t out_h = 0, out_w = 0;
    std::size_t pad_top = 0, pad_left = 0;

    /// `input` is [B x H x W x Cin] or [H x W x Cin]; `kernels` is [Kh x Kw x Cin x Cout].
    static ConvGeometry resolve(const Shape& input, const Shape& kernels, std::size_t stride);

    std::size_t patch_size() const { return k_h * k_w * in_c; }
    std::size_t output_pixels() const { return batch * out_h * out_w; }
};

/// Gathers receptive fields into a [B*H'*W' x Kh*Kw*Cin] matrix; padding reads as zero.
Tensor im2col(const Tensor& input, const ConvGeometry& g);
/// Scatter-adds patch gradients back onto an input-shaped gradient.
void col2im_add(const Tensor& columns, const ConvGeometry& g, Tensor& input_grad);

/// Cross-correlation with per-channel bias. Output keeps the input's rank.
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride);

Tensor relu(const Tensor& x);

/// Row-wise softmax of a [B x C] matrix, max-subtracted.
Tensor softmax(const Tensor& logits);

/// Mean over rows of -log softmax(logits)[label].
double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Inverted-dropout multiplier: 0 with probability `rate`, else 1/(1-rate).
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng);

/// Train mode applies a fresh mask; eval mode returns `x` unchanged.
Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng);

void validate_dropout_rate(double rate);

} // namespace ops
} // namespace pathforget
