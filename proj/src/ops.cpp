// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/ops.hpp"

#include "pathforget/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace pathforget::ops {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
    return ConstMap(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MutMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
    return MutMap(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) {
        throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                             shape_string(t.shape()));
    }
}

} // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul lhs");
    require_rank(b, 2, "matmul rhs");
    if (a.extent(1) != b.extent(0)) {
        throw DimensionError("matmul: inner extents differ for " + shape_string(a.shape()) + " and " +
                             shape_string(b.shape()));
    }
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor c({m, n});
    as_matrix(c, m, n).noalias() = as_matrix(a, m, k) * as_matrix(b, k, n);
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul_tn lhs");
    require_rank(b, 2, "matmul_tn rhs");
    if (a.extent(0) != b.extent(0)) {
        throw DimensionError("matmul_tn: leading extents differ for " + shape_string(a.shape()) + " and " +
                             shape_string(b.shape()));
    }
    const std::size_t k = a.extent(0), m = a.extent(1), n = b.extent(1);
    Tensor c({m, n});
    as_matrix(c, m, n).noalias() = as_matrix(a, k, m).transpose() * as_matrix(b, k, n);
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul_nt lhs");
    require_rank(b, 2, "matmul_nt rhs");
    if (a.extent(1) != b.extent(1)) {
        throw DimensionError("matmul_nt: trailing extents differ for " + shape_string(a.shape()) + " and " +
                             shape_string(b.shape()));
    }
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(0);
    Tensor c({m, n});
    as_matrix(c, m, n).noalias() = as_matrix(a, m, k) * as_matrix(b, n, k).transpose();
    return c;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    require_rank(bias, 1, "bias");
    const std::size_t channels = bias.size();
    if (x.rank() == 0 || x.shape().back() != channels) {
        throw DimensionError("add_bias: " + shape_string(x.shape()) + " does not end in " +
                             shape_string(bias.shape()));
    }
    Tensor out = x;
    const std::size_t rows = x.size() / channels;
    as_matrix(out, rows, channels).rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.raw(), channels);
    return out;
}

Tensor sum_leading(const Tensor& x) {
    if (x.rank() == 0) {
        throw DimensionError("sum_leading: empty shape");
    }
    const std::size_t channels = x.shape().back();
    const std::size_t rows = x.size() / channels;
    Tensor out({channels});
    const double* src = x.raw();
    double* dst = out.raw();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < channels; ++c) {
            dst[c] += src[r * channels + c];
        }
    }
    return out;
}

ConvGeometry ConvGeometry::resolve(const Shape& input, const Shape& kernels, std::size_t stride) {
    if (stride == 0) {
        throw ValidationError("conv2d: stride must be at least 1");
    }
    if (kernels.size() != 4) {
        throw DimensionError("conv2d: kernels must be [Kh x Kw x Cin x Cout], got " + shape_string(kernels));
    }
    ConvGeometry g;
    if (input.size() == 4) {
        g.batch = input[0];
        g.in_h = input[1];
        g.in_w = input[2];
        g.in_c = input[3];
    } else if (input.size() == 3) {
        g.in_h = input[0];
        g.in_w = input[1];
        g.in_c = input[2];
    } else {
        throw DimensionError("conv2d: input must be [H x W x C] or [B x H x W x C], got " + shape_string(input));
    }
    g.k_h = kernels[0];
    g.k_w = kernels[1];
    g.out_c = kernels[3];
    if (kernels[2] != g.in_c) {
        throw DimensionError("conv2d: input " + shape_string(input) + " has " + std::to_string(g.in_c) +
                             " channels but kernels " + shape_string(kernels) + " expect " +
                             std::to_string(kernels[2]));
    }
    g.stride = stride;
    g.out_h = same_padded_extent(g.in_h, stride);
    g.out_w = same_padded_extent(g.in_w, stride);
    const std::size_t span_h = (g.out_h - 1) * stride + g.k_h;
    const std::size_t span_w = (g.out_w - 1) * stride + g.k_w;
    g.pad_top = span_h > g.in_h ? (span_h - g.in_h) / 2 : 0;
    g.pad_left = span_w > g.in_w ? (span_w - g.in_w) / 2 : 0;
    return g;
}

Tensor im2col(const Tensor& input, const ConvGeometry& g) {
    Tensor cols({g.output_pixels(), g.patch_size()});
    const double* src = input.raw();
    double* dst = cols.raw();
    const std::size_t row_stride = g.in_w * g.in_c;
    const std::size_t image_stride = g.in_h * row_stride;
    for (std::size_t b = 0; b < g.batch; ++b) {
        const double* image = src + b * image_stride;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                for (std::size_t ky = 0; ky < g.k_h; ++ky) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad_top);
                    for (std::size_t kx = 0; kx < g.k_w; ++kx, dst += g.in_c) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                        static_cast<std::ptrdiff_t>(g.pad_left);
                        if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) ||
                            ix >= static_cast<std::ptrdiff_t>(g.in_w)) {
                            continue; // zero padding; cols is zero-initialized
                        }
                        std::memcpy(dst, image + static_cast<std::size_t>(iy) * row_stride +
                                             static_cast<std::size_t>(ix) * g.in_c,
                                    g.in_c * sizeof(double));
                    }
                }
            }
        }
    }
    return cols;
}

void col2im_add(const Tensor& columns, const ConvGeometry& g, Tensor& input_grad) {
    const double* src = columns.raw();
    double* dst = input_grad.raw();
    const std::size_t row_stride = g.in_w * g.in_c;
    const std::size_t image_stride = g.in_h * row_stride;
    for (std::size_t b = 0; b < g.batch; ++b) {
        double* image = dst + b * image_stride;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                for (std::size_t ky = 0; ky < g.k_h; ++ky) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad_top);
                    for (std::size_t kx = 0; kx < g.k_w; ++kx, src += g.in_c) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                        static_cast<std::ptrdiff_t>(g.pad_left);
                        if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h) ||
                            ix >= static_cast<std::ptrdiff_t>(g.in_w)) {
                            continue;
                        }
                        double* px = image + static_cast<std::size_t>(iy) * row_stride +
                                     static_cast<std::size_t>(ix) * g.in_c;
                        for (std::size_t c = 0; c < g.in_c; ++c) {
                            px[c] += src[c];
                        }
                    }
                }
            }
        }
    }
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias, std::size_t stride) {
    const ConvGeometry g = ConvGeometry::resolve(input.shape(), kernels.shape(), stride);
    if (bias.rank() != 1 || bias.size() != g.out_c) {
        throw DimensionError("conv2d: bias " + shape_string(bias.shape()) + " does not match " +
                             std::to_string(g.out_c) + " output channels");
    }
    const Tensor cols = im2col(input, g);
    Tensor out = matmul(cols, kernels.reshaped({g.patch_size(), g.out_c}));
    out = add_bias(out, bias);
    if (input.rank() == 4) {
        return std::move(out).reshaped({g.batch, g.out_h, g.out_w, g.out_c});
    }
    return std::move(out).reshaped({g.out_h, g.out_w, g.out_c});
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data()) {
        v = v > 0.0 ? v : 0.0;
    }
    return out;
}

Tensor softmax(const Tensor& logits) {
    require_rank(logits, 2, "softmax");
    const std::size_t rows = logits.extent(0), cols = logits.extent(1);
    Tensor out = logits;
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.raw() + r * cols;
        const double peak = *std::max_element(row, row + cols);
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] = std::exp(row[c] - peak);
            total += row[c];
        }
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] /= total;
        }
    }
    return out;
}

double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    require_rank(logits, 2, "softmax_cross_entropy");
    const std::size_t rows = logits.extent(0), cols = logits.extent(1);
    if (labels.size() != rows) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                             shape_string(logits.shape()));
    }
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const int label = labels[r];
        if (label < 0 || static_cast<std::size_t>(label) >= cols) {
            throw ValidationError("softmax_cross_entropy: label " + std::to_string(label) + " outside [0, " +
                                  std::to_string(cols) + ")");
        }
        const double* row = logits.raw() + r * cols;
        const double peak = *std::max_element(row, row + cols);
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            sum += std::exp(row[c] - peak);
        }
        total += peak + std::log(sum) - row[label];
    }
    return total / static_cast<double>(rows);
}

void validate_dropout_rate(double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ValidationError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
}

Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
    validate_dropout_rate(rate);
    Tensor mask(shape);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& m : mask.data()) {
        m = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    return mask;
}

Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng) {
    validate_dropout_rate(rate);
    if (mode == Mode::Eval || rate == 0.0) {
        return x;
    }
    Tensor out = dropout_mask(x.shape(), rate, rng);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= x[i];
    }
    return out;
}

} // namespace pathforget::ops
