// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/error.hpp"
#include "pathforget/ops.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace pathforget;
using pathforget::testing::max_abs_diff;
using pathforget::testing::random_tensor;

namespace {

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                s += a.at(i, p) * b.at(p, j);
            }
            c.at(i, j) = s;
        }
    }
    return c;
}

Tensor transpose(const Tensor& a) {
    Tensor t({a.extent(1), a.extent(0)});
    for (std::size_t i = 0; i < a.extent(0); ++i) {
        for (std::size_t j = 0; j < a.extent(1); ++j) {
            t.at(j, i) = a.at(i, j);
        }
    }
    return t;
}

/// Direct same-padded cross-correlation over NHWC input.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride) {
    const std::size_t B = x.extent(0), H = x.extent(1), W = x.extent(2), C = x.extent(3);
    const std::size_t K = w.extent(0), O = w.extent(3);
    const std::size_t oh = (H + stride - 1) / stride, ow = (W + stride - 1) / stride;
    const std::size_t pad_h = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>((oh - 1) * stride + K) -
                                                              static_cast<std::ptrdiff_t>(H));
    const std::size_t pad_w = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>((ow - 1) * stride + K) -
                                                              static_cast<std::ptrdiff_t>(W));
    const std::ptrdiff_t top = static_cast<std::ptrdiff_t>(pad_h / 2), left = static_cast<std::ptrdiff_t>(pad_w / 2);
    Tensor y({B, oh, ow, O});
    for (std::size_t n = 0; n < B; ++n)
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j)
                for (std::size_t o = 0; o < O; ++o) {
                    double s = b[o];
                    for (std::size_t ki = 0; ki < K; ++ki)
                        for (std::size_t kj = 0; kj < K; ++kj) {
                            const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i * stride + ki) - top;
                            const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(j * stride + kj) - left;
                            if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(H) ||
                                c >= static_cast<std::ptrdiff_t>(W)) {
                                continue;
                            }
                            for (std::size_t ch = 0; ch < C; ++ch) {
                                s += x[((n * H + static_cast<std::size_t>(r)) * W + static_cast<std::size_t>(c)) * C +
                                       ch] *
                                     w[((ki * K + kj) * C + ch) * O + o];
                            }
                        }
                    y[((n * oh + i) * ow + j) * O + o] = s;
                }
    return y;
}

} // namespace

TEST_SUITE("ops") {
    TEST_CASE("matmul matches a triple-loop oracle") {
        Rng rng(1);
        for (auto [m, k, n] : {std::array<std::size_t, 3>{1, 1, 1}, {3, 5, 2}, {17, 33, 9}, {64, 128, 32}}) {
            const Tensor a = random_tensor({m, k}, rng);
            const Tensor b = random_tensor({k, n}, rng);
            CHECK(max_abs_diff(ops::matmul(a, b), naive_matmul(a, b)) < 1e-12);
            CHECK(max_abs_diff(ops::matmul_tn(transpose(a), b), naive_matmul(a, b)) < 1e-12);
            CHECK(max_abs_diff(ops::matmul_nt(a, transpose(b)), naive_matmul(a, b)) < 1e-12);
        }
    }

    TEST_CASE("matmul identity and zero") {
        Rng rng(2);
        const Tensor a = random_tensor({4, 4}, rng);
        Tensor eye({4, 4});
        for (std::size_t i = 0; i < 4; ++i) {
            eye.at(i, i) = 1.0;
        }
        CHECK(ops::matmul(a, eye) == a);
        CHECK(ops::matmul(a, Tensor({4, 3})) == Tensor({4, 3}));
        CHECK_THROWS_AS(ops::matmul(a, Tensor({3, 3})), DimensionError);
    }

    TEST_CASE("add_bias and sum_leading are adjoint") {
        const Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
        const Tensor b = Tensor::from({3}, {10, 20, 30});
        CHECK(ops::add_bias(x, b) == Tensor::from({2, 3}, {11, 22, 33, 14, 25, 36}));
        CHECK(ops::sum_leading(x) == Tensor::from({3}, {5, 7, 9}));
        CHECK_THROWS_AS(ops::add_bias(x, Tensor({2})), DimensionError);
    }

    TEST_CASE("same-padded output extents follow ceil(n / stride)") {
        for (std::size_t n = 1; n <= 32; ++n) {
            for (std::size_t s = 1; s <= 3; ++s) {
                const auto g = ops::ConvGeometry::resolve({1, n, n, 1}, {3, 3, 1, 2}, s);
                CHECK(g.out_h == (n + s - 1) / s);
                CHECK(g.out_w == (n + s - 1) / s);
            }
        }
        const Tensor w({3, 3, 1, 32});
        const Tensor b({32});
        const Tensor h1 = ops::conv2d(Tensor({2, 28, 28, 1}), w, b, 2);
        CHECK(h1.shape() == Shape{2, 14, 14, 32});
        const Tensor h2 = ops::conv2d(h1, Tensor({3, 3, 32, 32}), b, 2);
        CHECK(h2.shape() == Shape{2, 7, 7, 32});
        CHECK(element_count(h2.shape()) / 2 == 1568);
    }

    TEST_CASE("conv2d matches a direct loop oracle") {
        Rng rng(4);
        for (std::size_t stride : {1, 2, 3}) {
            for (std::size_t extent : {5, 7, 8}) {
                const Tensor x = random_tensor({2, extent, extent, 3}, rng);
                const Tensor w = random_tensor({3, 3, 3, 4}, rng);
                const Tensor b = random_tensor({4}, rng);
                CHECK(max_abs_diff(ops::conv2d(x, w, b, stride), naive_conv(x, w, b, stride)) < 1e-12);
            }
        }
    }

    TEST_CASE("zero kernel yields the bias everywhere") {
        Rng rng(5);
        const Tensor x = random_tensor({1, 6, 6, 2}, rng);
        const Tensor b = Tensor::from({3}, {0.5, -1.0, 2.0});
        const Tensor y = ops::conv2d(x, Tensor({3, 3, 2, 3}), b, 2);
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(y[i] == b[i % 3]);
        }
    }

    TEST_CASE("conv2d rejects bad geometry") {
        CHECK_THROWS_AS(ops::conv2d(Tensor({1, 4, 4, 2}), Tensor({3, 3, 1, 1}), Tensor({1}), 1), DimensionError);
        CHECK_THROWS_AS(ops::conv2d(Tensor({1, 4, 4, 1}), Tensor({3, 3, 1, 1}), Tensor({1}), 0), ValidationError);
    }

    TEST_CASE("relu") {
        const Tensor y = ops::relu(Tensor::from({5}, {-2, -0.0, 0, 0.5, 3}));
        CHECK(y == Tensor::from({5}, {0, 0, 0, 0.5, 3}));
    }

    TEST_CASE("softmax cross-entropy reference values") {
        const std::vector<int> label{3};
        CHECK(ops::softmax_cross_entropy(Tensor({1, 10}), label) == doctest::Approx(std::log(10.0)).epsilon(1e-15));

        Tensor confident({1, 10});
        confident[3] = 50.0;
        CHECK(ops::softmax_cross_entropy(confident, label) < 1e-20);

        Tensor huge({1, 10});
        huge[3] = 1e4;
        huge[7] = -1e4;
        CHECK(std::isfinite(ops::softmax_cross_entropy(huge, label)));
        CHECK_THROWS_AS(ops::softmax_cross_entropy(Tensor({1, 10}), std::vector<int>{10}), ValidationError);
        CHECK_THROWS_AS(ops::softmax_cross_entropy(Tensor({2, 10}), label), DimensionError);
    }

    TEST_CASE("softmax cross-entropy matches a direct oracle on random logits") {
        Rng rng(6);
        const Tensor logits = random_tensor({16, 10}, rng, -5.0, 5.0);
        std::vector<int> labels(16);
        double expected = 0.0;
        for (std::size_t r = 0; r < 16; ++r) {
            labels[r] = static_cast<int>(rng.below(10));
            double z = 0.0;
            for (std::size_t c = 0; c < 10; ++c) {
                z += std::exp(logits.at(r, c));
            }
            expected += std::log(z) - logits.at(r, static_cast<std::size_t>(labels[r]));
        }
        expected /= 16.0;
        CHECK(ops::softmax_cross_entropy(logits, labels) == doctest::Approx(expected).epsilon(1e-13));

        const Tensor p = ops::softmax(logits);
        for (std::size_t r = 0; r < 16; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < 10; ++c) {
                CHECK(p.at(r, c) > 0.0);
                s += p.at(r, c);
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
        }
    }

    TEST_CASE("dropout is identity in eval mode and at rate zero") {
        Rng rng(7);
        const Tensor x = random_tensor({4, 8}, rng);
        CHECK(ops::dropout(x, 0.2, Mode::Eval, rng) == x);
        CHECK(ops::dropout(x, 0.0, Mode::Train, rng) == x);
        CHECK_THROWS_AS(ops::validate_dropout_rate(1.0), ValidationError);
        CHECK_THROWS_AS(ops::validate_dropout_rate(-0.1), ValidationError);
    }

    TEST_CASE("dropout mask keeps a binomial fraction scaled by 1/(1-p)") {
        const double p = 0.2;
        const std::size_t n = 100000;
        Rng rng(8);
        const Tensor mask = ops::dropout_mask({n}, p, rng);
        std::size_t dropped = 0;
        for (double m : mask.data()) {
            if (m == 0.0) {
                ++dropped;
            } else {
                REQUIRE(m == doctest::Approx(1.0 / (1.0 - p)).epsilon(1e-15));
            }
        }
        const double sigma = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
        CHECK(std::abs(static_cast<double>(dropped) - static_cast<double>(n) * p) < 3.0 * sigma);

        Rng again(8);
        CHECK(ops::dropout_mask({n}, p, again) == mask);
    }
}
