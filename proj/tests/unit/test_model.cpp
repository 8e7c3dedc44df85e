// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/error.hpp"
#include "pathforget/model.hpp"
#include "pathforget/optim.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace pathforget;
using pathforget::testing::random_tensor;

namespace {

Batch random_batch(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Batch b{random_tensor({n, 28, 28, 1}, rng, 0.0, 1.0), std::vector<int>(n)};
    for (auto& l : b.labels) {
        l = static_cast<int>(rng.below(10));
    }
    return b;
}

double central_difference(const Model& model, const Batch& batch, std::size_t block, std::size_t index,
                          std::size_t head, double h) {
    std::vector<Tensor> p = model.parameters();
    const double keep = p[block][index];
    p[block][index] = keep + h;
    const double up = evaluate_loss(model.config(), p, batch, head);
    p[block][index] = keep - h;
    const double down = evaluate_loss(model.config(), p, batch, head);
    return (up - down) / (2.0 * h);
}

} // namespace

TEST_SUITE("model") {
    TEST_CASE("standard layout has the expected blocks and parameter count") {
        const auto blocks = block_layout(ModelConfig::standard(1));
        const std::vector<std::pair<std::string, Shape>> expected{
            {"conv1.weight", {3, 3, 1, 32}}, {"conv1.bias", {32}},  {"conv2.weight", {3, 3, 32, 32}},
            {"conv2.bias", {32}},            {"dense1.weight", {1568, 64}}, {"dense1.bias", {64}},
            {"dense2.weight", {64, 32}},     {"dense2.bias", {32}}, {"head0.weight", {32, 10}},
            {"head0.bias", {10}}};
        REQUIRE(blocks.size() == expected.size());
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            CHECK(blocks[i].name == expected[i].first);
            CHECK(blocks[i].shape == expected[i].second);
            CHECK(blocks[i].kind == (i % 2 == 0 ? ParamKind::Weight : ParamKind::Bias));
        }
        CHECK(blocks[8].head_id == std::optional<std::size_t>(0));
        CHECK_FALSE(blocks[6].head_id.has_value());

        const std::size_t by_hand = (9 * 32 + 32) + (9 * 32 * 32 + 32) + (1568 * 64 + 64) + (64 * 32 + 32) + (32 * 10 + 10);
        CHECK(by_hand == 112394);
        CHECK(Model::build(ModelConfig::standard(1), 0).parameter_count() == 112394);
        CHECK(Model::build(ModelConfig::standard(2), 0).parameter_count() == 112394 + 330);
        CHECK(Model::build(ModelConfig::standard(3), 0).parameter_count() == 112394 + 660);
    }

    TEST_CASE("invalid configurations are rejected") {
        CHECK_THROWS_AS(ModelConfig::standard(0).validate(), ValidationError);
        ModelConfig c = ModelConfig::standard(1);
        c.layers[0].units = 16;
        CHECK_THROWS_AS(c.validate(), ValidationError);
        CHECK_THROWS_AS(Model::build(ModelConfig::standard(1), 0).block_index("conv3.weight"), ValidationError);
    }

    TEST_CASE("initialization is seed-deterministic with zero biases") {
        const Model a = Model::build(ModelConfig::standard(2), 5);
        const Model b = Model::build(ModelConfig::standard(2), 5);
        const Model c = Model::build(ModelConfig::standard(2), 6);
        CHECK(a.parameters() == b.parameters());
        CHECK_FALSE(a.parameters() == c.parameters());
        for (std::size_t i = 0; i < a.blocks().size(); ++i) {
            if (a.blocks()[i].kind == ParamKind::Bias) {
                CHECK(a.parameters()[i] == Tensor(a.blocks()[i].shape));
            }
        }
    }

    TEST_CASE("initial loss is close to ln 10") {
        const Model m = Model::build(ModelConfig::standard(1), 1);
        const double loss = evaluate_loss(m.config(), m.parameters(), random_batch(64, 2), 0);
        CHECK(std::abs(loss - std::log(10.0)) < 0.3);
    }

    TEST_CASE("gradients match central differences on a random batch") {
        const Model m = Model::build(ModelConfig::standard(1), 3);
        const Batch batch = random_batch(4, 4);
        const LossGradient lg = gradients(m, batch, 0);
        Rng pick(5);
        for (std::size_t block = 0; block < m.blocks().size(); ++block) {
            for (int k = 0; k < 3; ++k) {
                const std::size_t idx = pick.below(m.parameters()[block].size());
                const double numeric = central_difference(m, batch, block, idx, 0, 1e-5);
                const double analytic = lg.gradient[block][idx];
                CHECK(std::abs(analytic - numeric) <= 1e-4 * std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
            }
        }
    }

    TEST_CASE("zero image gradients match central differences") {
        // Nonzero biases keep every unit off the ReLU kink.
        Model m = Model::build(ModelConfig::standard(1), 8);
        Rng rng(21);
        for (std::size_t i = 0; i < m.blocks().size(); ++i) {
            if (m.blocks()[i].kind == ParamKind::Bias) {
                m.parameters()[i] = random_tensor(m.blocks()[i].shape, rng, 0.05, 0.3);
            }
        }
        const Batch batch{Tensor({1, 28, 28, 1}), {4}};
        const LossGradient lg = gradients(m, batch, 0);
        const std::size_t conv1_w = m.block_index("conv1.weight");
        CHECK(lg.gradient[conv1_w] == Tensor(m.blocks()[conv1_w].shape));
        for (const char* name : {"conv2.bias", "dense1.bias", "dense2.weight", "head0.bias"}) {
            const std::size_t block = m.block_index(name);
            for (std::size_t idx : {std::size_t{0}, std::size_t{7}}) {
                const double numeric = central_difference(m, batch, block, idx, 0, 1e-5);
                CHECK(lg.gradient[block][idx] == doctest::Approx(numeric).epsilon(1e-5).scale(1e-6));
            }
        }
    }

    TEST_CASE("a duplicated example has the same mean gradient") {
        const Model m = Model::build(ModelConfig::standard(1), 9);
        const Batch one = random_batch(1, 10);
        Tensor twice_images({2, 28, 28, 1});
        std::copy(one.images.data().begin(), one.images.data().end(), twice_images.data().begin());
        std::copy(one.images.data().begin(), one.images.data().end(), twice_images.data().begin() + 784);
        const Batch twice{twice_images, {one.labels[0], one.labels[0]}};
        const LossGradient a = gradients(m, one, 0);
        const LossGradient b = gradients(m, twice, 0);
        CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
        for (std::size_t i = 0; i < a.gradient.size(); ++i) {
            CHECK(pathforget::testing::max_abs_diff(a.gradient[i], b.gradient[i]) < 1e-14);
        }
    }

    TEST_CASE("chunked evaluation equals a single pass") {
        const Model m = Model::build(ModelConfig::standard(1), 12);
        const Batch batch = random_batch(10, 13);
        const LossGradient whole = loss_and_gradient(m.config(), m.parameters(), batch, 0, 10);
        const LossGradient chunked = loss_and_gradient(m.config(), m.parameters(), batch, 0, 3);
        CHECK(whole.loss == doctest::Approx(chunked.loss).epsilon(1e-13));
        for (std::size_t i = 0; i < whole.gradient.size(); ++i) {
            CHECK(pathforget::testing::max_abs_diff(whole.gradient[i], chunked.gradient[i]) < 1e-13);
        }
        CHECK(evaluate_loss(m.config(), m.parameters(), batch, 0, 4) == doctest::Approx(whole.loss).epsilon(1e-13));
    }

    TEST_CASE("heads are isolated from each other") {
        const Model m = Model::build(ModelConfig::standard(2), 14);
        const Batch batch = random_batch(4, 15);
        const LossGradient g0 = gradients(m, batch, 0);
        const LossGradient g1 = gradients(m, batch, 1);
        for (std::size_t i = 0; i < m.blocks().size(); ++i) {
            const auto& head = m.blocks()[i].head_id;
            const Tensor zero(m.blocks()[i].shape);
            if (head == std::optional<std::size_t>(1)) {
                CHECK(g0.gradient[i] == zero);
                CHECK_FALSE(g1.gradient[i] == zero);
            }
            if (head == std::optional<std::size_t>(0)) {
                CHECK(g1.gradient[i] == zero);
                CHECK_FALSE(g0.gradient[i] == zero);
            }
        }
        CHECK_THROWS_AS(gradients(m, batch, 2), ValidationError);
    }

    TEST_CASE("train mode applies dropout, eval mode is deterministic") {
        const Model m = Model::build(ModelConfig::standard(1), 16);
        const Batch batch = random_batch(8, 17);
        Rng r1(1), r2(2);
        const double eval_a = forward_loss(m, batch, Mode::Eval, 0).loss();
        const double eval_b = forward_loss(m, batch, Mode::Eval, 0, &r1).loss();
        CHECK(eval_a == eval_b);
        const double train_a = forward_loss(m, batch, Mode::Train, 0, &r1).loss();
        const double train_b = forward_loss(m, batch, Mode::Train, 0, &r2).loss();
        CHECK(train_a != train_b);
    }

    TEST_CASE("a single example can be memorized") {
        Model m = Model::build(ModelConfig::standard(1), 18);
        const Batch batch = random_batch(1, 19);
        AdamState adam(AdamConfig{}, m.parameters());
        double loss = 0.0;
        for (int step = 0; step < 200; ++step) {
            const LossGradient lg = gradients(m, batch, 0);
            loss = lg.loss;
            adam.step(lg.gradient, m.parameters());
        }
        loss = evaluate_loss(m.config(), m.parameters(), batch, 0);
        CHECK(loss < 0.05);
        CHECK(evaluate_accuracy(m.config(), m.parameters(), batch, 0) == 1.0);
    }

    TEST_CASE("wrong input shapes are dimension errors") {
        const Model m = Model::build(ModelConfig::standard(1), 20);
        const Batch bad{Tensor({2, 14, 14, 1}), {0, 1}};
        CHECK_THROWS_AS(forward_loss(m, bad, Mode::Eval, 0), DimensionError);
        std::vector<Tensor> wrong = m.parameters();
        wrong[0] = Tensor({3, 3, 1, 16});
        Model copy = m;
        CHECK_THROWS_AS(copy.set_parameters(wrong), DimensionError);
    }
}
