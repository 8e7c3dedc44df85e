// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/error.hpp"
#include "pathforget/experiment.hpp"
#include "pathforget/verify.hpp"

#include <doctest.h>

using namespace pathforget;

namespace {

TaskSequence synthetic_itl(std::size_t train, std::size_t test) {
    TaskSequence seq{ScenarioKind::Itl, {}, 2};
    seq.tasks.push_back({"a", synthetic_digits(train, 1), synthetic_digits(test, 2, Split::Test), 0});
    seq.tasks.push_back({"b", invert_intensities(synthetic_digits(train, 3)),
                         invert_intensities(synthetic_digits(test, 4, Split::Test)), 1});
    return seq;
}

TrainConfig small_train(std::size_t epochs = 2) {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = 32;
    t.adam.lr = 0.01;
    return t;
}

PathIntegralConfig small_path(std::size_t substeps = 1) { return {Quadrature::Trapezoid, substeps, 64, 3}; }

} // namespace

TEST_SUITE("experiment") {
    TEST_CASE("window names") {
        CHECK(parse_window("full") == TrackingWindow::Full);
        CHECK(parse_window("first-epoch") == TrackingWindow::FirstEpoch);
        CHECK(to_string(TrackingWindow::FirstEpoch) == "first-epoch");
        CHECK_THROWS_AS(parse_window("last"), ValidationError);
        TrainConfig bad;
        bad.epochs = 0;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        bad = TrainConfig{};
        bad.batch_size = 0;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
    }

    TEST_CASE("training visits every example once per epoch, keeping the partial batch") {
        Model model = Model::build(ModelConfig::standard(1), 1);
        const Task task{"t", synthetic_digits(100, 5), synthetic_digits(10, 6, Split::Test), 0};
        Rng shuffle(1), dropout(2);
        std::size_t steps = 0;
        std::vector<Progress> progress;
        train_task(
            model, task, small_train(3), shuffle, dropout, [&](const StepDelta&, std::size_t) { ++steps; },
            [&](const Progress& p) { progress.push_back(p); });
        CHECK(steps == 3 * 4);
        REQUIRE(progress.size() == 3);
        CHECK(progress[2].epoch == 2);
        CHECK(progress[2].steps == 4);
        CHECK(progress[2].train_loss < progress[0].train_loss);
    }

    TEST_CASE("task-incremental heads are isolated during task B") {
        const TaskSequence seq = synthetic_itl(128, 64);
        const Model initial = Model::build(ModelConfig::standard(2), derive_seed(11, 1));
        const std::size_t head0_w = initial.block_index("head0.weight");
        const std::size_t head0_b = initial.block_index("head0.bias");
        bool head0_still = true;
        std::size_t b_steps = 0;
        const std::vector<PathIntegralConfig> paths{small_path()};
        const MultiResult r = run_with_attributions(seq, small_train(), paths, 11, {}, [&](const StepDelta& d, std::size_t) {
            ++b_steps;
            head0_still = head0_still && d.delta[head0_w] == Tensor(d.delta[head0_w].shape()) &&
                          d.delta[head0_b] == Tensor(d.delta[head0_b].shape());
        });
        CHECK(b_steps == 2 * 4);
        CHECK(head0_still);
        const AttributionReport& rep = r.reports[0];
        for (const auto& b : rep.blocks) {
            if (b.info.head_id == std::optional<std::size_t>(1)) {
                CHECK(b.sum == 0.0);
                CHECK(b.abs_sum == 0.0);
                CHECK(b.path_l1 > 0.0);
            }
            if (b.info.head_id == std::optional<std::size_t>(0)) {
                CHECK(b.path_l1 == 0.0);
                CHECK(b.sum == 0.0);
            }
        }
        CHECK(rep.steps == 8);
        CHECK(rep.relative_error < 0.1);
    }

    TEST_CASE("runs are deterministic per seed") {
        const TaskSequence seq = synthetic_inversion_sequence(96, 64, 3);
        const RunResult a = run_with_attribution(seq, small_train(1), small_path(), 5);
        const RunResult b = run_with_attribution(seq, small_train(1), small_path(), 5);
        const RunResult c = run_with_attribution(seq, small_train(1), small_path(), 6);
        CHECK(a.model.parameters() == b.model.parameters());
        CHECK(a.report.exact_delta == b.report.exact_delta);
        CHECK(a.report.approx_delta == b.report.approx_delta);
        for (std::size_t i = 0; i < a.report.blocks.size(); ++i) {
            CHECK(a.report.blocks[i].contributions == b.report.blocks[i].contributions);
        }
        CHECK(a.report.exact_delta != c.report.exact_delta);
        CHECK(a.accuracy_start == b.accuracy_start);
    }

    TEST_CASE("first-epoch window tracks only the first epoch of task B") {
        const TaskSequence seq = synthetic_inversion_sequence(96, 64, 4);
        TrainConfig train = small_train(3);
        train.window = TrackingWindow::FirstEpoch;
        std::size_t b_steps = 0;
        const std::vector<PathIntegralConfig> paths{small_path()};
        const MultiResult r =
            run_with_attributions(seq, train, paths, 2, {}, [&](const StepDelta&, std::size_t) { ++b_steps; });
        CHECK(b_steps == 9);
        CHECK(r.reports[0].steps == 3);
        CHECK(r.reports[0].gradient_evaluations == 4);
    }

    TEST_CASE("several ledgers integrate one trajectory") {
        const TaskSequence seq = synthetic_inversion_sequence(96, 64, 5);
        const std::vector<PathIntegralConfig> paths{small_path(1), small_path(4)};
        const MultiResult multi = run_with_attributions(seq, small_train(1), paths, 8);
        const RunResult single = run_with_attribution(seq, small_train(1), paths[1], 8);
        REQUIRE(multi.reports.size() == 2);
        CHECK(multi.reports[0].exact_delta == multi.reports[1].exact_delta);
        CHECK(multi.reports[1].exact_delta == single.report.exact_delta);
        CHECK(multi.reports[1].approx_delta == single.report.approx_delta);
        CHECK(multi.reports[1].gradient_evaluations == 1 + 4 * multi.reports[1].steps);

        const std::vector<PathIntegralConfig> mixed{small_path(1), {Quadrature::Trapezoid, 1, 32, 3}};
        CHECK_THROWS_AS(run_with_attributions(seq, small_train(1), mixed, 8), ConsistencyError);
        TaskSequence three = seq;
        three.tasks.push_back(seq.tasks[0]);
        CHECK_THROWS_AS(run_with_attribution(three, small_train(1), paths[0], 8), ValidationError);
    }
}
