// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/experiment.hpp"

#include "pathforget/data.hpp"
#include "pathforget/error.hpp"

#include <numeric>

namespace pathforget {

std::string_view to_string(TrackingWindow w) { return w == TrackingWindow::Full ? "full" : "first-epoch"; }

TrackingWindow parse_window(std::string_view text) {
    if (text == "full") {
        return TrackingWindow::Full;
    }
    if (text == "first-epoch") {
        return TrackingWindow::FirstEpoch;
    }
    throw ValidationError("unknown tracking window '" + std::string(text) + "' (expected full or first-epoch)");
}

void TrainConfig::validate() const {
    if (epochs == 0) {
        throw ValidationError("training needs at least one epoch");
    }
    if (batch_size == 0) {
        throw ValidationError("batch size must be positive");
    }
    adam.validate();
}

void train_task(Model& model, const Task& task, const TrainConfig& config, Rng& shuffle_rng, Rng& dropout_rng,
                const StepObserver& observer, const ProgressFn& progress, std::size_t task_index) {
    config.validate();
    const std::size_t n = task.train.size();
    if (n == 0) {
        throw ValidationError("task '" + task.name + "' has no training examples");
    }
    AdamState adam(config.adam, model.parameters());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(std::span(order));
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
            const std::size_t end = std::min(n, begin + config.batch_size);
            const Batch batch = make_batch(task.train, std::span(order).subspan(begin, end - begin));
            const ForwardPass pass = forward_loss(model, batch, Mode::Train, task.head_id, &dropout_rng);
            const std::vector<Tensor> grads = pass.gradients();
            const StepDelta step = adam.step(grads, model.parameters());
            loss_sum += pass.loss();
            ++steps;
            if (observer) {
                observer(step, epoch);
            }
        }
        if (progress) {
            progress(Progress{task_index, epoch, steps, loss_sum / static_cast<double>(steps)});
        }
    }
}

MultiResult run_with_attributions(const TaskSequence& sequence, const TrainConfig& train,
                                  std::span<const PathIntegralConfig> paths, std::uint64_t seed,
                                  const ProgressFn& progress, const StepObserver& on_task_b_step) {
    if (sequence.tasks.size() != 2) {
        throw ValidationError("attribution runs need exactly two tasks, got " +
                              std::to_string(sequence.tasks.size()));
    }
    if (paths.empty()) {
        throw ValidationError("at least one path-integral configuration is required");
    }
    train.validate();
    for (const PathIntegralConfig& p : paths) {
        p.validate();
        if (p.eval_set_size != paths.front().eval_set_size || p.eval_set_seed != paths.front().eval_set_seed) {
            throw ConsistencyError("path-integral configurations must share one evaluation set");
        }
    }
    const Task& task_a = sequence.tasks[0];
    const Task& task_b = sequence.tasks[1];

    const ModelConfig config = ModelConfig::standard(sequence.head_count);
    Model model = Model::build(config, derive_seed(seed, 1));
    Rng shuffle_rng(derive_seed(seed, 2));
    Rng dropout_rng(derive_seed(seed, 3));

    train_task(model, task_a, train, shuffle_rng, dropout_rng, {}, progress, 0);

    const EvalSet eval_set =
        EvalSet::draw(task_a.test, paths.front().eval_set_size, derive_seed(paths.front().eval_set_seed, 4));
    const ModelLossField field(config, eval_set, task_a.head_id);
    std::vector<AttributionLedger> ledgers;
    for (const PathIntegralConfig& p : paths) {
        ledgers.push_back(begin_tracking(model.blocks(), model.parameters(), field, p));
    }
    const double accuracy_start = evaluate_accuracy(config, model.parameters(), eval_set.batch(), task_a.head_id);

    std::vector<AttributionReport> reports;
    double accuracy_end = 0.0;
    bool closed = false;
    const auto close = [&] {
        for (const AttributionLedger& ledger : ledgers) {
            reports.push_back(finalize(ledger, model.parameters(), field));
        }
        accuracy_end = evaluate_accuracy(config, model.parameters(), eval_set.batch(), task_a.head_id);
        closed = true;
    };
    const StepObserver observe = [&](const StepDelta& step, std::size_t epoch) {
        if (!closed) {
            for (AttributionLedger& ledger : ledgers) {
                record_step(ledger, step, field);
            }
        }
        if (on_task_b_step) {
            on_task_b_step(step, epoch);
        }
    };
    const ProgressFn on_epoch = [&](const Progress& p) {
        if (!closed && train.window == TrackingWindow::FirstEpoch && p.epoch == 0) {
            close();
        }
        if (progress) {
            progress(p);
        }
    };
    train_task(model, task_b, train, shuffle_rng, dropout_rng, observe, on_epoch, 1);
    if (!closed) {
        close();
    }
    return MultiResult{std::move(model), std::move(reports), accuracy_start, accuracy_end};
}

RunResult run_with_attribution(const TaskSequence& sequence, const TrainConfig& train,
                               const PathIntegralConfig& path, std::uint64_t seed, const ProgressFn& progress) {
    MultiResult result = run_with_attributions(sequence, train, std::span(&path, 1), seed, progress);
    return RunResult{std::move(result.model), std::move(result.reports.front()), result.accuracy_start,
                     result.accuracy_end};
}

} // namespace pathforget
