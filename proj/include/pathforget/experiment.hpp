// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/attribution.hpp"
#include "pathforget/model.hpp"
#include "pathforget/optim.hpp"
#include "pathforget/scenario.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pathforget {

enum class TrackingWindow { Full, FirstEpoch };

std::string_view to_string(TrackingWindow w);
/// Accepts full, first-epoch.
TrackingWindow parse_window(std::string_view text);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 128;
    AdamConfig adam;
    TrackingWindow window = TrackingWindow::Full;

    void validate() const;
};

/// Emitted once per finished epoch.
struct Progress {
    std::size_t task = 0;
    std::size_t epoch = 0;
    std::size_t steps = 0;
    double train_loss = 0.0; // mean train-mode minibatch loss over the epoch
};

using ProgressFn = std::function<void(const Progress&)>;

/// Called after every optimizer update with the applied step.
using StepObserver = std::function<void(const StepDelta&, std::size_t epoch)>;

/// Minibatch Adam on one task with reshuffling every epoch. Optimizer state is
/// fresh for each call, so blocks a task never touches stay exactly still.
void train_task(Model& model, const Task& task, const TrainConfig& config, Rng& shuffle_rng, Rng& dropout_rng,
                const StepObserver& observer = {}, const ProgressFn& progress = {}, std::size_t task_index = 0);

struct RunResult {
    Model model;
    AttributionReport report;
    double accuracy_start = 0.0; // task-A accuracy on the evaluation set at the transition
    double accuracy_end = 0.0;   // same, at the end of the tracking window
};

/// Trains task A untracked, then task B with every update integrated against
/// the eval-mode task-A loss on a fixed subset of task A's test split.
RunResult run_with_attribution(const TaskSequence& sequence, const TrainConfig& train,
                               const PathIntegralConfig& path, std::uint64_t seed, const ProgressFn& progress = {});

struct MultiResult {
    Model model;
    std::vector<AttributionReport> reports; // one per path config, same order
    double accuracy_start = 0.0;
    double accuracy_end = 0.0;
};

/// One training trajectory integrated by several ledgers at once. All configs
/// must share the evaluation set size and seed. `on_task_b_step` sees every
/// task-B update, including those after a first-epoch window has closed.
MultiResult run_with_attributions(const TaskSequence& sequence, const TrainConfig& train,
                                  std::span<const PathIntegralConfig> paths, std::uint64_t seed,
                                  const ProgressFn& progress = {}, const StepObserver& on_task_b_step = {});

} // namespace pathforget
