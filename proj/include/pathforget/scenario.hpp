// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/data.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pathforget {

enum class ScenarioKind {
    Itl,        // MNIST then FashionMNIST, one head per task
    IdlPermute, // MNIST then pixel-permuted MNIST, shared head
    IdlInvert,  // MNIST then intensity-inverted MNIST, shared head
    IclSplit,   // MNIST class groups in sequence, shared 10-way head
};

std::string_view to_string(ScenarioKind kind);
/// Accepts itl, idl-permute, idl-invert, icl.
ScenarioKind parse_scenario(std::string_view text);

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::IclSplit;
    std::uint64_t permutation_seed = 0;
    std::vector<ClassGroup> class_groups = {{0, 1}, {2, 3}};
    /// Keep only the first N training examples of every task.
    std::optional<std::size_t> train_limit;

    void validate() const;
};

struct Task {
    std::string name;
    Dataset train;
    Dataset test;
    std::size_t head_id = 0;
};

struct TaskSequence {
    ScenarioKind kind;
    std::vector<Task> tasks;
    std::size_t head_count = 1;
};

/// Builds the task list from MNIST/FashionMNIST found under `data_dir`.
TaskSequence build_sequence(const ScenarioSpec& spec, const std::filesystem::path& data_dir);

/// Same, from already-loaded datasets. `fashion_*` is only read for ITL.
TaskSequence build_sequence(const ScenarioSpec& spec, const Dataset& mnist_train, const Dataset& mnist_test,
                            const Dataset* fashion_train = nullptr, const Dataset* fashion_test = nullptr);

} // namespace pathforget
