// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/scenario.hpp"

#include "pathforget/error.hpp"
#include "pathforget/fetch.hpp"

namespace pathforget {

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::Itl:
        return "itl";
    case ScenarioKind::IdlPermute:
        return "idl-permute";
    case ScenarioKind::IdlInvert:
        return "idl-invert";
    case ScenarioKind::IclSplit:
        return "icl";
    }
    return "unknown";
}

ScenarioKind parse_scenario(std::string_view text) {
    for (ScenarioKind kind :
         {ScenarioKind::Itl, ScenarioKind::IdlPermute, ScenarioKind::IdlInvert, ScenarioKind::IclSplit}) {
        if (text == to_string(kind)) {
            return kind;
        }
    }
    throw ValidationError("unknown scenario '" + std::string(text) + "' (expected itl, idl-permute, idl-invert, icl)");
}

void ScenarioSpec::validate() const {
    if (kind == ScenarioKind::IclSplit) {
        if (class_groups.size() < 2) {
            throw ValidationError("class-incremental scenario needs at least two class groups");
        }
        std::vector<bool> used(10, false);
        for (const ClassGroup& group : class_groups) {
            if (group.empty()) {
                throw ValidationError("class groups must not be empty");
            }
            for (int label : group) {
                if (label < 0 || label > 9 || used[static_cast<std::size_t>(label)]) {
                    throw ValidationError("class groups must be disjoint subsets of 0..9");
                }
                used[static_cast<std::size_t>(label)] = true;
            }
        }
    }
    if (train_limit.has_value() && *train_limit == 0) {
        throw ValidationError("train limit must be positive");
    }
}

namespace {

Dataset limited(Dataset ds, const std::optional<std::size_t>& limit) {
    if (!limit.has_value()) {
        return ds;
    }
    return head(ds, *limit);
}

std::string group_name(const ClassGroup& group) {
    std::string name = "classes";
    for (int label : group) {
        name += "-" + std::to_string(label);
    }
    return name;
}

} // namespace

TaskSequence build_sequence(const ScenarioSpec& spec, const Dataset& mnist_train, const Dataset& mnist_test,
                            const Dataset* fashion_train, const Dataset* fashion_test) {
    spec.validate();
    TaskSequence seq{spec.kind, {}, 1};
    switch (spec.kind) {
    case ScenarioKind::Itl:
        if (fashion_train == nullptr || fashion_test == nullptr) {
            throw UsageError("task-incremental scenario needs FashionMNIST");
        }
        seq.head_count = 2;
        seq.tasks.push_back({"mnist", limited(mnist_train, spec.train_limit), mnist_test, 0});
        seq.tasks.push_back({"fashion_mnist", limited(*fashion_train, spec.train_limit), *fashion_test, 1});
        break;
    case ScenarioKind::IdlPermute: {
        const PixelPermutation perm = random_permutation(mnist_train.pixels_per_image(), spec.permutation_seed);
        Dataset train = limited(mnist_train, spec.train_limit);
        seq.tasks.push_back({"mnist", train, mnist_test, 0});
        seq.tasks.push_back({"mnist-permuted", permute_pixels(train, perm), permute_pixels(mnist_test, perm), 0});
        break;
    }
    case ScenarioKind::IdlInvert: {
        Dataset train = limited(mnist_train, spec.train_limit);
        seq.tasks.push_back({"mnist", train, mnist_test, 0});
        seq.tasks.push_back({"mnist-inverted", invert_intensities(train), invert_intensities(mnist_test), 0});
        break;
    }
    case ScenarioKind::IclSplit: {
        const auto train_parts = split_by_classes(mnist_train, spec.class_groups);
        const auto test_parts = split_by_classes(mnist_test, spec.class_groups);
        for (std::size_t g = 0; g < spec.class_groups.size(); ++g) {
            seq.tasks.push_back({group_name(spec.class_groups[g]), limited(train_parts[g], spec.train_limit),
                                 test_parts[g], 0});
        }
        break;
    }
    }
    return seq;
}

TaskSequence build_sequence(const ScenarioSpec& spec, const std::filesystem::path& data_dir) {
    spec.validate();
    const Dataset mnist_train = load_cached(Source::Mnist, Split::Train, data_dir);
    const Dataset mnist_test = load_cached(Source::Mnist, Split::Test, data_dir);
    if (spec.kind != ScenarioKind::Itl) {
        return build_sequence(spec, mnist_train, mnist_test);
    }
    const Dataset fashion_train = load_cached(Source::FashionMnist, Split::Train, data_dir);
    const Dataset fashion_test = load_cached(Source::FashionMnist, Split::Test, data_dir);
    return build_sequence(spec, mnist_train, mnist_test, &fashion_train, &fashion_test);
}

} // namespace pathforget
