// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/data.hpp"
#include "pathforget/rng.hpp"
#include "pathforget/tensor.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace pathforget::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) {
        v = rng.uniform(lo, hi);
    }
    return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

/// Small random dataset with the given labels cycling 0..classes-1.
inline Dataset tiny_dataset(std::size_t count, std::uint64_t seed, std::size_t rows = 28, std::size_t cols = 28) {
    Rng rng(seed);
    Dataset ds;
    ds.rows = rows;
    ds.cols = cols;
    ds.pixels.resize(count * rows * cols);
    ds.labels.resize(count);
    for (auto& p : ds.pixels) {
        p = static_cast<std::uint8_t>(rng.below(256));
    }
    for (std::size_t i = 0; i < count; ++i) {
        ds.labels[i] = static_cast<std::uint8_t>(i % 10);
    }
    return ds;
}

/// Removes itself on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("pathforget-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace pathforget::testing
