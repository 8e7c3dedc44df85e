// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/data.hpp"
#include "pathforget/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pathforget {

/// Ten-class toy images: class c lights a fixed 6x6 patch plus uniform noise.
/// Needs no downloads, so self-checks run anywhere.
Dataset synthetic_digits(std::size_t count, std::uint64_t seed, Split split = Split::Train);

/// Synthetic stand-in for the intensity-inversion scenario.
TaskSequence synthetic_inversion_sequence(std::size_t train_count, std::size_t test_count, std::uint64_t seed);

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;     // the measured error
    double threshold = 0.0; // pass if value <= threshold
    std::string detail;
};

/// Central finite differences against backprop for the full model in eval mode
/// on a random batch. Coordinates are spread evenly across all blocks; a draw
/// whose ±h interval flips any ReLU is replaced by another from the same block.
/// Error per coordinate: |analytic - numeric| / max(|analytic|, |numeric|, floor).
CheckResult check_gradients(std::uint64_t seed, std::size_t batch = 8, std::size_t coordinates = 200,
                            double h = 1e-5, double floor = 1e-6, double tolerance = 1e-4);

/// Trapezoid attribution on ½ Σ a_i θ_i² along a random multi-step path, against
/// the closed-form per-coordinate change ½ a_i (θ_end² - θ_start²). `value` is
/// the relative error of the total; per-coordinate errors are absolute.
CheckResult check_quadratic(std::uint64_t seed, std::size_t coordinates = 64, std::size_t steps = 50,
                            double tolerance = 1e-12, double coordinate_tolerance = 1e-10);

/// Attribution error for doubling trapezoid substep counts on one synthetic
/// trajectory. `value` is the worst ratio between an error and the one two
/// doublings coarser. Passes when every quadrupling of the substep count at
/// least halves the error, unless the coarser error is already at or below
/// `noise_floor`.
CheckResult check_quadrature_convergence(std::uint64_t seed, std::vector<std::size_t> substeps = {1, 2, 4, 8},
                                         double noise_floor = 1e-9);

} // namespace pathforget
