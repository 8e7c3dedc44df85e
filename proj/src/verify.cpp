// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/verify.hpp"

#include "pathforget/attribution.hpp"
#include "pathforget/error.hpp"
#include "pathforget/experiment.hpp"
#include "pathforget/ops.hpp"
#include "pathforget/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace pathforget {

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

/// Sign of every ReLU input of the single-head network in eval mode.
std::vector<bool> relu_signs(std::span<const Tensor> p, const Batch& batch) {
    std::vector<bool> signs;
    const auto record = [&](const Tensor& pre) {
        for (double v : pre.data()) {
            signs.push_back(v > 0.0);
        }
        return ops::relu(pre);
    };
    const Tensor h1 = record(ops::conv2d(batch.images, p[0], p[1], 2));
    const Tensor h2 = record(ops::conv2d(h1, p[2], p[3], 2));
    const Tensor flat = h2.reshaped({batch.size(), element_count(h2.shape()) / batch.size()});
    const Tensor d1 = record(ops::add_bias(ops::matmul(flat, p[4]), p[5]));
    record(ops::add_bias(ops::matmul(d1, p[6]), p[7]));
    return signs;
}

} // namespace

Dataset synthetic_digits(std::size_t count, std::uint64_t seed, Split split) {
    Dataset ds;
    ds.split = split;
    ds.pixels.resize(count * ds.pixels_per_image());
    ds.labels.resize(count);
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const auto label = static_cast<std::uint8_t>(rng.below(10));
        ds.labels[i] = label;
        std::uint8_t* img = ds.pixels.data() + i * ds.pixels_per_image();
        for (std::size_t p = 0; p < ds.pixels_per_image(); ++p) {
            img[p] = static_cast<std::uint8_t>(rng.below(61));
        }
        const std::size_t top = 4 + (label / 5) * 12;
        const std::size_t left = 1 + (label % 5) * 5;
        for (std::size_t r = top; r < top + 6; ++r) {
            for (std::size_t c = left; c < left + 6 && c < ds.cols; ++c) {
                img[r * ds.cols + c] = static_cast<std::uint8_t>(180 + rng.below(76));
            }
        }
    }
    return ds;
}

TaskSequence synthetic_inversion_sequence(std::size_t train_count, std::size_t test_count, std::uint64_t seed) {
    const Dataset train = synthetic_digits(train_count, derive_seed(seed, 11), Split::Train);
    const Dataset test = synthetic_digits(test_count, derive_seed(seed, 12), Split::Test);
    ScenarioSpec spec;
    spec.kind = ScenarioKind::IdlInvert;
    return build_sequence(spec, train, test);
}

CheckResult check_gradients(std::uint64_t seed, std::size_t batch, std::size_t coordinates, double h, double floor,
                            double tolerance) {
    if (batch == 0 || coordinates == 0 || !(h > 0.0)) {
        throw ValidationError("gradient check needs a positive batch, coordinate count and step");
    }
    const ModelConfig config = ModelConfig::standard(1);
    Model model = Model::build(config, derive_seed(seed, 21));
    Rng rng(derive_seed(seed, 22));

    Batch b;
    b.images = Tensor({batch, config.image_extent, config.image_extent, config.image_channels});
    for (double& v : b.images.data()) {
        v = rng.uniform();
    }
    for (std::size_t i = 0; i < batch; ++i) {
        b.labels.push_back(static_cast<int>(rng.below(10)));
    }

    const std::vector<Tensor> analytic = forward_loss(model, b, Mode::Eval, 0).gradients();
    std::vector<Tensor>& params = model.parameters();
    const auto loss_at = [&] { return forward_loss(model, b, Mode::Eval, 0).loss(); };

    // Central differences are only meaningful where no ReLU changes state on
    // [θ-h, θ+h]; coordinates straddling a kink are redrawn.
    const std::size_t max_redraws = 100 * coordinates;
    std::size_t redraws = 0;
    double worst = 0.0;
    std::string worst_where;
    for (std::size_t k = 0; k < coordinates; ++k) {
        const std::size_t blk = k % params.size();
        std::size_t idx = 0;
        double up = 0.0;
        double down = 0.0;
        for (;;) {
            idx = rng.below(params[blk].size());
            const double original = params[blk][idx];
            params[blk][idx] = original + h;
            up = loss_at();
            const std::vector<bool> signs_up = relu_signs(params, b);
            params[blk][idx] = original - h;
            down = loss_at();
            const bool smooth = relu_signs(params, b) == signs_up;
            params[blk][idx] = original;
            if (smooth) {
                break;
            }
            if (++redraws > max_redraws) {
                throw ConsistencyError("gradient check: no kink-free coordinates found in block " +
                                       model.blocks()[blk].name);
            }
        }

        const double numeric = (up - down) / (2.0 * h);
        const double a = analytic[blk][idx];
        const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
        if (err > worst) {
            worst = err;
            worst_where = model.blocks()[blk].name + "[" + std::to_string(idx) + "]";
        }
    }
    CheckResult out{"gradients", worst <= tolerance, worst, tolerance, {}};
    out.detail = std::to_string(coordinates) + " coordinates, max relative error " + sci(worst) +
                 (worst_where.empty() ? "" : " at " + worst_where) + ", " + std::to_string(redraws) +
                 " kink-straddling draws replaced";
    return out;
}

CheckResult check_quadratic(std::uint64_t seed, std::size_t coordinates, std::size_t steps, double tolerance,
                            double coordinate_tolerance) {
    if (coordinates == 0 || steps == 0) {
        throw ValidationError("quadratic check needs coordinates and steps");
    }
    Rng rng(derive_seed(seed, 31));
    std::vector<double> curvature(coordinates);
    for (double& a : curvature) {
        a = rng.uniform(0.1, 3.0);
    }
    const QuadraticField field(curvature);

    Tensor theta({coordinates});
    for (double& v : theta.data()) {
        v = rng.uniform(-2.0, 2.0);
    }
    const Tensor start = theta;
    PathIntegralConfig config;
    config.quadrature = Quadrature::Trapezoid;
    config.substeps = 1;
    std::vector<Tensor> params{theta};
    AttributionLedger ledger = begin_tracking({field.block()}, params, field, config);
    for (std::size_t s = 0; s < steps; ++s) {
        Tensor delta({coordinates});
        for (double& d : delta.data()) {
            d = rng.uniform(-0.3, 0.3);
        }
        StepDelta step{params, {delta}};
        record_step(ledger, step, field);
        apply_delta(params, step.delta);
    }
    const AttributionReport report = finalize(ledger, params, field);

    double worst_coordinate = 0.0;
    for (std::size_t i = 0; i < coordinates; ++i) {
        const double expected = 0.5 * curvature[i] * (params[0][i] * params[0][i] - start[i] * start[i]);
        worst_coordinate = std::max(worst_coordinate, std::abs(report.blocks[0].contributions[i] - expected));
    }
    CheckResult out{"quadratic-oracle", report.relative_error <= tolerance && worst_coordinate <= coordinate_tolerance,
                    report.relative_error, tolerance, {}};
    out.detail = std::to_string(steps) + " steps, total relative error " + sci(report.relative_error) +
                 ", max coordinate error " + sci(worst_coordinate);
    return out;
}

CheckResult check_quadrature_convergence(std::uint64_t seed, std::vector<std::size_t> substeps, double noise_floor) {
    if (substeps.size() < 3 || substeps.front() == 0) {
        throw ValidationError("convergence check needs at least three substep counts");
    }
    for (std::size_t i = 1; i < substeps.size(); ++i) {
        if (substeps[i] != 2 * substeps[i - 1]) {
            throw ValidationError("substep counts must double from one entry to the next");
        }
    }
    const TaskSequence sequence = synthetic_inversion_sequence(256, 128, seed);
    TrainConfig train;
    train.epochs = 1;
    train.batch_size = 32;
    train.adam.lr = 0.01;
    std::vector<PathIntegralConfig> paths;
    for (std::size_t k : substeps) {
        PathIntegralConfig p;
        p.quadrature = Quadrature::Trapezoid;
        p.substeps = k;
        p.eval_set_size = 64;
        paths.push_back(p);
    }
    const MultiResult result = run_with_attributions(sequence, train, paths, seed);

    std::vector<double> errors;
    for (const AttributionReport& r : result.reports) {
        errors.push_back(std::abs(r.approx_delta - r.exact_delta));
    }
    bool passed = true;
    double worst_ratio = 0.0;
    std::string detail = "abs errors:";
    for (std::size_t i = 0; i < errors.size(); ++i) {
        detail += " K=" + std::to_string(substeps[i]) + " " + sci(errors[i]);
        if (i < 2 || errors[i - 2] <= noise_floor) {
            continue;
        }
        const double ratio = errors[i] / errors[i - 2];
        worst_ratio = std::max(worst_ratio, ratio);
        passed = passed && ratio <= 0.5;
    }
    return {"quadrature-convergence", passed, worst_ratio, 0.5, detail};
}

} // namespace pathforget
