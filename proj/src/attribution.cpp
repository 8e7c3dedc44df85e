// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/attribution.hpp"

#include "pathforget/error.hpp"
#include "pathforget/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace pathforget {

std::string_view to_string(Quadrature q) { return q == Quadrature::Trapezoid ? "trapezoid" : "left_riemann"; }

Quadrature parse_quadrature(std::string_view text) {
    if (text == "trapezoid") {
        return Quadrature::Trapezoid;
    }
    if (text == "left" || text == "left_riemann") {
        return Quadrature::LeftRiemann;
    }
    throw ValidationError("unknown quadrature '" + std::string(text) + "' (expected left or trapezoid)");
}

void PathIntegralConfig::validate() const {
    if (substeps == 0) {
        throw ValidationError("path integral needs at least one substep");
    }
    if (eval_set_size == 0) {
        throw ValidationError("evaluation set size must be positive");
    }
}

std::vector<QuadratureNode> quadrature_nodes(Quadrature q, std::size_t substeps) {
    if (substeps == 0) {
        throw ValidationError("path integral needs at least one substep");
    }
    const double k = static_cast<double>(substeps);
    std::vector<QuadratureNode> nodes;
    if (q == Quadrature::LeftRiemann) {
        for (std::size_t i = 0; i < substeps; ++i) {
            nodes.push_back({static_cast<double>(i) / k, 1.0 / k});
        }
        return nodes;
    }
    for (std::size_t i = 0; i <= substeps; ++i) {
        const bool end = i == 0 || i == substeps;
        nodes.push_back({static_cast<double>(i) / k, end ? 0.5 / k : 1.0 / k});
    }
    return nodes;
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t value) {
    for (int shift = 0; shift < 64; shift += 8) {
        h ^= (value >> shift) & 0xffU;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void check_layout(const std::vector<BlockInfo>& blocks, std::span<const Tensor> values, const char* what) {
    if (values.size() != blocks.size()) {
        throw ConsistencyError(std::string(what) + " has " + std::to_string(values.size()) +
                               " blocks, ledger has " + std::to_string(blocks.size()));
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (values[i].shape() != blocks[i].shape) {
            throw ConsistencyError(std::string(what) + " block " + blocks[i].name + " is " +
                                   shape_string(values[i].shape()) + ", ledger expects " +
                                   shape_string(blocks[i].shape));
        }
    }
}

void check_fingerprint(const AttributionLedger& ledger, const LossField& field) {
    if (field.fingerprint() != ledger.fingerprint) {
        throw ConsistencyError("loss field changed since tracking began (evaluation data fingerprint mismatch)");
    }
}

} // namespace

EvalSet EvalSet::draw(const Dataset& source, std::size_t size, std::uint64_t seed) {
    if (size == 0 || source.size() == 0) {
        throw ValidationError("evaluation set must not be empty");
    }
    const std::size_t take = std::min(size, source.size());
    std::vector<std::size_t> pool(source.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);

    EvalSet set;
    set.indices_ = std::move(pool);
    set.examples_ = subset(source, set.indices_);
    set.batch_ = make_batch(set.examples_);
    std::uint64_t h = pathforget::fingerprint(set.examples_);
    for (std::size_t i : set.indices_) {
        h = fnv1a(h, i);
    }
    set.fingerprint_ = h;
    return set;
}

ModelLossField::ModelLossField(ModelConfig config, const EvalSet& eval_set, std::size_t head_id)
    : config_(std::move(config)), eval_set_(&eval_set), head_id_(head_id) {
    config_.validate();
    if (eval_set.size() == 0) {
        throw ValidationError("evaluation set must not be empty");
    }
    if (head_id >= config_.head_count) {
        throw ValidationError("head " + std::to_string(head_id) + " does not exist");
    }
}

LossGradient ModelLossField::evaluate(std::span<const Tensor> params) const {
    return loss_and_gradient(config_, params, eval_set_->batch(), head_id_);
}

double ModelLossField::loss(std::span<const Tensor> params) const {
    return evaluate_loss(config_, params, eval_set_->batch(), head_id_);
}

std::uint64_t ModelLossField::fingerprint() const { return fnv1a(eval_set_->fingerprint(), head_id_); }

QuadraticField::QuadraticField(std::vector<double> curvature) : curvature_(std::move(curvature)) {
    if (curvature_.empty()) {
        throw ValidationError("quadratic field needs at least one coordinate");
    }
}

LossGradient QuadraticField::evaluate(std::span<const Tensor> params) const {
    if (params.size() != 1 || params[0].size() != curvature_.size()) {
        throw DimensionError("quadratic field expects one block of " + std::to_string(curvature_.size()) +
                             " coordinates");
    }
    LossGradient out;
    Tensor grad(params[0].shape());
    for (std::size_t i = 0; i < curvature_.size(); ++i) {
        const double theta = params[0][i];
        out.loss += 0.5 * curvature_[i] * theta * theta;
        grad[i] = curvature_[i] * theta;
    }
    out.gradient.push_back(std::move(grad));
    return out;
}

std::uint64_t QuadraticField::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double a : curvature_) {
        h = fnv1a(h, std::bit_cast<std::uint64_t>(a));
    }
    return h;
}

BlockInfo QuadraticField::block() const { return {"theta", ParamKind::Weight, {curvature_.size()}, std::nullopt}; }

AttributionLedger begin_tracking(std::vector<BlockInfo> blocks, std::span<const Tensor> params,
                                 const LossField& field, const PathIntegralConfig& config) {
    config.validate();
    if (field.sample_count() == 0) {
        throw ValidationError("cannot track forgetting on an empty evaluation set");
    }
    check_layout(blocks, params, "parameters");

    AttributionLedger ledger;
    ledger.config = config;
    ledger.fingerprint = field.fingerprint();
    for (const BlockInfo& b : blocks) {
        ledger.contributions.emplace_back(b.shape);
    }
    ledger.path_l1.assign(blocks.size(), 0.0);
    ledger.blocks = std::move(blocks);

    LossGradient start = field.evaluate(params);
    ++ledger.gradient_evaluations;
    ledger.loss_start = start.loss;
    ledger.boundary_point.assign(params.begin(), params.end());
    ledger.boundary_gradient = std::move(start.gradient);
    return ledger;
}

void record_step(AttributionLedger& ledger, const StepDelta& step, const LossField& field) {
    check_layout(ledger.blocks, step.before, "step start");
    check_layout(ledger.blocks, step.delta, "step delta");
    check_fingerprint(ledger, field);

    ++ledger.steps_recorded;
    for (std::size_t b = 0; b < step.delta.size(); ++b) {
        double l1 = 0.0;
        for (double d : step.delta[b].data()) {
            l1 += std::abs(d);
        }
        ledger.path_l1[b] += l1;
    }
    if (step.is_zero()) {
        return; // zero-length segment; the boundary gradient stays valid
    }

    const std::size_t blocks = ledger.blocks.size();
    std::vector<Tensor> weighted;
    weighted.reserve(blocks);
    for (const BlockInfo& b : ledger.blocks) {
        weighted.emplace_back(b.shape);
    }

    const auto accumulate = [&](const std::vector<Tensor>& grad, double weight) {
        for (std::size_t b = 0; b < blocks; ++b) {
            double* dst = weighted[b].raw();
            const double* g = grad[b].raw();
            for (std::size_t i = 0; i < weighted[b].size(); ++i) {
                dst[i] += weight * g[i];
            }
        }
    };

    bool ends_at_boundary = false;
    for (const QuadratureNode& node : quadrature_nodes(ledger.config.quadrature, ledger.config.substeps)) {
        if (node.t == 0.0) {
            if (ledger.boundary_point != step.before) {
                ledger.boundary_gradient = field.evaluate(step.before).gradient;
                ledger.boundary_point = step.before;
                ++ledger.gradient_evaluations;
            }
            accumulate(ledger.boundary_gradient, node.weight);
            continue;
        }

        std::vector<Tensor> point = step.before;
        for (std::size_t b = 0; b < blocks; ++b) {
            double* p = point[b].raw();
            const double* d = step.delta[b].raw();
            for (std::size_t i = 0; i < point[b].size(); ++i) {
                // t == 1 reproduces the optimizer's own update bit for bit.
                p[i] += node.t == 1.0 ? d[i] : node.t * d[i];
            }
        }
        std::vector<Tensor> grad = field.evaluate(point).gradient;
        ++ledger.gradient_evaluations;
        accumulate(grad, node.weight);
        if (node.t == 1.0) {
            ledger.boundary_point = std::move(point);
            ledger.boundary_gradient = std::move(grad);
            ends_at_boundary = true;
        }
    }
    if (!ends_at_boundary) {
        ledger.boundary_point.clear();
        ledger.boundary_gradient.clear();
    }

    for (std::size_t b = 0; b < blocks; ++b) {
        double* c = ledger.contributions[b].raw();
        const double* w = weighted[b].raw();
        const double* d = step.delta[b].raw();
        for (std::size_t i = 0; i < weighted[b].size(); ++i) {
            c[i] += w[i] * d[i];
        }
    }
}

AttributionReport finalize(const AttributionLedger& ledger, std::span<const Tensor> params_end,
                           const LossField& field) {
    if (ledger.steps_recorded == 0) {
        throw UsageError("finalize called before any step was recorded");
    }
    check_layout(ledger.blocks, params_end, "final parameters");
    check_fingerprint(ledger, field);

    AttributionReport report;
    report.config = ledger.config;
    report.steps = ledger.steps_recorded;
    report.gradient_evaluations = ledger.gradient_evaluations;
    report.fingerprint = ledger.fingerprint;
    report.eval_set_size = field.sample_count();
    report.loss_start = ledger.loss_start;
    report.loss_end = field.loss(params_end);
    report.exact_delta = report.loss_end - report.loss_start;

    for (std::size_t b = 0; b < ledger.blocks.size(); ++b) {
        BlockAttribution block{ledger.blocks[b], ledger.contributions[b], 0.0, 0.0, ledger.path_l1[b]};
        for (double c : block.contributions.data()) {
            block.sum += c;
            block.abs_sum += std::abs(c);
        }
        report.approx_delta += block.sum;
        report.blocks.push_back(std::move(block));
    }
    report.relative_error = std::abs(report.approx_delta - report.exact_delta) /
                            std::max(std::abs(report.exact_delta), kRelativeErrorFloor);
    return report;
}

} // namespace pathforget
