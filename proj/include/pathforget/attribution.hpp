// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/data.hpp"
#include "pathforget/model.hpp"
#include "pathforget/optim.hpp"
#include "pathforget/tensor.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pathforget {

enum class Quadrature { LeftRiemann, Trapezoid };

std::string_view to_string(Quadrature q);
/// Accepts left, left_riemann, trapezoid.
Quadrature parse_quadrature(std::string_view text);

struct PathIntegralConfig {
    Quadrature quadrature = Quadrature::Trapezoid;
    std::size_t substeps = 1;
    std::size_t eval_set_size = 1024;
    std::uint64_t eval_set_seed = 0;

    void validate() const;
};

/// Position t in [0, 1] along one optimizer segment and its quadrature weight.
struct QuadratureNode {
    double t;
    double weight;
};

/// Trapezoid: K+1 equispaced nodes, end weights 1/(2K), interior 1/K.
/// Left Riemann: nodes t = k/K for k < K, weights 1/K (K = 1 is the plain
/// gradient-times-step sum).
std::vector<QuadratureNode> quadrature_nodes(Quadrature q, std::size_t substeps);

/// A scalar loss over parameter space together with its gradient.
///
/// Attribution requires the field to be a deterministic function of the
/// parameters; implementations expose a fingerprint of whatever data defines it.
class LossField {
public:
    virtual ~LossField() = default;
    virtual LossGradient evaluate(std::span<const Tensor> params) const = 0;
    virtual double loss(std::span<const Tensor> params) const { return evaluate(params).loss; }
    virtual std::uint64_t fingerprint() const = 0;
    virtual std::size_t sample_count() const = 0;
};

/// Fixed seeded subset of a task's examples, drawn once and never reordered.
class EvalSet {
public:
    /// Draws min(size, source.size()) examples without replacement.
    static EvalSet draw(const Dataset& source, std::size_t size, std::uint64_t seed);

    const Dataset& examples() const noexcept { return examples_; }
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    const Batch& batch() const noexcept { return batch_; }
    std::size_t size() const noexcept { return indices_.size(); }
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

private:
    Dataset examples_;
    std::vector<std::size_t> indices_;
    Batch batch_;
    std::uint64_t fingerprint_ = 0;
};

/// Eval-mode loss of one head of the CNN on a fixed EvalSet.
class ModelLossField final : public LossField {
public:
    ModelLossField(ModelConfig config, const EvalSet& eval_set, std::size_t head_id);

    LossGradient evaluate(std::span<const Tensor> params) const override;
    double loss(std::span<const Tensor> params) const override;
    std::uint64_t fingerprint() const override;
    std::size_t sample_count() const override { return eval_set_->size(); }

private:
    ModelConfig config_;
    const EvalSet* eval_set_;
    std::size_t head_id_;
};

/// L(θ) = ½ Σ a_i θ_i² over a single block. Its gradient field is linear, so
/// trapezoid attribution is exact on it.
class QuadraticField final : public LossField {
public:
    explicit QuadraticField(std::vector<double> curvature);

    LossGradient evaluate(std::span<const Tensor> params) const override;
    std::uint64_t fingerprint() const override;
    std::size_t sample_count() const override { return curvature_.size(); }

    const std::vector<double>& curvature() const noexcept { return curvature_; }
    BlockInfo block() const;

private:
    std::vector<double> curvature_;
};

/// Per-parameter accumulation of ∂L/∂θ_i · Δθ_i along a training trajectory.
struct AttributionLedger {
    std::vector<BlockInfo> blocks;
    std::vector<Tensor> contributions;
    std::vector<double> path_l1; // Σ|Δθ_i| per block over recorded steps
    double loss_start = 0.0;
    std::size_t steps_recorded = 0;
    std::size_t gradient_evaluations = 0;
    std::uint64_t fingerprint = 0;
    PathIntegralConfig config;

    // Gradient at the end of the last segment, reused as the next segment's start.
    std::vector<Tensor> boundary_point;
    std::vector<Tensor> boundary_gradient;
};

/// Starts a ledger at the current parameters. Evaluates the field once for the
/// starting loss and the first segment's starting gradient.
AttributionLedger begin_tracking(std::vector<BlockInfo> blocks, std::span<const Tensor> params,
                                 const LossField& field, const PathIntegralConfig& config);

/// Integrates the field along before -> before + delta and adds each
/// coordinate's share to the ledger.
void record_step(AttributionLedger& ledger, const StepDelta& step, const LossField& field);

struct BlockAttribution {
    BlockInfo info;
    Tensor contributions; // empty when loaded from a summary file
    double sum = 0.0;     // Σ_i ΔL_i
    double abs_sum = 0.0; // Σ_i |ΔL_i|
    double path_l1 = 0.0;
};

struct AttributionReport {
    std::vector<BlockAttribution> blocks;
    double loss_start = 0.0;
    double loss_end = 0.0;
    double exact_delta = 0.0;  // loss_end - loss_start
    double approx_delta = 0.0; // Σ over blocks of block sums
    double relative_error = 0.0;
    std::size_t steps = 0;
    std::size_t gradient_evaluations = 0;
    std::uint64_t fingerprint = 0;
    std::size_t eval_set_size = 0;
    PathIntegralConfig config;
};

/// Relative-error denominator floor, for runs whose exact change is ~0.
inline constexpr double kRelativeErrorFloor = 1e-8;

/// Closes the ledger at `params_end`: exact change from the endpoint losses,
/// approximate change from the ledger, and their relative disagreement.
AttributionReport finalize(const AttributionLedger& ledger, std::span<const Tensor> params_end,
                           const LossField& field);

} // namespace pathforget
