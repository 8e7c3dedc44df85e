// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "pathforget/ops.hpp"
#include "pathforget/rng.hpp"
#include "pathforget/tape.hpp"
#include "pathforget/tensor.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pathforget {

enum class ParamKind { Weight, Bias };

std::string_view to_string(ParamKind kind);
ParamKind parse_param_kind(std::string_view text);

enum class LayerType { Conv, Dense };
enum class Activation { Relu, Softmax };

struct LayerSpec {
    LayerType type;
    std::string name;
    std::size_t units;        // output channels (conv) or neurons (dense)
    std::size_t kernel = 0;   // square kernel extent, conv only
    std::size_t stride = 1;   // conv only
    Activation activation = Activation::Relu;
    double input_dropout = 0.0;
    bool per_head = false;    // one copy per task head

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// The five-layer CNN: two stride-2 3x3 convolutions with 32 filters, dense 64,
/// dense 32, and a 10-way softmax head, with 0.2 dropout on the input of each
/// dense layer. `head_count` > 1 gives every task its own output layer.
struct ModelConfig {
    std::vector<LayerSpec> layers;
    std::size_t head_count = 1;
    std::size_t image_extent = 28;
    std::size_t image_channels = 1;

    static ModelConfig standard(std::size_t head_count = 1, double dropout = 0.2);

    /// Throws ValidationError unless the layer stack is the standard one and head_count >= 1.
    void validate() const;

    std::size_t class_count() const { return layers.back().units; }
};

/// Name, kind and shape of one parameter block.
struct BlockInfo {
    std::string name;
    ParamKind kind;
    Shape shape;
    std::optional<std::size_t> head_id;

    std::size_t size() const { return element_count(shape); }
    friend bool operator==(const BlockInfo&, const BlockInfo&) = default;
};

/// Read-only view of one named block and its current values.
struct ParameterBlock {
    const BlockInfo& info;
    const Tensor& values;
};

/// A built network: layout plus owned parameter values, in layer order with heads last.
class Model {
public:
    /// Fan-in-scaled uniform weights (He bound for ReLU layers, LeCun bound for
    /// the softmax heads), zero biases. Identical seeds give identical bits.
    static Model build(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return config_; }
    const std::vector<BlockInfo>& blocks() const noexcept { return blocks_; }
    ParameterBlock block(std::size_t index) const { return {blocks_.at(index), params_.at(index)}; }
    std::size_t block_index(std::string_view name) const;

    std::vector<Tensor>& parameters() noexcept { return params_; }
    const std::vector<Tensor>& parameters() const noexcept { return params_; }
    void set_parameters(std::span<const Tensor> values);

    std::size_t parameter_count() const;

private:
    Model(ModelConfig config, std::vector<BlockInfo> blocks, std::vector<Tensor> params)
        : config_(std::move(config)), blocks_(std::move(blocks)), params_(std::move(params)) {}

    ModelConfig config_;
    std::vector<BlockInfo> blocks_;
    std::vector<Tensor> params_;
};

/// Block layout for a config without initializing values.
std::vector<BlockInfo> block_layout(const ModelConfig& config);

/// Images as [B x H x W x C] doubles in [0, 1] and integer labels.
struct Batch {
    Tensor images;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    Batch slice(std::size_t begin, std::size_t end) const;
};

/// Result of a traced forward pass through one head.
class ForwardPass {
public:
    double loss() const { return loss_->value()[0]; }
    const Tensor& logits() const { return logits_->value(); }
    GradientTape& tape() const { return *tape_; }
    const Var& loss_var() const { return *loss_; }

    /// Gradient per parameter block, in block order.
    std::vector<Tensor> gradients() const { return tape_->backward(*loss_); }

private:
    friend ForwardPass forward_loss(const ModelConfig&, std::span<const Tensor>, const Batch&, Mode, std::size_t,
                                    Rng*);
    std::unique_ptr<GradientTape> tape_ = std::make_unique<GradientTape>();
    std::optional<Var> loss_;
    std::optional<Var> logits_;
};

/// Mean cross-entropy through head `head_id`. Train mode needs `rng` for dropout;
/// eval mode ignores it and is a pure function of (params, batch).
ForwardPass forward_loss(const ModelConfig& config, std::span<const Tensor> params, const Batch& batch, Mode mode,
                         std::size_t head_id, Rng* rng = nullptr);
ForwardPass forward_loss(const Model& model, const Batch& batch, Mode mode, std::size_t head_id, Rng* rng = nullptr);

struct LossGradient {
    double loss = 0.0;
    std::vector<Tensor> gradient;
};

/// Eval-mode loss and gradient, evaluated in fixed-size chunks and combined with
/// size weights so the result is the mean over the whole batch.
inline constexpr std::size_t kDefaultEvalChunk = 256;

LossGradient loss_and_gradient(const ModelConfig& config, std::span<const Tensor> params, const Batch& batch,
                               std::size_t head_id, std::size_t chunk = kDefaultEvalChunk);
LossGradient gradients(const Model& model, const Batch& batch, std::size_t head_id);

/// Eval-mode loss only, chunked like loss_and_gradient.
double evaluate_loss(const ModelConfig& config, std::span<const Tensor> params, const Batch& batch,
                     std::size_t head_id, std::size_t chunk = kDefaultEvalChunk);

/// Eval-mode top-1 accuracy.
double evaluate_accuracy(const ModelConfig& config, std::span<const Tensor> params, const Batch& batch,
                         std::size_t head_id, std::size_t chunk = kDefaultEvalChunk);

} // namespace pathforget
