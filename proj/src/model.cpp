// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/model.hpp"

#include "pathforget/error.hpp"

#include <algorithm>
#include <cmath>

namespace pathforget {

std::string_view to_string(ParamKind kind) { return kind == ParamKind::Weight ? "weight" : "bias"; }

ParamKind parse_param_kind(std::string_view text) {
    if (text == "weight") {
        return ParamKind::Weight;
    }
    if (text == "bias") {
        return ParamKind::Bias;
    }
    throw ValidationError("unknown parameter kind '" + std::string(text) + "'");
}

ModelConfig ModelConfig::standard(std::size_t head_count, double dropout) {
    ModelConfig config;
    config.head_count = head_count;
    config.layers = {
        {LayerType::Conv, "conv1", 32, 3, 2, Activation::Relu, 0.0, false},
        {LayerType::Conv, "conv2", 32, 3, 2, Activation::Relu, 0.0, false},
        {LayerType::Dense, "dense1", 64, 0, 1, Activation::Relu, dropout, false},
        {LayerType::Dense, "dense2", 32, 0, 1, Activation::Relu, dropout, false},
        {LayerType::Dense, "head", 10, 0, 1, Activation::Softmax, dropout, true},
    };
    return config;
}

void ModelConfig::validate() const {
    if (head_count == 0) {
        throw ValidationError("model needs at least one output head");
    }
    if (image_extent != 28 || image_channels != 1) {
        throw ValidationError("model input must be 28x28x1");
    }
    const ModelConfig reference = standard(head_count, layers.size() > 2 ? layers[2].input_dropout : 0.2);
    if (layers != reference.layers) {
        throw ValidationError("layer stack must be conv(32,3x3,s2) conv(32,3x3,s2) dense(64) dense(32) "
                              "softmax(10) with equal dropout on every dense input");
    }
    ops::validate_dropout_rate(layers[2].input_dropout);
}

std::vector<BlockInfo> block_layout(const ModelConfig& config) {
    config.validate();
    std::vector<BlockInfo> blocks;
    std::size_t extent = config.image_extent;
    std::size_t channels = config.image_channels;
    std::size_t features = 0;
    for (const LayerSpec& layer : config.layers) {
        if (layer.type == LayerType::Conv) {
            blocks.push_back({layer.name + ".weight", ParamKind::Weight,
                              {layer.kernel, layer.kernel, channels, layer.units}, std::nullopt});
            blocks.push_back({layer.name + ".bias", ParamKind::Bias, {layer.units}, std::nullopt});
            extent = ops::same_padded_extent(extent, layer.stride);
            channels = layer.units;
            features = extent * extent * channels;
            continue;
        }
        if (layer.per_head) {
            for (std::size_t h = 0; h < config.head_count; ++h) {
                const std::string name = layer.name + std::to_string(h);
                blocks.push_back({name + ".weight", ParamKind::Weight, {features, layer.units}, h});
                blocks.push_back({name + ".bias", ParamKind::Bias, {layer.units}, h});
            }
        } else {
            blocks.push_back({layer.name + ".weight", ParamKind::Weight, {features, layer.units}, std::nullopt});
            blocks.push_back({layer.name + ".bias", ParamKind::Bias, {layer.units}, std::nullopt});
        }
        features = layer.units;
    }
    return blocks;
}

Model Model::build(const ModelConfig& config, std::uint64_t seed) {
    std::vector<BlockInfo> blocks = block_layout(config);
    std::vector<Tensor> params;
    params.reserve(blocks.size());
    Rng rng(seed);
    for (const BlockInfo& info : blocks) {
        Tensor values(info.shape);
        if (info.kind == ParamKind::Weight) {
            // All but the output axis feed each unit.
            const std::size_t fan_in = info.size() / info.shape.back();
            const double gain = info.head_id.has_value() ? 3.0 : 6.0;
            const double bound = std::sqrt(gain / static_cast<double>(fan_in));
            for (double& v : values.data()) {
                v = rng.uniform(-bound, bound);
            }
        }
        params.push_back(std::move(values));
    }
    return Model(config, std::move(blocks), std::move(params));
}

std::size_t Model::block_index(std::string_view name) const {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        if (blocks_[i].name == name) {
            return i;
        }
    }
    throw ValidationError("no parameter block named '" + std::string(name) + "'");
}

void Model::set_parameters(std::span<const Tensor> values) {
    if (values.size() != params_.size()) {
        throw ConsistencyError("expected " + std::to_string(params_.size()) + " parameter blocks, got " +
                               std::to_string(values.size()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        require_same_shape(params_[i], values[i], blocks_[i].name.c_str());
    }
    params_.assign(values.begin(), values.end());
}

std::size_t Model::parameter_count() const {
    std::size_t total = 0;
    for (const Tensor& p : params_) {
        total += p.size();
    }
    return total;
}

Batch Batch::slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > size()) {
        throw ValidationError("batch slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                              ") out of range for " + std::to_string(size()) + " examples");
    }
    Shape shape = images.shape();
    const std::size_t per_example = images.size() / shape[0];
    shape[0] = end - begin;
    std::vector<double> data(images.data().begin() + static_cast<std::ptrdiff_t>(begin * per_example),
                             images.data().begin() + static_cast<std::ptrdiff_t>(end * per_example));
    return Batch{Tensor(std::move(shape), std::move(data)),
                 std::vector<int>(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                  labels.begin() + static_cast<std::ptrdiff_t>(end))};
}

namespace {

void check_inputs(const ModelConfig& config, std::span<const Tensor> params, const Batch& batch,
                  std::size_t head_id) {
    if (head_id >= config.head_count) {
        throw ValidationError("head " + std::to_string(head_id) + " does not exist; model has " +
                              std::to_string(config.head_count) + " head(s)");
    }
    const std::vector<BlockInfo> layout = block_layout(config);
    if (params.size() != layout.size()) {
        throw ConsistencyError("expected " + std::to_string(layout.size()) + " parameter blocks, got " +
                               std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (params[i].shape() != layout[i].shape) {
            throw DimensionError(layout[i].name + ": expected " + shape_string(layout[i].shape) + ", got " +
                                 shape_string(params[i].shape()));
        }
    }
    const Shape expected{batch.size(), config.image_extent, config.image_extent, config.image_channels};
    if (batch.size() == 0 || batch.images.shape() != expected) {
        throw DimensionError("batch images must be " + shape_string(expected) + ", got " +
                             shape_string(batch.images.shape()));
    }
}

} // namespace

ForwardPass forward_loss(const ModelConfig& config, std::span<const Tensor> params, const Batch& batch, Mode mode,
                         std::size_t head_id, Rng* rng) {
    check_inputs(config, params, batch, head_id);
    if (mode == Mode::Train && rng == nullptr) {
        throw UsageError("train-mode forward pass needs a random generator for dropout");
    }

    ForwardPass pass;
    GradientTape& tape = *pass.tape_;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Tensor& p : params) {
        vars.push_back(tape.watch(p));
    }

    Rng unused(0);
    Rng& dropout_rng = rng != nullptr ? *rng : unused;
    const std::size_t batch_size = batch.size();
    Var x = tape.constant(batch.images);
    std::size_t block = 0;
    for (const LayerSpec& layer : config.layers) {
        std::size_t w = block, b = block + 1;
        if (layer.per_head) {
            w += 2 * head_id;
            b += 2 * head_id;
            block += 2 * config.head_count;
        } else {
            block += 2;
        }

        if (layer.type == LayerType::Conv) {
            x = relu(conv2d(x, vars[w], vars[b], layer.stride));
            continue;
        }
        if (x.value().rank() != 2) {
            x = reshape(x, {batch_size, x.value().size() / batch_size});
        }
        x = dropout(x, layer.input_dropout, mode, dropout_rng);
        x = add_bias(matmul(x, vars[w]), vars[b]);
        if (layer.activation == Activation::Relu) {
            x = relu(x);
        }
    }
    pass.logits_ = x;
    pass.loss_ = softmax_cross_entropy(x, batch.labels);
    return pass;
}

ForwardPass forward_loss(const Model& model, const Batch& batch, Mode mode, std::size_t head_id, Rng* rng) {
    return forward_loss(model.config(), model.parameters(), batch, mode, head_id, rng);
}

LossGradient loss_and_gradient(const ModelConfig& config, std::span<const Tensor> params, const Batch& batch,
                               std::size_t head_id, std::size_t chunk) {
    if (chunk == 0) {
        throw ValidationError("evaluation chunk size must be positive");
    }
    LossGradient out;
    const double total = static_cast<double>(batch.size());
    for (std::size_t begin = 0; begin < batch.size(); begin += chunk) {
        const std::size_t end = std::min(batch.size(), begin + chunk);
        const Batch part = (begin == 0 && end == batch.size()) ? Batch{} : batch.slice(begin, end);
        const Batch& view = part.size() == 0 ? batch : part;
        const ForwardPass pass = forward_loss(config, params, view, Mode::Eval, head_id);
        const double weight = static_cast<double>(end - begin) / total;
        std::vector<Tensor> grads = pass.gradients();
        if (out.gradient.empty()) {
            out.loss = weight * pass.loss();
            for (Tensor& g : grads) {
                for (double& v : g.data()) {
                    v *= weight;
                }
            }
            out.gradient = std::move(grads);
            continue;
        }
        out.loss += weight * pass.loss();
        for (std::size_t i = 0; i < grads.size(); ++i) {
            double* dst = out.gradient[i].raw();
            const double* src = grads[i].raw();
            for (std::size_t k = 0; k < grads[i].size(); ++k) {
                dst[k] += weight * src[k];
            }
        }
    }
    return out;
}

LossGradient gradients(const Model& model, const Batch& batch, std::size_t head_id) {
    return loss_and_gradient(model.config(), model.parameters(), batch, head_id);
}

double evaluate_loss(const ModelConfig& config, std::span<const Tensor> params, const Batch& batch,
                     std::size_t head_id, std::size_t chunk) {
    if (chunk == 0) {
        throw ValidationError("evaluation chunk size must be positive");
    }
    double loss = 0.0;
    const double total = static_cast<double>(batch.size());
    for (std::size_t begin = 0; begin < batch.size(); begin += chunk) {
        const std::size_t end = std::min(batch.size(), begin + chunk);
        const Batch part = (begin == 0 && end == batch.size()) ? Batch{} : batch.slice(begin, end);
        const Batch& view = part.size() == 0 ? batch : part;
        const double weight = static_cast<double>(end - begin) / total;
        loss += weight * forward_loss(config, params, view, Mode::Eval, head_id).loss();
    }
    return loss;
}

double evaluate_accuracy(const ModelConfig& config, std::span<const Tensor> params, const Batch& batch,
                         std::size_t head_id, std::size_t chunk) {
    if (chunk == 0) {
        throw ValidationError("evaluation chunk size must be positive");
    }
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < batch.size(); begin += chunk) {
        const std::size_t end = std::min(batch.size(), begin + chunk);
        const Batch part = (begin == 0 && end == batch.size()) ? Batch{} : batch.slice(begin, end);
        const Batch& view = part.size() == 0 ? batch : part;
        const ForwardPass pass = forward_loss(config, params, view, Mode::Eval, head_id);
        const Tensor& logits = pass.logits();
        const std::size_t classes = logits.extent(1);
        for (std::size_t r = 0; r < view.size(); ++r) {
            const double* row = logits.raw() + r * classes;
            const auto best = static_cast<int>(std::max_element(row, row + classes) - row);
            correct += best == view.labels[r] ? 1 : 0;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(batch.size());
}

} // namespace pathforget
