// Copyright (c) 2026, pathforget authors
// SPDX-License-Identifier: Apache-2.0
#include "pathforget/tape.hpp"

#include "pathforget/error.hpp"

#include <algorithm>
#include <memory>

namespace pathforget {
namespace {

void add_into(Tensor& dst, const Tensor& src) {
    double* d = dst.raw();
    const double* s = src.raw();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        d[i] += s[i];
    }
}

GradientTape& common_tape(const Var& a, const Var& b, const char* context) {
    if (&a.tape() != &b.tape()) {
        throw UsageError(std::string(context) + ": operands recorded on different tapes");
    }
    return a.tape();
}

} // namespace

const Tensor& Var::value() const { return tape_->value(*this); }

void GradientTape::check_owned(const Var& v, const char* context) const {
    if (&v.tape() != this || v.id() >= nodes_.size()) {
        throw UsageError(std::string(context) + ": value was not recorded on this tape");
    }
}

Var GradientTape::watch(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, true});
    watched_.push_back(nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
}

Var GradientTape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, false});
    return Var(this, nodes_.size() - 1);
}

Var GradientTape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
    Node node{std::move(value), {}, std::move(backward), false};
    node.inputs.reserve(inputs.size());
    for (const Var& in : inputs) {
        check_owned(in, "record");
        node.inputs.push_back(in.id());
        node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
    }
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

const Tensor& GradientTape::value(const Var& v) const {
    check_owned(v, "value");
    return nodes_[v.id()].value;
}

bool GradientTape::requires_grad(const Var& v) const {
    check_owned(v, "requires_grad");
    return nodes_[v.id()].requires_grad;
}

std::vector<Tensor> GradientTape::backward(const Var& loss, std::vector<std::size_t>* visit_order) const {
    check_owned(loss, "backward");
    if (nodes_[loss.id()].value.size() != 1) {
        throw UsageError("backward: loss must be a scalar, got shape " +
                         shape_string(nodes_[loss.id()].value.shape()));
    }

    std::vector<Tensor> grads(nodes_.size());
    grads[loss.id()] = Tensor::filled(nodes_[loss.id()].value.shape(), 1.0);

    std::vector<Tensor*> input_grads;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        const Node& node = nodes_[id];
        if (!node.backward) {
            continue; // leaf
        }
        if (visit_order != nullptr) {
            visit_order->push_back(id);
        }
        if (!node.requires_grad || grads[id].size() == 0) {
            continue;
        }
        input_grads.clear();
        for (std::size_t in : node.inputs) {
            if (!nodes_[in].requires_grad) {
                input_grads.push_back(nullptr);
                continue;
            }
            if (grads[in].size() == 0) {
                grads[in] = Tensor(nodes_[in].value.shape());
            }
            input_grads.push_back(&grads[in]);
        }
        node.backward(grads[id], input_grads);
        grads[id] = Tensor(); // release early; interior gradients are not reported
    }

    std::vector<Tensor> out;
    out.reserve(watched_.size());
    for (std::size_t id : watched_) {
        out.push_back(grads[id].size() == 0 ? Tensor(nodes_[id].value.shape()) : std::move(grads[id]));
    }
    return out;
}

std::vector<Tensor> backward(const GradientTape& tape, const Var& loss) { return tape.backward(loss); }

Var matmul(const Var& a, const Var& b) {
    GradientTape& tape = common_tape(a, b, "matmul");
    Tensor out = ops::matmul(a.value(), b.value());
    return tape.record(std::move(out), {a, b}, [av = &a.value(), bv = &b.value()](const Tensor& up, auto grads) {
        if (grads[0] != nullptr) {
            add_into(*grads[0], ops::matmul_nt(up, *bv));
        }
        if (grads[1] != nullptr) {
            add_into(*grads[1], ops::matmul_tn(*av, up));
        }
    });
}

Var add_bias(const Var& x, const Var& bias) {
    GradientTape& tape = common_tape(x, bias, "add_bias");
    Tensor out = ops::add_bias(x.value(), bias.value());
    return tape.record(std::move(out), {x, bias}, [](const Tensor& up, auto grads) {
        if (grads[0] != nullptr) {
            add_into(*grads[0], up);
        }
        if (grads[1] != nullptr) {
            add_into(*grads[1], ops::sum_leading(up));
        }
    });
}

Var conv2d(const Var& input, const Var& kernels, const Var& bias, std::size_t stride) {
    GradientTape& tape = common_tape(input, kernels, "conv2d");
    common_tape(input, bias, "conv2d");
    const auto g = ops::ConvGeometry::resolve(input.shape(), kernels.shape(), stride);
    if (bias.value().rank() != 1 || bias.value().size() != g.out_c) {
        throw DimensionError("conv2d: bias " + shape_string(bias.shape()) + " does not match " +
                             std::to_string(g.out_c) + " output channels");
    }
    // The patch matrix is kept for the kernel gradient.
    auto cols = std::make_shared<Tensor>(ops::im2col(input.value(), g));
    const Tensor flat_kernels = kernels.value().reshaped({g.patch_size(), g.out_c});
    Tensor out = ops::add_bias(ops::matmul(*cols, flat_kernels), bias.value());
    Shape out_shape = input.value().rank() == 4 ? Shape{g.batch, g.out_h, g.out_w, g.out_c}
                                                : Shape{g.out_h, g.out_w, g.out_c};
    out = std::move(out).reshaped(out_shape);

    const Tensor* kernel_value = &kernels.value();
    return tape.record(std::move(out), {input, kernels, bias},
                       [g, cols, kernel_value](const Tensor& up, auto grads) {
                           const Tensor up2 = up.reshaped({g.output_pixels(), g.out_c});
                           if (grads[0] != nullptr) {
                               const Tensor dcols =
                                   ops::matmul_nt(up2, kernel_value->reshaped({g.patch_size(), g.out_c}));
                               ops::col2im_add(dcols, g, *grads[0]);
                           }
                           if (grads[1] != nullptr) {
                               add_into(*grads[1], ops::matmul_tn(*cols, up2));
                           }
                           if (grads[2] != nullptr) {
                               add_into(*grads[2], ops::sum_leading(up2));
                           }
                       });
}

Var relu(const Var& x) {
    Tensor out = ops::relu(x.value());
    const Tensor* in = &x.value();
    return x.tape().record(std::move(out), {x}, [in](const Tensor& up, auto grads) {
        if (grads[0] == nullptr) {
            return;
        }
        double* d = grads[0]->raw();
        for (std::size_t i = 0; i < up.size(); ++i) {
            if ((*in)[i] > 0.0) {
                d[i] += up[i];
            }
        }
    });
}

Var dropout(const Var& x, double rate, Mode mode, Rng& rng) {
    ops::validate_dropout_rate(rate);
    if (mode == Mode::Eval || rate == 0.0) {
        return x;
    }
    auto mask = std::make_shared<Tensor>(ops::dropout_mask(x.shape(), rate, rng));
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= (*mask)[i];
    }
    return x.tape().record(std::move(out), {x}, [mask](const Tensor& up, auto grads) {
        if (grads[0] == nullptr) {
            return;
        }
        double* d = grads[0]->raw();
        for (std::size_t i = 0; i < up.size(); ++i) {
            d[i] += up[i] * (*mask)[i];
        }
    });
}

Var reshape(const Var& x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    return x.tape().record(std::move(out), {x}, [](const Tensor& up, auto grads) {
        if (grads[0] == nullptr) {
            return;
        }
        double* d = grads[0]->raw();
        for (std::size_t i = 0; i < up.size(); ++i) {
            d[i] += up[i];
        }
    });
}

Var softmax_cross_entropy(const Var& logits, std::span<const int> labels) {
    const double loss = ops::softmax_cross_entropy(logits.value(), labels);
    auto probs = std::make_shared<Tensor>(ops::softmax(logits.value()));
    std::vector<int> targets(labels.begin(), labels.end());
    return logits.tape().record(Tensor::scalar(loss), {logits},
                                [probs, targets = std::move(targets)](const Tensor& up, auto grads) {
                                    if (grads[0] == nullptr) {
                                        return;
                                    }
                                    const std::size_t rows = probs->extent(0), cols = probs->extent(1);
                                    const double scale = up[0] / static_cast<double>(rows);
                                    double* d = grads[0]->raw();
                                    for (std::size_t r = 0; r < rows; ++r) {
                                        for (std::size_t c = 0; c < cols; ++c) {
                                            const double target =
                                                static_cast<int>(c) == targets[r] ? 1.0 : 0.0;
                                            d[r * cols + c] += scale * ((*probs)[r * cols + c] - target);
                                        }
                                    }
                                });
}

Var multiply(const Var& a, const Var& b) {
    GradientTape& tape = common_tape(a, b, "multiply");
    require_same_shape(a.value(), b.value(), "multiply");
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= b.value()[i];
    }
    return tape.record(std::move(out), {a, b}, [av = &a.value(), bv = &b.value()](const Tensor& up, auto grads) {
        for (std::size_t k = 0; k < 2; ++k) {
            if (grads[k] == nullptr) {
                continue;
            }
            const Tensor& other = k == 0 ? *bv : *av;
            double* d = grads[k]->raw();
            for (std::size_t i = 0; i < up.size(); ++i) {
                d[i] += up[i] * other[i];
            }
        }
    });
}

Var sum(const Var& x) {
    double total = 0.0;
    for (double v : x.value().data()) {
        total += v;
    }
    return x.tape().record(Tensor::scalar(total), {x}, [](const Tensor& up, auto grads) {
        if (grads[0] == nullptr) {
            return;
        }
        for (double& d : grads[0]->data()) {
            d += up[0];
        }
    });
}

} // namespace pathforget
