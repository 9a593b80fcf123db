#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "edlm/image.hpp"
#include "edlm/ops.hpp"
#include "edlm/rng.hpp"
#include "edlm/tensor.hpp"

namespace edlm {

enum class LayerKind { conv, relu, maxpool2, flatten, fully_connected, softmax };

/// One layer of a network description. Only the fields relevant to the kind
/// are meaningful.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    int out_channels = 0;  // conv
    int kernel = 0;        // conv, square
    int stride = 1;        // conv
    int padding = 0;       // conv
    int out_features = 0;  // fully_connected

    static LayerSpec Conv(int out_channels, int kernel = 3, int stride = 1, int padding = 1) {
        return {LayerKind::conv, out_channels, kernel, stride, padding, 0};
    }
    static LayerSpec Relu() { return {LayerKind::relu}; }
    static LayerSpec MaxPool2() { return {LayerKind::maxpool2}; }
    static LayerSpec Flatten() { return {LayerKind::flatten}; }
    static LayerSpec FullyConnected(int out_features) {
        LayerSpec s{LayerKind::fully_connected};
        s.out_features = out_features;
        return s;
    }
    static LayerSpec Softmax() { return {LayerKind::softmax}; }

    bool has_params() const {
        return kind == LayerKind::conv || kind == LayerKind::fully_connected;
    }

    bool operator==(const LayerSpec&) const = default;
};

/// Declarative network: input shape (H, W, C), ordered layers, class count.
struct NetworkSpec {
    std::array<int, 3> input_shape{0, 0, 0};
    std::vector<LayerSpec> layers;
    int num_classes = 5;

    bool operator==(const NetworkSpec&) const = default;
};

/// Per-layer output shapes in layer order. Throws ShapeError naming the layer
/// index on extent underflow or inconsistent wiring.
std::vector<std::vector<int>> infer_shapes(const NetworkSpec& spec);

/// Validates wiring: shapes must infer, softmax may only be the final layer,
/// and the final output length must equal num_classes.
void validate_spec(const NetworkSpec& spec);

/// The default stacked architecture: five conv blocks of widths
/// 64, 128, 256, 512, 512 with 2, 2, 3, 3, 3 conv layers each (3x3 kernels,
/// stride 1, pad 1, ReLU after every conv, 2x2 max pool after every block),
/// then Flatten, FC(4096), ReLU, FC(num_classes), Softmax.
NetworkSpec edlm_default_spec(std::array<int, 3> input_shape, int num_classes = 5);

/// The compact five-block variant: one Conv(32, 3x3, stride 1, pad 1) + ReLU
/// + MaxPool2 per block, then Flatten, FC(num_classes), Softmax. Suited to
/// desk-scale training.
NetworkSpec edlm_compact_spec(std::array<int, 3> input_shape, int num_classes = 5);

/// Human-readable, line-oriented form of a NetworkSpec; round-trips through
/// spec_from_text. Also embedded in checkpoints.
std::string spec_to_text(const NetworkSpec& spec);
NetworkSpec spec_from_text(const std::string& text);

/// Converts an 8-bit RGB image into the network input tensor, scaled to
/// [0, 1].
template <typename T>
Tensor<T> image_to_input(const ImageU8& img) {
    Tensor<T> t({img.height, img.width, 3});
    for (std::size_t i = 0; i < img.data.size(); ++i)
        t[i] = static_cast<T>(img.data[i]) / T(255);
    return t;
}

/// Weight/bias pair of one layer; both tensors are empty for layers without
/// parameters.
template <typename T>
struct LayerParams {
    Tensor<T> weights;
    Tensor<T> bias;
    bool empty() const { return weights.size() == 0; }
};

/// Learnable state, index-aligned with NetworkSpec::layers.
template <typename T>
struct Parameters {
    std::vector<LayerParams<T>> layers;
};

/// Expected weight/bias shapes per layer (empty vectors for layers without
/// parameters). Conv weights are kh x kw x C x K, FC weights N x M.
std::vector<std::pair<std::vector<int>, std::vector<int>>> parameter_shapes(
    const NetworkSpec& spec);

/// Draws every weight and bias i.i.d. from Normal(0, variance 0.05) using the
/// seeded deterministic generator; same seed, same bits.
template <typename T>
Parameters<T> init_parameters(const NetworkSpec& spec, std::uint64_t seed) {
    const double stddev = std::sqrt(0.05);
    Rng rng(seed);
    Parameters<T> params;
    for (const auto& [wshape, bshape] : parameter_shapes(spec)) {
        LayerParams<T> lp;
        if (!wshape.empty()) {
            lp.weights = Tensor<T>(wshape);
            for (std::size_t i = 0; i < lp.weights.size(); ++i)
                lp.weights[i] = static_cast<T>(rng.normal(0.0, stddev));
            lp.bias = Tensor<T>(bshape);
            for (std::size_t i = 0; i < lp.bias.size(); ++i)
                lp.bias[i] = static_cast<T>(rng.normal(0.0, stddev));
        }
        params.layers.push_back(std::move(lp));
    }
    return params;
}

template <typename T>
void check_params_match(const NetworkSpec& spec, const Parameters<T>& params) {
    const auto expected = parameter_shapes(spec);
    if (params.layers.size() != expected.size())
        throw ShapeError("parameter set has " + std::to_string(params.layers.size()) +
                         " layers, spec has " + std::to_string(expected.size()));
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& [wshape, bshape] = expected[i];
        const auto& lp = params.layers[i];
        if (wshape.empty()) {
            if (!lp.empty())
                throw ShapeError("layer " + std::to_string(i) + " should have no parameters");
            continue;
        }
        if (lp.weights.shape() != wshape || lp.bias.shape() != bshape)
            throw ShapeError("layer " + std::to_string(i) + " parameter shapes " +
                             shape_to_string(lp.weights.shape()) + "/" +
                             shape_to_string(lp.bias.shape()) + " do not match spec " +
                             shape_to_string(wshape) + "/" + shape_to_string(bshape));
    }
}

/// Cached intermediates of one forward pass; consumed by backward.
template <typename T>
struct Tape {
    std::vector<Tensor<T>> inputs;                     // input of each layer
    std::vector<std::vector<std::int32_t>> pool_args;  // per maxpool layer
    Tensor<T> output;                                  // final activation
};

/// Runs the layers in order. Input shape must equal spec.input_shape and the
/// caller provides values scaled to [0, 1] for image data. When tape is given
/// the intermediates needed by backward are cached.
template <typename T>
Tensor<T> forward(const NetworkSpec& spec, const Parameters<T>& params, const Tensor<T>& input,
                  Tape<T>* tape = nullptr) {
    check_params_match(spec, params);
    const std::vector<int> in_shape{spec.input_shape[0], spec.input_shape[1],
                                    spec.input_shape[2]};
    if (input.shape() != in_shape)
        throw ShapeError("forward input shape " + shape_to_string(input.shape()) +
                         " != spec input " + shape_to_string(in_shape));
    if (tape) {
        tape->inputs.clear();
        tape->pool_args.assign(spec.layers.size(), {});
    }

    Tensor<T> x = input;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (tape) tape->inputs.push_back(x);
        const LayerSpec& layer = spec.layers[i];
        switch (layer.kind) {
            case LayerKind::conv: {
                ConvGeometry geom{layer.kernel, layer.kernel, layer.stride, layer.padding};
                x = conv2d(x, params.layers[i].weights, params.layers[i].bias, geom);
                break;
            }
            case LayerKind::relu:
                x = relu(x);
                break;
            case LayerKind::maxpool2: {
                auto pooled = maxpool2(x);
                if (tape) tape->pool_args[i] = std::move(pooled.arg_indices);
                x = std::move(pooled.output);
                break;
            }
            case LayerKind::flatten:
                x = x.reshaped({static_cast<int>(x.size())});
                break;
            case LayerKind::fully_connected:
                x = fully_connected(x, params.layers[i].weights, params.layers[i].bias);
                break;
            case LayerKind::softmax:
                x = softmax(x);
                break;
        }
    }
    if (tape) tape->output = x;
    return x;
}

/// Parameter gradients plus the gradient with respect to the network input.
template <typename T>
struct Gradients {
    Parameters<T> params;
    Tensor<T> input;
};

namespace detail {

template <typename T>
void check_tape(const NetworkSpec& spec, const Parameters<T>& params, const Tape<T>& tape) {
    check_params_match(spec, params);
    if (tape.inputs.size() != spec.layers.size() || tape.pool_args.size() != spec.layers.size())
        throw Error("stale tape: layer count changed since forward");
    const std::vector<int> in_shape{spec.input_shape[0], spec.input_shape[1],
                                    spec.input_shape[2]};
    if (tape.inputs.empty() || tape.inputs.front().shape() != in_shape)
        throw Error("stale tape: input shape changed since forward");
}

/// Walks layers [0, last] in reverse given the gradient flowing into the
/// output of layer `last`.
template <typename T>
Gradients<T> backprop_from(const NetworkSpec& spec, const Parameters<T>& params,
                           const Tape<T>& tape, Tensor<T> grad, std::ptrdiff_t last) {
    Gradients<T> result;
    result.params.layers.resize(spec.layers.size());
    for (std::ptrdiff_t idx = last; idx >= 0; --idx) {
        const LayerSpec& layer = spec.layers[static_cast<std::size_t>(idx)];
        const Tensor<T>& x = tape.inputs[static_cast<std::size_t>(idx)];
        switch (layer.kind) {
            case LayerKind::conv: {
                ConvGeometry geom{layer.kernel, layer.kernel, layer.stride, layer.padding};
                Tensor<T> gx, gw, gb;
                const auto ui = static_cast<std::size_t>(idx);
                conv2d_backward(x, params.layers[ui].weights, geom, grad, gx, gw, gb);
                result.params.layers[ui] = {std::move(gw), std::move(gb)};
                grad = std::move(gx);
                break;
            }
            case LayerKind::relu:
                grad = relu_backward(x, grad);
                break;
            case LayerKind::maxpool2:
                grad = maxpool2_backward(x.shape(), tape.pool_args[static_cast<std::size_t>(idx)], grad);
                break;
            case LayerKind::flatten:
                grad = grad.reshaped(x.shape());
                break;
            case LayerKind::fully_connected: {
                Tensor<T> gx, gw, gb;
                const auto ui = static_cast<std::size_t>(idx);
                fully_connected_backward(x, params.layers[ui].weights, grad, gx, gw, gb);
                result.params.layers[ui] = {std::move(gw), std::move(gb)};
                grad = std::move(gx);
                break;
            }
            case LayerKind::softmax:
                grad = softmax_backward(tape.output, grad);
                break;
        }
    }
    result.input = std::move(grad);
    return result;
}

}  // namespace detail

/// Reverse-mode sweep from an arbitrary upstream gradient at the network
/// output. Returns dLoss/dParam for every layer and dLoss/dInput.
template <typename T>
Gradients<T> backward(const NetworkSpec& spec, const Parameters<T>& params, const Tape<T>& tape,
                      const Tensor<T>& upstream) {
    detail::check_tape(spec, params, tape);
    if (!upstream.same_shape(tape.output))
        throw ShapeError("backward upstream shape " + shape_to_string(upstream.shape()) +
                         " != forward output " + shape_to_string(tape.output.shape()));
    return detail::backprop_from(spec, params, tape, upstream,
                                 static_cast<std::ptrdiff_t>(spec.layers.size()) - 1);
}

/// Reverse-mode sweep seeded by the cross-entropy loss against a one-hot
/// label. When the final layer is softmax the loss gradient is fused at the
/// logits (numerically stable under saturation); otherwise the chain starts
/// from dLoss/dScores.
template <typename T>
Gradients<T> backward_from_loss(const NetworkSpec& spec, const Parameters<T>& params,
                                const Tape<T>& tape, const Tensor<T>& labels, LossForm form) {
    detail::check_tape(spec, params, tape);
    if (spec.layers.empty()) throw ShapeError("network has no layers");
    if (spec.layers.back().kind == LayerKind::softmax) {
        Tensor<T> dlogits = softmax_xent_backward(labels, tape.output, form);
        return detail::backprop_from(spec, params, tape, std::move(dlogits),
                                     static_cast<std::ptrdiff_t>(spec.layers.size()) - 2);
    }
    Tensor<T> dscores = cross_entropy_backward(labels, tape.output, form);
    return detail::backprop_from(spec, params, tape, std::move(dscores),
                                 static_cast<std::ptrdiff_t>(spec.layers.size()) - 1);
}

}  // namespace edlm
