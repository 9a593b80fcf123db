#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "edlm/tensor.hpp"

namespace edlm {

/// Loss flavours. binary_sum applies -sum_i [l_i log s_i + (1-l_i) log(1-s_i)]
/// across all components of a one-hot label; categorical is -sum_i l_i log s_i.
enum class LossForm { binary_sum, categorical };

/// Clamp floor for log arguments.
inline constexpr double kLogEps = 1e-12;

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void check_conv_args(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias,
                     const ConvGeometry& geom) {
    geom.validate();
    if (input.rank() != 3)
        throw ShapeError("conv2d input must be HxWxC, got " + shape_to_string(input.shape()));
    if (kernels.rank() != 4)
        throw ShapeError("conv2d kernels must be kh x kw x C x K, got " +
                         shape_to_string(kernels.shape()));
    if (kernels.extent(0) != geom.kernel_h || kernels.extent(1) != geom.kernel_w)
        throw ShapeError("kernel tensor " + shape_to_string(kernels.shape()) +
                         " does not match geometry kernel " + std::to_string(geom.kernel_h) +
                         "x" + std::to_string(geom.kernel_w));
    if (kernels.extent(2) != input.extent(2))
        throw ShapeError("kernel channel count " + std::to_string(kernels.extent(2)) +
                         " != input channel count " + std::to_string(input.extent(2)));
    if (bias.rank() != 1 || bias.extent(0) != kernels.extent(3))
        throw ShapeError("bias shape " + shape_to_string(bias.shape()) +
                         " does not match output channels " + std::to_string(kernels.extent(3)));
    if (geom.out_extent(input.extent(0), geom.kernel_h) < 1 ||
        geom.out_extent(input.extent(1), geom.kernel_w) < 1)
        throw ShapeError("conv2d output extent underflows for input " +
                         shape_to_string(input.shape()));
}

}  // namespace detail

/// 2-D cross-correlation of an HxWxC input with kh x kw x C x K kernels,
/// zero padding on all sides. out[y,x,k] = sum input_pad[y*s+dy, x*s+dx, c]
/// * kernels[dy,dx,c,k] + bias[k].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias,
                 const ConvGeometry& geom) {
    detail::check_conv_args(input, kernels, bias, geom);
    const int h = input.extent(0), w = input.extent(1), c_in = input.extent(2);
    const int kh = geom.kernel_h, kw = geom.kernel_w, k_out = kernels.extent(3);
    const int oh = geom.out_extent(h, kh), ow = geom.out_extent(w, kw);

    Tensor<T> out({oh, ow, k_out});
    const T* in = input.data();
    const T* ker = kernels.data();
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            T* acc = &out(y, x, 0);
            for (int k = 0; k < k_out; ++k) acc[k] = bias(k);
            for (int dy = 0; dy < kh; ++dy) {
                const int iy = y * geom.stride + dy - geom.padding;
                if (iy < 0 || iy >= h) continue;
                for (int dx = 0; dx < kw; ++dx) {
                    const int ix = x * geom.stride + dx - geom.padding;
                    if (ix < 0 || ix >= w) continue;
                    const T* ip = &in[(static_cast<std::size_t>(iy) * w + ix) * c_in];
                    const T* kp = &ker[(static_cast<std::size_t>(dy) * kw + dx) * c_in * k_out];
                    for (int c = 0; c < c_in; ++c) {
                        const T v = ip[c];
                        const T* kc = kp + static_cast<std::size_t>(c) * k_out;
                        for (int k = 0; k < k_out; ++k) acc[k] += v * kc[k];
                    }
                }
            }
        }
    }
    return out;
}

/// Gradients of conv2d with respect to input, kernels and bias.
template <typename T>
void conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernels, const ConvGeometry& geom,
                     const Tensor<T>& grad_out, Tensor<T>& grad_input, Tensor<T>& grad_kernels,
                     Tensor<T>& grad_bias) {
    const int h = input.extent(0), w = input.extent(1), c_in = input.extent(2);
    const int kh = geom.kernel_h, kw = geom.kernel_w, k_out = kernels.extent(3);
    const int oh = grad_out.extent(0), ow = grad_out.extent(1);
    if (grad_out.extent(2) != k_out ||
        oh != geom.out_extent(h, kh) || ow != geom.out_extent(w, kw))
        throw ShapeError("conv2d_backward upstream shape " + shape_to_string(grad_out.shape()) +
                         " does not match forward output");

    grad_input = Tensor<T>(input.shape());
    grad_kernels = Tensor<T>(kernels.shape());
    grad_bias = Tensor<T>({k_out});

    const T* in = input.data();
    const T* ker = kernels.data();
    T* gin = grad_input.data();
    T* gker = grad_kernels.data();
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const T* g = &grad_out(y, x, 0);
            for (int k = 0; k < k_out; ++k) grad_bias(k) += g[k];
            for (int dy = 0; dy < kh; ++dy) {
                const int iy = y * geom.stride + dy - geom.padding;
                if (iy < 0 || iy >= h) continue;
                for (int dx = 0; dx < kw; ++dx) {
                    const int ix = x * geom.stride + dx - geom.padding;
                    if (ix < 0 || ix >= w) continue;
                    const std::size_t in_off = (static_cast<std::size_t>(iy) * w + ix) * c_in;
                    const std::size_t k_off =
                        (static_cast<std::size_t>(dy) * kw + dx) * c_in * k_out;
                    for (int c = 0; c < c_in; ++c) {
                        const T v = in[in_off + c];
                        const T* kc = &ker[k_off + static_cast<std::size_t>(c) * k_out];
                        T* gkc = &gker[k_off + static_cast<std::size_t>(c) * k_out];
                        T acc = 0;
                        for (int k = 0; k < k_out; ++k) {
                            acc += kc[k] * g[k];
                            gkc[k] += v * g[k];
                        }
                        gin[in_off + c] += acc;
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------

/// Elementwise max(0, x).
template <typename T>
Tensor<T> relu(const Tensor<T>& t) {
    Tensor<T> out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] > T(0) ? t[i] : T(0);
    return out;
}

/// Gate: upstream flows only where the forward input was positive.
/// (Subgradient at exactly zero is taken as zero.)
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream) {
    if (!input.same_shape(upstream))
        throw ShapeError("relu_backward shapes differ: " + shape_to_string(input.shape()) +
                         " vs " + shape_to_string(upstream.shape()));
    Tensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i)
        out[i] = input[i] > T(0) ? upstream[i] : T(0);
    return out;
}

// ---------------------------------------------------------------------------
// Max pooling (2x2, stride 2, no padding)
// ---------------------------------------------------------------------------

template <typename T>
struct MaxPoolResult {
    Tensor<T> output;
    /// Flat input index of the winning element per output element, in output
    /// iteration order (y, x, k). Feeds the backward routing.
    std::vector<std::int32_t> arg_indices;
};

/// Non-overlapping 2x2 max pooling. Odd trailing rows/columns are dropped.
template <typename T>
MaxPoolResult<T> maxpool2(const Tensor<T>& t) {
    if (t.rank() != 3)
        throw ShapeError("maxpool2 input must be HxWxK, got " + shape_to_string(t.shape()));
    const int h = t.extent(0), w = t.extent(1), k_ch = t.extent(2);
    if (h < 2 || w < 2)
        throw ShapeError("maxpool2 needs extents >= 2, got " + shape_to_string(t.shape()));
    const int oh = h / 2, ow = w / 2;

    MaxPoolResult<T> result{Tensor<T>({oh, ow, k_ch}), {}};
    result.arg_indices.resize(static_cast<std::size_t>(oh) * ow * k_ch);
    std::size_t cursor = 0;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            for (int k = 0; k < k_ch; ++k) {
                T best = t(2 * y, 2 * x, k);
                int by = 2 * y, bx = 2 * x;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const T v = t(2 * y + dy, 2 * x + dx, k);
                        if (v > best) {
                            best = v;
                            by = 2 * y + dy;
                            bx = 2 * x + dx;
                        }
                    }
                }
                result.output(y, x, k) = best;
                result.arg_indices[cursor++] =
                    static_cast<std::int32_t>((by * w + bx) * k_ch + k);
            }
        }
    }
    return result;
}

/// Routes the upstream gradient to the recorded argmax positions; every other
/// input position receives zero.
template <typename T>
Tensor<T> maxpool2_backward(const std::vector<int>& input_shape,
                            const std::vector<std::int32_t>& arg_indices,
                            const Tensor<T>& upstream) {
    Tensor<T> out(input_shape);
    if (arg_indices.size() != upstream.size())
        throw ShapeError("maxpool2_backward: " + std::to_string(arg_indices.size()) +
                         " arg indices vs upstream " + shape_to_string(upstream.shape()));
    for (std::size_t i = 0; i < upstream.size(); ++i)
        out[static_cast<std::size_t>(arg_indices[i])] += upstream[i];
    return out;
}

// ---------------------------------------------------------------------------
// Fully connected
// ---------------------------------------------------------------------------

/// out[m] = sum_n x[n] * weights[n,m] + bias[m]. x is used flattened.
template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias) {
    if (weights.rank() != 2)
        throw ShapeError("fully_connected weights must be NxM, got " +
                         shape_to_string(weights.shape()));
    const int n = weights.extent(0), m = weights.extent(1);
    if (static_cast<std::size_t>(n) != x.size())
        throw ShapeError("fully_connected input length " + std::to_string(x.size()) +
                         " != weight rows " + std::to_string(n));
    if (bias.rank() != 1 || bias.extent(0) != m)
        throw ShapeError("fully_connected bias shape " + shape_to_string(bias.shape()) +
                         " != output length " + std::to_string(m));

    Tensor<T> out({m});
    for (int j = 0; j < m; ++j) out(j) = bias(j);
    const T* wp = weights.data();
    for (int i = 0; i < n; ++i) {
        const T v = x[static_cast<std::size_t>(i)];
        const T* row = wp + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) out(j) += v * row[j];
    }
    return out;
}

template <typename T>
void fully_connected_backward(const Tensor<T>& x, const Tensor<T>& weights,
                              const Tensor<T>& upstream, Tensor<T>& grad_x,
                              Tensor<T>& grad_weights, Tensor<T>& grad_bias) {
    const int n = weights.extent(0), m = weights.extent(1);
    if (upstream.size() != static_cast<std::size_t>(m))
        throw ShapeError("fully_connected_backward upstream length " +
                         std::to_string(upstream.size()) + " != " + std::to_string(m));
    grad_x = Tensor<T>(x.shape());
    grad_weights = Tensor<T>(weights.shape());
    grad_bias = upstream.reshaped({m});
    const T* wp = weights.data();
    T* gw = grad_weights.data();
    for (int i = 0; i < n; ++i) {
        const T v = x[static_cast<std::size_t>(i)];
        const T* row = wp + static_cast<std::size_t>(i) * m;
        T* grow = gw + static_cast<std::size_t>(i) * m;
        T acc = 0;
        for (int j = 0; j < m; ++j) {
            acc += row[j] * upstream(j);
            grow[j] = v * upstream(j);
        }
        grad_x[static_cast<std::size_t>(i)] = acc;
    }
}

// ---------------------------------------------------------------------------
// Softmax
// ---------------------------------------------------------------------------

/// Max-subtracted softmax; entries land in (0, 1] and sum to 1 (up to float
/// rounding; fully saturated inputs can underflow entries to exact 0).
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    if (logits.size() == 0) throw ShapeError("softmax needs at least one logit");
    T maxv = logits[0];
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(static_cast<double>(logits[i])))
            throw NumericError("softmax input contains a non-finite value");
        maxv = std::max(maxv, logits[i]);
    }
    Tensor<T> out(logits.shape());
    T sum = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - maxv);
        sum += out[i];
    }
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
    return out;
}

/// Jacobian-vector product dz = (diag(s) - s s^T) g for s = softmax(z).
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& probs, const Tensor<T>& upstream) {
    if (!probs.same_shape(upstream))
        throw ShapeError("softmax_backward shapes differ");
    T dot = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) dot += probs[i] * upstream[i];
    Tensor<T> out(probs.shape());
    for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] * (upstream[i] - dot);
    return out;
}

// ---------------------------------------------------------------------------
// Cross entropy
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void check_xent_args(const Tensor<T>& labels, const Tensor<T>& scores) {
    if (!labels.same_shape(scores))
        throw ShapeError("cross_entropy label shape " + shape_to_string(labels.shape()) +
                         " != score shape " + shape_to_string(scores.shape()));
    int ones = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double l = static_cast<double>(labels[i]);
        if (l != 0.0 && l != 1.0) throw ValueError("labels must be one-hot");
        ones += l == 1.0;
        const double s = static_cast<double>(scores[i]);
        if (!(s >= -kLogEps && s <= 1.0 + kLogEps))
            throw ValueError("score " + std::to_string(s) + " outside [0, 1]");
    }
    if (ones != 1) throw ValueError("labels must be one-hot (exactly one 1)");
}

inline double clamped_log(double v) {
    return std::log(std::clamp(v, kLogEps, 1.0 - kLogEps));
}

}  // namespace detail

/// Cost of a probability vector against a one-hot label. The binary_sum form
/// runs the two-term expression over every component (0*log 0 taken as 0, log
/// arguments clamped to [1e-12, 1 - 1e-12]); categorical keeps only the
/// -l_i log s_i part. Result is >= 0 either way.
template <typename T>
double cross_entropy(const Tensor<T>& labels, const Tensor<T>& scores,
                     LossForm form = LossForm::binary_sum) {
    detail::check_xent_args(labels, scores);
    double cost = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double l = static_cast<double>(labels[i]);
        const double s = static_cast<double>(scores[i]);
        if (l != 0.0) cost -= l * detail::clamped_log(s);
        if (form == LossForm::binary_sum && l != 1.0)
            cost -= (1.0 - l) * detail::clamped_log(1.0 - s);
    }
    return std::max(cost, 0.0);
}

/// Gradient of cross_entropy with respect to the scores. Where the log clamp
/// is active the derivative is taken as zero (the clamped term is constant).
template <typename T>
Tensor<T> cross_entropy_backward(const Tensor<T>& labels, const Tensor<T>& scores,
                                 LossForm form = LossForm::binary_sum) {
    detail::check_xent_args(labels, scores);
    Tensor<T> grad(scores.shape());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double l = static_cast<double>(labels[i]);
        const double s = static_cast<double>(scores[i]);
        double g = 0.0;
        if (l != 0.0 && s > kLogEps && s < 1.0 - kLogEps) g -= l / s;
        if (form == LossForm::binary_sum && l != 1.0 && 1.0 - s > kLogEps &&
            1.0 - s < 1.0 - kLogEps)
            g += (1.0 - l) / (1.0 - s);
        grad[i] = static_cast<T>(g);
    }
    return grad;
}

/// Fused gradient of cross_entropy(softmax(z)) with respect to the logits z.
///
/// categorical: dC/dz = s - l exactly. binary_sum:
///   dC/dz_j = (s_j - l_j) + (1 - l_j) s_j - s_j * sum_{i != j} (1-l_i) s_i / (1-s_i)
/// with 1 - s_i evaluated as sum_{k != i} s_k. Both forms stay bounded even
/// when the softmax is fully saturated, unlike chaining through the Jacobian.
template <typename T>
Tensor<T> softmax_xent_backward(const Tensor<T>& labels, const Tensor<T>& probs,
                                LossForm form = LossForm::binary_sum) {
    detail::check_xent_args(labels, probs);
    const std::size_t m = probs.size();
    Tensor<T> grad(probs.shape());
    if (form == LossForm::categorical) {
        for (std::size_t i = 0; i < m; ++i)
            grad[i] = probs[i] - labels[i];
        return grad;
    }
    std::vector<double> s(m), denom(m);
    for (std::size_t i = 0; i < m; ++i) s[i] = static_cast<double>(probs[i]);
    for (std::size_t i = 0; i < m; ++i) {
        double d = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            if (k != i) d += s[k];
        denom[i] = d;
    }
    for (std::size_t j = 0; j < m; ++j) {
        const double lj = static_cast<double>(labels[j]);
        double g = (s[j] - lj) + (1.0 - lj) * s[j];
        for (std::size_t i = 0; i < m; ++i) {
            if (i == j || labels[i] != T(0)) continue;
            if (denom[i] > 0.0) g -= (s[j] / denom[i]) * s[i];
        }
        grad[j] = static_cast<T>(g);
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Central-difference gradient oracle:
/// g[i] = (loss(p + eps e_i) - loss(p - eps e_i)) / (2 eps).
/// The loss function is re-evaluated from scratch for every probe, so this
/// stays independent of any analytic backward path it is used to check.
template <typename T>
Tensor<T> finite_diff_grad(const std::function<double(const Tensor<T>&)>& loss_fn,
                           const Tensor<T>& params, double eps = 1e-5) {
    if (!(eps > 0)) throw ValueError("finite_diff_grad eps must be > 0");
    Tensor<T> grad(params.shape());
    Tensor<T> probe = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const T saved = probe[i];
        probe[i] = saved + static_cast<T>(eps);
        const double up = loss_fn(probe);
        probe[i] = saved - static_cast<T>(eps);
        const double down = loss_fn(probe);
        probe[i] = saved;
        grad[i] = static_cast<T>((up - down) / (2.0 * eps));
    }
    return grad;
}

/// Relative error used by the gradient-check suites:
/// |a - f| / max(|a|, |f|, 1e-6).
inline double grad_rel_err(double analytic, double fd) {
    const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
    return std::fabs(analytic - fd) / denom;
}

}  // namespace edlm
