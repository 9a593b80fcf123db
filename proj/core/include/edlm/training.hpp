#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "edlm/metrics.hpp"
#include "edlm/model.hpp"
#include "edlm/rng.hpp"

namespace edlm {

enum class SamplingMode { uniform, informative };

struct TrainConfig {
    double learning_rate = 0.001;
    double weight_decay = 5e-5;
    int batch_size = 1;
    int epochs = 10;
    std::uint64_t seed = 0;
    SamplingMode sampling = SamplingMode::uniform;
    LossForm loss = LossForm::binary_sum;
    // Per-tensor trust cap: one step may move a weight or bias tensor by at
    // most clip_ratio * max(||tensor||, 1) in L2 norm; 0 disables. The
    // Normal(0, 0.05) initialization saturates deeper nets at the start of
    // training and the resulting steps on the classifier layer are orders of
    // magnitude too large for a constant learning rate without this guard.
    double clip_ratio = 0.01;

    void validate() const {
        if (!(learning_rate > 0)) throw ValueError("learning_rate must be > 0");
        if (weight_decay < 0) throw ValueError("weight_decay must be >= 0");
        if (batch_size < 1) throw ValueError("batch_size must be >= 1");
        if (epochs < 0) throw ValueError("epochs must be >= 0");
        if (clip_ratio < 0) throw ValueError("clip_ratio must be >= 0");
    }
};

struct EpochStats {
    double mean_loss = 0.0;
    double accuracy = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;

    /// One record per line: epoch,loss,accuracy,seconds.
    std::string to_lines() const {
        std::ostringstream out;
        out << "epoch,loss,accuracy,seconds\n";
        out.precision(9);
        for (std::size_t i = 0; i < epochs.size(); ++i)
            out << i << ',' << epochs[i].mean_loss << ',' << epochs[i].accuracy << ','
                << epochs[i].seconds << '\n';
        return out.str();
    }
};

/// w <- w - lr * (g + weight_decay * w) for weights; biases skip the decay
/// term. Throws on shape mismatch or non-finite gradients.
template <typename T>
void sgd_step(Parameters<T>& params, const Parameters<T>& grads, double lr,
              double weight_decay) {
    if (params.layers.size() != grads.layers.size())
        throw ShapeError("sgd_step: gradient layer count mismatch");
    for (std::size_t li = 0; li < params.layers.size(); ++li) {
        auto& lp = params.layers[li];
        const auto& lg = grads.layers[li];
        if (lp.empty() != lg.empty() ||
            (!lp.empty() && (!lp.weights.same_shape(lg.weights) || !lp.bias.same_shape(lg.bias))))
            throw ShapeError("sgd_step: gradient shapes do not match parameters at layer " +
                             std::to_string(li));
        if (lp.empty()) continue;
        for (std::size_t i = 0; i < lg.weights.size(); ++i)
            if (!std::isfinite(static_cast<double>(lg.weights[i])))
                throw NumericError("non-finite weight gradient at layer " + std::to_string(li));
        for (std::size_t i = 0; i < lg.bias.size(); ++i)
            if (!std::isfinite(static_cast<double>(lg.bias[i])))
                throw NumericError("non-finite bias gradient at layer " + std::to_string(li));
        for (std::size_t i = 0; i < lp.weights.size(); ++i)
            lp.weights[i] -= static_cast<T>(lr * (static_cast<double>(lg.weights[i]) +
                                                  weight_decay *
                                                      static_cast<double>(lp.weights[i])));
        for (std::size_t i = 0; i < lp.bias.size(); ++i)
            lp.bias[i] -= static_cast<T>(lr * static_cast<double>(lg.bias[i]));
    }
}

/// Uniform Fisher-Yates permutation of 0..n-1 from the given generator.
inline std::vector<int> shuffle_epoch(int n, Rng& rng) {
    if (n < 1) throw ValueError("shuffle_epoch needs n >= 1");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
    return order;
}

/// weight_i = loss_i / sum(loss); uniform when every loss is zero.
inline std::vector<double> update_sample_weights(const std::vector<double>& per_sample_losses) {
    if (per_sample_losses.empty()) throw ValueError("no sample losses given");
    double total = 0.0;
    for (double l : per_sample_losses) {
        if (!(l >= 0.0)) throw ValueError("sample losses must be finite and >= 0");
        total += l;
    }
    std::vector<double> weights(per_sample_losses.size());
    if (total == 0.0) {
        const double u = 1.0 / static_cast<double>(weights.size());
        for (double& w : weights) w = u;
    } else {
        for (std::size_t i = 0; i < weights.size(); ++i)
            weights[i] = per_sample_losses[i] / total;
    }
    return weights;
}

namespace detail {

/// n multinomial draws (with replacement) proportional to weights.
inline std::vector<int> draw_informative(const std::vector<double>& weights, int n, Rng& rng) {
    std::vector<double> cdf(weights.size());
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cum += weights[i];
        cdf[i] = cum;
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double u = rng.real01() * cum;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        order[static_cast<std::size_t>(i)] =
            static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()),
                                                   cdf.size() - 1));
    }
    return order;
}

template <typename T>
void accumulate(Parameters<T>& acc, const Parameters<T>& grads) {
    if (acc.layers.empty()) {
        acc = grads;
        return;
    }
    for (std::size_t li = 0; li < acc.layers.size(); ++li) {
        if (acc.layers[li].empty()) continue;
        for (std::size_t i = 0; i < acc.layers[li].weights.size(); ++i)
            acc.layers[li].weights[i] += grads.layers[li].weights[i];
        for (std::size_t i = 0; i < acc.layers[li].bias.size(); ++i)
            acc.layers[li].bias[i] += grads.layers[li].bias[i];
    }
}

template <typename T>
void scale(Parameters<T>& params, T factor) {
    for (auto& lp : params.layers) {
        for (std::size_t i = 0; i < lp.weights.size(); ++i) lp.weights[i] *= factor;
        for (std::size_t i = 0; i < lp.bias.size(); ++i) lp.bias[i] *= factor;
    }
}

template <typename T>
double l2_norm(const Tensor<T>& t) {
    double sq = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        sq += static_cast<double>(t[i]) * static_cast<double>(t[i]);
    return std::sqrt(sq);
}

/// Per-tensor trust cap: rescales each gradient tensor so the upcoming step
/// lr * g moves its parameter tensor by at most ratio * max(||w||, 1).
template <typename T>
void clip_step_ratio(Parameters<T>& grads, const Parameters<T>& params, double lr,
                     double ratio) {
    if (ratio <= 0) return;
    for (std::size_t li = 0; li < grads.layers.size(); ++li) {
        if (grads.layers[li].empty()) continue;
        for (int part = 0; part < 2; ++part) {
            Tensor<T>& g = part == 0 ? grads.layers[li].weights : grads.layers[li].bias;
            const Tensor<T>& w =
                part == 0 ? params.layers[li].weights : params.layers[li].bias;
            const double cap = ratio * std::max(l2_norm(w), 1.0);
            const double step = lr * l2_norm(g);
            if (step > cap) {
                const T factor = static_cast<T>(cap / step);
                for (std::size_t i = 0; i < g.size(); ++i) g[i] *= factor;
            }
        }
    }
}

}  // namespace detail

template <typename T>
struct TrainResult {
    Parameters<T> params;
    TrainHistory history;
};

template <typename T>
Tensor<T> one_hot(int label, int classes) {
    Tensor<T> t({classes});
    t(label) = T(1);
    return t;
}

/// Per-sample (or mini-batch) SGD over the dataset. Each epoch shuffles (or
/// draws loss-proportional samples in informative mode), runs
/// forward -> loss -> backward -> sgd_step per batch, and records mean loss
/// and accuracy over the visited samples. Fully deterministic given the seed.
template <typename T>
TrainResult<T> train(const std::vector<Tensor<T>>& images, const std::vector<int>& labels,
                     const NetworkSpec& spec, const TrainConfig& config) {
    config.validate();
    if (images.empty() || images.size() != labels.size())
        throw ValueError("training set is empty or image/label counts differ");
    for (int label : labels)
        if (label < 0 || label >= spec.num_classes)
            throw ValueError("label " + std::to_string(label) + " outside [0, " +
                             std::to_string(spec.num_classes) + ")");

    TrainResult<T> result;
    result.params = init_parameters<T>(spec, config.seed);
    const int n = static_cast<int>(images.size());
    Rng order_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<double> last_losses(images.size(), 0.0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        std::vector<int> order;
        if (config.sampling == SamplingMode::uniform) {
            order = shuffle_epoch(n, order_rng);
        } else {
            const auto weights = update_sample_weights(last_losses);
            order = detail::draw_informative(weights, n, order_rng);
        }

        double loss_sum = 0.0;
        long long correct = 0;
        std::size_t cursor = 0;
        int batch_index = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(cursor + static_cast<std::size_t>(config.batch_size), order.size());
            Parameters<T> grad_acc;
            const int batch_n = static_cast<int>(batch_end - cursor);
            for (; cursor < batch_end; ++cursor) {
                const int idx = order[cursor];
                Tape<T> tape;
                const Tensor<T> probs = forward(spec, result.params, images[static_cast<std::size_t>(idx)], &tape);
                const Tensor<T> label = one_hot<T>(labels[static_cast<std::size_t>(idx)], spec.num_classes);
                const double loss = cross_entropy(label, probs, config.loss);
                if (!std::isfinite(loss))
                    throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(batch_index));
                loss_sum += loss;
                last_losses[static_cast<std::size_t>(idx)] = loss;
                int argmax = 0;
                for (int k = 1; k < spec.num_classes; ++k)
                    if (probs(k) > probs(argmax)) argmax = k;
                correct += argmax == labels[static_cast<std::size_t>(idx)];
                Gradients<T> grads =
                    backward_from_loss(spec, result.params, tape, label, config.loss);
                detail::accumulate(grad_acc, grads.params);
            }
            if (batch_n > 1) detail::scale(grad_acc, T(1) / static_cast<T>(batch_n));
            detail::clip_step_ratio(grad_acc, result.params, config.learning_rate,
                                    config.clip_ratio);
            sgd_step(result.params, grad_acc, config.learning_rate, config.weight_decay);
            ++batch_index;
        }

        EpochStats stats;
        stats.mean_loss = loss_sum / static_cast<double>(order.size());
        stats.accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.history.epochs.push_back(stats);
    }
    return result;
}

/// Argmax predictions over a labelled set, tallied into a confusion matrix.
template <typename T>
ConfusionMatrix evaluate(const NetworkSpec& spec, const Parameters<T>& params,
                         const std::vector<Tensor<T>>& images, const std::vector<int>& labels) {
    if (images.size() != labels.size())
        throw ValueError("evaluate: image/label counts differ");
    std::vector<int> predicted;
    predicted.reserve(images.size());
    for (const auto& img : images) {
        const Tensor<T> probs = forward(spec, params, img);
        int argmax = 0;
        for (int k = 1; k < spec.num_classes; ++k)
            if (probs(k) > probs(argmax)) argmax = k;
        predicted.push_back(argmax);
    }
    return confusion_matrix(predicted, labels, spec.num_classes);
}

/// Macro F-measure over the confusion matrix, undefined classes excluded.
inline double macro_f_measure(const ConfusionMatrix& cm) {
    std::vector<std::optional<double>> per_class;
    for (int k = 0; k < cm.classes(); ++k) per_class.push_back(class_metrics(cm, k).f_measure);
    return macro_average(per_class).value;
}

struct GridSearchResult {
    int best_index = 0;
    TrainConfig best;
    std::vector<double> validation_scores;
};

/// Step 1: stratified train/validation split. Step 2: train each candidate.
/// Step 3: keep the config with the best validation macro F-measure, ties
/// resolved toward the lower index. Deterministic given the seed.
template <typename T>
GridSearchResult grid_search(const NetworkSpec& spec, const std::vector<Tensor<T>>& images,
                             const std::vector<int>& labels,
                             const std::vector<TrainConfig>& configs, double split_fraction,
                             std::uint64_t seed) {
    if (configs.empty()) throw ValueError("grid_search needs at least one config");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw ValueError("split_fraction must be in (0, 1)");

    // Per-class shuffled validation pick, mirroring the dataset-level split.
    Rng rng(seed);
    std::vector<bool> in_val(images.size(), false);
    for (int cls = 0; cls < spec.num_classes; ++cls) {
        std::vector<std::size_t> indices;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) indices.push_back(i);
        for (std::size_t i = indices.size(); i > 1; --i)
            std::swap(indices[i - 1], indices[rng.below(i)]);
        const auto take = static_cast<std::size_t>(
            std::lround(static_cast<double>(indices.size()) * split_fraction));
        for (std::size_t i = 0; i < take && i < indices.size(); ++i) in_val[indices[i]] = true;
    }
    std::vector<Tensor<T>> train_images, val_images;
    std::vector<int> train_labels, val_labels;
    for (std::size_t i = 0; i < images.size(); ++i) {
        (in_val[i] ? val_images : train_images).push_back(images[i]);
        (in_val[i] ? val_labels : train_labels).push_back(labels[i]);
    }
    if (train_images.empty() || val_images.empty())
        throw ValueError("grid_search split left an empty train or validation set");

    GridSearchResult result;
    double best_score = -1.0;
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        double score;
        try {
            const TrainResult<T> trained = train(train_images, train_labels, spec, configs[ci]);
            score = macro_f_measure(evaluate(spec, trained.params, val_images, val_labels));
        } catch (const NumericError&) {
            score = -1.0;  // diverged candidates lose to anything that finished
        } catch (const ValueError&) {
            score = -1.0;  // e.g. every validation metric undefined
        }
        result.validation_scores.push_back(score);
        if (score > best_score) {
            best_score = score;
            result.best_index = static_cast<int>(ci);
        }
    }
    result.best = configs[static_cast<std::size_t>(result.best_index)];
    return result;
}

}  // namespace edlm
