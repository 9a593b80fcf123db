#include <doctest.h>

#include <cmath>
#include <map>

#include "edlm/dataset.hpp"
#include "edlm/training.hpp"

using namespace edlm;

namespace {

NetworkSpec tiny_fc_spec() {
    NetworkSpec spec;
    spec.input_shape = {1, 2, 1};
    spec.num_classes = 2;
    spec.layers = {LayerSpec::Flatten(), LayerSpec::FullyConnected(2), LayerSpec::Softmax()};
    validate_spec(spec);
    return spec;
}

std::pair<std::vector<TensorF>, std::vector<int>> tensors_from(
    const std::vector<SynthSample>& samples) {
    std::vector<TensorF> images;
    std::vector<int> labels;
    for (const auto& s : samples) {
        TensorF t({s.image.height, s.image.width, 3});
        for (std::size_t i = 0; i < s.image.data.size(); ++i)
            t[i] = static_cast<float>(s.image.data[i]) / 255.0F;
        images.push_back(std::move(t));
        labels.push_back(s.grade);
    }
    return {std::move(images), std::move(labels)};
}

}  // namespace

TEST_CASE("sgd_step arithmetic") {
    NetworkSpec spec = tiny_fc_spec();
    Parameters<double> params;
    params.layers.resize(3);
    params.layers[1].weights = TensorD({2, 2}, {1.0, 1.0, 1.0, 1.0});
    params.layers[1].bias = TensorD({2}, {1.0, 1.0});

    Parameters<double> grads = params;
    SUBCASE("zero gradients and zero decay leave parameters alone") {
        grads.layers[1].weights = TensorD({2, 2});
        grads.layers[1].bias = TensorD({2});
        sgd_step(params, grads, 0.1, 0.0);
        CHECK(params.layers[1].weights.values() == std::vector<double>{1, 1, 1, 1});
        CHECK(params.layers[1].bias.values() == std::vector<double>{1, 1});
    }
    SUBCASE("plain gradient step") {
        grads.layers[1].weights = TensorD({2, 2}, {0.5, 0.5, 0.5, 0.5});
        grads.layers[1].bias = TensorD({2});
        sgd_step(params, grads, 0.1, 0.0);
        for (double w : params.layers[1].weights.values()) CHECK(w == doctest::Approx(0.95));
    }
    SUBCASE("decay acts on weights, not biases") {
        grads.layers[1].weights = TensorD({2, 2});
        grads.layers[1].bias = TensorD({2});
        sgd_step(params, grads, 0.1, 0.1);
        for (double w : params.layers[1].weights.values()) CHECK(w == doctest::Approx(0.99));
        CHECK(params.layers[1].bias.values() == std::vector<double>{1, 1});
    }
    SUBCASE("non-finite gradients abort") {
        grads.layers[1].weights = TensorD({2, 2}, {0.0, std::nan(""), 0.0, 0.0});
        grads.layers[1].bias = TensorD({2});
        CHECK_THROWS_AS(sgd_step(params, grads, 0.1, 0.0), NumericError);
    }
    SUBCASE("shape mismatch is rejected") {
        grads.layers[1].weights = TensorD({2, 3});
        grads.layers[1].bias = TensorD({3});
        CHECK_THROWS_AS(sgd_step(params, grads, 0.1, 0.0), ShapeError);
    }
}

TEST_CASE("weight magnitude shrinks by (1 - lr*wd) per zero-gradient step") {
    Parameters<double> params;
    params.layers.resize(1);
    params.layers[0].weights = TensorD({2}, {2.0, -3.0});
    params.layers[0].bias = TensorD({1}, {4.0});
    Parameters<double> zero = params;
    zero.layers[0].weights = TensorD({2});
    zero.layers[0].bias = TensorD({1});

    double expected0 = 2.0, expected1 = -3.0;
    for (int step = 0; step < 5; ++step) {
        const double before0 = std::fabs(params.layers[0].weights(0));
        sgd_step(params, zero, 0.05, 0.5);
        expected0 *= 1.0 - 0.05 * 0.5;
        expected1 *= 1.0 - 0.05 * 0.5;
        CHECK(params.layers[0].weights(0) == doctest::Approx(expected0).epsilon(1e-12));
        CHECK(params.layers[0].weights(1) == doctest::Approx(expected1).epsilon(1e-12));
        CHECK(std::fabs(params.layers[0].weights(0)) < before0);
    }
    CHECK(params.layers[0].bias(0) == 4.0);
}

TEST_CASE("shuffle_epoch basics") {
    Rng rng(5);
    CHECK(shuffle_epoch(1, rng) == std::vector<int>{0});

    Rng a(9), b(9);
    CHECK(shuffle_epoch(100, a) == shuffle_epoch(100, b));

    CHECK_THROWS_AS(shuffle_epoch(0, rng), ValueError);
}

TEST_CASE("shuffle_epoch visits all permutations of four uniformly") {
    Rng rng(2718);
    std::map<std::vector<int>, int> counts;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) ++counts[shuffle_epoch(4, rng)];
    CHECK(counts.size() == 24);
    for (const auto& [perm, count] : counts) {
        const double freq = static_cast<double>(count) / trials;
        CHECK(freq >= 1.0 / 24.0 - 0.01);
        CHECK(freq <= 1.0 / 24.0 + 0.01);
    }
}

TEST_CASE("update_sample_weights") {
    CHECK(update_sample_weights({1, 1, 1, 1}) == std::vector<double>{0.25, 0.25, 0.25, 0.25});
    CHECK(update_sample_weights({3, 1}) == std::vector<double>{0.75, 0.25});
    CHECK(update_sample_weights({0, 0}) == std::vector<double>{0.5, 0.5});
    CHECK_THROWS_AS(update_sample_weights({1, -2}), ValueError);
    CHECK_THROWS_AS(update_sample_weights({}), ValueError);

    // weights always sum to one
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> losses;
        for (int i = 0; i < rng.uniform_int(1, 40); ++i) losses.push_back(rng.uniform(0, 9));
        const auto weights = update_sample_weights(losses);
        double sum = 0.0;
        for (double w : weights) sum += w;
        CHECK(std::fabs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("train with zero epochs returns the initial parameters") {
    const NetworkSpec spec = tiny_fc_spec();
    std::vector<TensorF> images{TensorF({1, 2, 1}, {0.5F, 0.25F})};
    std::vector<int> labels{1};
    TrainConfig config;
    config.epochs = 0;
    config.seed = 31;
    const auto result = train(images, labels, spec, config);
    const auto fresh = init_parameters<float>(spec, 31);
    CHECK(result.params.layers[1].weights.values() == fresh.layers[1].weights.values());
    CHECK(result.params.layers[1].bias.values() == fresh.layers[1].bias.values());
    CHECK(result.history.epochs.empty());
}

TEST_CASE("one SGD step matches the hand-applied closed-form update") {
    const NetworkSpec spec = tiny_fc_spec();
    const TensorF x({1, 2, 1}, {1.0F, 2.0F});
    const std::vector<TensorF> images{x};
    const std::vector<int> labels{0};

    for (LossForm form : {LossForm::categorical, LossForm::binary_sum}) {
        TrainConfig config;
        config.epochs = 1;
        config.seed = 12;
        config.learning_rate = 0.1;
        config.weight_decay = 0.0;
        config.loss = form;
        config.clip_ratio = 0.0;  // test the bare update rule

        const Parameters<float> w0 = init_parameters<float>(spec, config.seed);
        // forward by hand: z = x W + b, s = softmax(z)
        const TensorF z = fully_connected(TensorF({2}, {1.0F, 2.0F}), w0.layers[1].weights,
                                          w0.layers[1].bias);
        const TensorF s = softmax(z);
        // closed-form logit gradient: s - l for categorical, doubled for the
        // two-class binary-sum loss
        const float scale = form == LossForm::categorical ? 1.0F : 2.0F;
        const float g0 = scale * (s(0) - 1.0F);
        const float g1 = scale * s(1);

        const auto result = train(images, labels, spec, config);
        for (int n = 0; n < 2; ++n) {
            const float xn = n == 0 ? 1.0F : 2.0F;
            CHECK(result.params.layers[1].weights(n, 0) ==
                  doctest::Approx(w0.layers[1].weights(n, 0) - 0.1F * g0 * xn).epsilon(1e-5));
            CHECK(result.params.layers[1].weights(n, 1) ==
                  doctest::Approx(w0.layers[1].weights(n, 1) - 0.1F * g1 * xn).epsilon(1e-5));
        }
        CHECK(result.params.layers[1].bias(0) ==
              doctest::Approx(w0.layers[1].bias(0) - 0.1F * g0).epsilon(1e-5));
    }
}

TEST_CASE("train rejects bad labels and empty datasets") {
    const NetworkSpec spec = tiny_fc_spec();
    TrainConfig config;
    CHECK_THROWS_AS(train<float>({}, {}, spec, config), ValueError);
    CHECK_THROWS_AS(train<float>({TensorF({1, 2, 1})}, {7}, spec, config), ValueError);
}

TEST_CASE("training is deterministic and the loss trends down") {
    const auto samples = synth_dataset(4, 32, 20240101);
    const auto [images, labels] = tensors_from(samples);
    const NetworkSpec spec = edlm_compact_spec({32, 32, 3}, 5);

    TrainConfig config;
    config.epochs = 3;
    config.seed = 5;

    const auto first = train(images, labels, spec, config);
    const auto second = train(images, labels, spec, config);
    for (std::size_t li = 0; li < first.params.layers.size(); ++li) {
        CHECK(first.params.layers[li].weights.values() ==
              second.params.layers[li].weights.values());
        CHECK(first.params.layers[li].bias.values() == second.params.layers[li].bias.values());
    }
    REQUIRE(first.history.epochs.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) {
        CHECK(first.history.epochs[e].mean_loss == second.history.epochs[e].mean_loss);
        CHECK(first.history.epochs[e].accuracy == second.history.epochs[e].accuracy);
    }
    CHECK(first.history.epochs.back().mean_loss < first.history.epochs.front().mean_loss);
}

TEST_CASE("informative sampling trains deterministically") {
    const auto samples = synth_dataset(2, 32, 60);
    const auto [images, labels] = tensors_from(samples);
    const NetworkSpec spec = edlm_compact_spec({32, 32, 3}, 5);

    TrainConfig config;
    config.epochs = 2;
    config.seed = 8;
    config.sampling = SamplingMode::informative;

    const auto first = train(images, labels, spec, config);
    const auto second = train(images, labels, spec, config);
    for (std::size_t li = 0; li < first.params.layers.size(); ++li)
        CHECK(first.params.layers[li].weights.values() ==
              second.params.layers[li].weights.values());
}

TEST_CASE("history serializes one record per line") {
    TrainHistory history;
    history.epochs.push_back({1.25, 0.5, 2.0});
    history.epochs.push_back({0.75, 0.625, 2.5});
    const std::string lines = history.to_lines();
    CHECK(lines == "epoch,loss,accuracy,seconds\n0,1.25,0.5,2\n1,0.75,0.625,2.5\n");
}

TEST_CASE("grid_search selection rules") {
    const auto samples = synth_dataset(4, 32, 99);
    const auto [images, labels] = tensors_from(samples);
    const NetworkSpec spec = edlm_compact_spec({32, 32, 3}, 5);

    TrainConfig base;
    base.epochs = 2;
    base.seed = 3;

    SUBCASE("a single config wins by default") {
        const auto result = grid_search(spec, images, labels, {base}, 0.25, 17);
        CHECK(result.best_index == 0);
        CHECK(result.validation_scores.size() == 1);
    }

    SUBCASE("ties break toward the lower index") {
        const auto result = grid_search(spec, images, labels, {base, base}, 0.25, 17);
        CHECK(result.best_index == 0);
        CHECK(result.validation_scores[0] == result.validation_scores[1]);
    }

    SUBCASE("a divergent learning rate loses to the sane one") {
        TrainConfig wild = base;
        wild.learning_rate = 100.0;
        const auto result = grid_search(spec, images, labels, {base, wild}, 0.25, 17);
        CHECK(result.best_index == 0);
        CHECK(result.validation_scores[1] <= result.validation_scores[0]);
    }

    CHECK_THROWS_AS(grid_search<float>(spec, images, labels, {}, 0.25, 17), ValueError);
}
