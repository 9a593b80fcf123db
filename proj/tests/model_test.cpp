#include <doctest.h>

#include <cmath>

#include "edlm/model.hpp"

using namespace edlm;

namespace {

std::vector<std::vector<int>> conv_pool_shapes(const NetworkSpec& spec) {
    const auto shapes = infer_shapes(spec);
    std::vector<std::vector<int>> rows;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerKind kind = spec.layers[i].kind;
        if (kind == LayerKind::conv || kind == LayerKind::maxpool2 ||
            kind == LayerKind::fully_connected)
            rows.push_back(shapes[i]);
    }
    return rows;
}

}  // namespace

TEST_CASE("default architecture reproduces the published feature-map sizes at 224x224") {
    const NetworkSpec spec = edlm_default_spec({224, 224, 3}, 3);
    // Published layer table (conv/pool/fc rows only). The final pool is
    // printed as 14x14x512 in the source table, which is arithmetically
    // impossible after a stride-2 pool of a 14x14 map; the computed 7x7x512
    // is asserted instead.
    const std::vector<std::vector<int>> want{
        {224, 224, 64}, {224, 224, 64}, {112, 112, 64},                    // block 1
        {112, 112, 128}, {112, 112, 128}, {56, 56, 128},                   // block 2
        {56, 56, 256}, {56, 56, 256}, {56, 56, 256}, {28, 28, 256},        // block 3
        {28, 28, 512}, {28, 28, 512}, {28, 28, 512}, {14, 14, 512},        // block 4
        {14, 14, 512}, {14, 14, 512}, {14, 14, 512}, {7, 7, 512},          // block 5
        {4096}, {3},                                                        // classifier
    };
    CHECK(conv_pool_shapes(spec) == want);
}

TEST_CASE("default architecture pool chain at 192x192") {
    const NetworkSpec spec = edlm_default_spec({192, 192, 3}, 5);
    const auto shapes = infer_shapes(spec);
    std::vector<int> pool_extents;
    std::size_t flatten_size = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (spec.layers[i].kind == LayerKind::maxpool2) pool_extents.push_back(shapes[i][0]);
        if (spec.layers[i].kind == LayerKind::flatten)
            flatten_size = static_cast<std::size_t>(shapes[i][0]);
    }
    CHECK(pool_extents == std::vector<int>{96, 48, 24, 12, 6});
    CHECK(flatten_size == 6u * 6u * 512u);
}

TEST_CASE("default architecture rejects too-small inputs") {
    CHECK_THROWS_AS(edlm_default_spec({31, 31, 3}, 5), ShapeError);
}

TEST_CASE("compact architecture shape chain") {
    const NetworkSpec spec = edlm_compact_spec({64, 64, 3}, 5);
    for (const LayerSpec& layer : spec.layers)
        if (layer.kind == LayerKind::conv) CHECK(layer.out_channels == 32);

    const auto shapes = infer_shapes(spec);
    std::vector<int> pool_extents;
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].kind == LayerKind::maxpool2) pool_extents.push_back(shapes[i][0]);
    CHECK(pool_extents == std::vector<int>{32, 16, 8, 4, 2});

    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].kind == LayerKind::flatten)
            CHECK(shapes[i] == std::vector<int>{2 * 2 * 32});

    CHECK_THROWS_AS(edlm_compact_spec({16, 16, 3}, 5), ShapeError);
}

TEST_CASE("infer_shapes preserves shape through relu and softmax") {
    NetworkSpec spec;
    spec.input_shape = {8, 8, 2};
    spec.num_classes = 4;
    spec.layers = {LayerSpec::Conv(4, 3, 1, 1), LayerSpec::Relu(), LayerSpec::Flatten(),
                   LayerSpec::FullyConnected(4), LayerSpec::Softmax()};
    const auto shapes = infer_shapes(spec);
    CHECK(shapes[0] == shapes[1]);
    CHECK(shapes[3] == shapes[4]);
}

TEST_CASE("infer_shapes names the underflowing layer") {
    NetworkSpec spec;
    spec.input_shape = {32, 32, 1};
    spec.num_classes = 2;
    spec.layers = {LayerSpec::MaxPool2(), LayerSpec::MaxPool2(), LayerSpec::MaxPool2(),
                   LayerSpec::MaxPool2(), LayerSpec::MaxPool2(), LayerSpec::MaxPool2()};
    try {
        infer_shapes(spec);
        FAIL("expected underflow");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("layer 5") != std::string::npos);
    }
}

TEST_CASE("init_parameters is deterministic and hits the stated moments") {
    NetworkSpec spec;
    spec.input_shape = {32, 32, 1};
    spec.num_classes = 16;
    // FC over the flattened input: 1024 x 16 = 16384 weights
    spec.layers = {LayerSpec::Flatten(), LayerSpec::FullyConnected(16), LayerSpec::Softmax()};
    validate_spec(spec);

    const auto a = init_parameters<float>(spec, 42);
    const auto b = init_parameters<float>(spec, 42);
    CHECK(a.layers[1].weights.values() == b.layers[1].weights.values());
    CHECK(a.layers[1].bias.values() == b.layers[1].bias.values());

    const auto c = init_parameters<float>(spec, 43);
    CHECK(a.layers[1].weights.values() != c.layers[1].weights.values());

    const auto& w = a.layers[1].weights;
    REQUIRE(w.size() >= 10000);
    double mean = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) mean += w[i];
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) var += (w[i] - mean) * (w[i] - mean);
    var /= static_cast<double>(w.size());
    CHECK(mean >= -0.01);
    CHECK(mean <= 0.01);
    CHECK(var >= 0.045);
    CHECK(var <= 0.055);
}

TEST_CASE("forward produces a probability vector") {
    const NetworkSpec spec = edlm_compact_spec({32, 32, 3}, 5);
    const auto params = init_parameters<float>(spec, 9);
    TensorF input({32, 32, 3});
    Rng rng(1);
    for (std::size_t i = 0; i < input.size(); ++i) input[i] = static_cast<float>(rng.real01());

    const TensorF probs = forward(spec, params, input);
    REQUIRE(probs.shape() == std::vector<int>{5});
    float sum = 0.0F;
    for (int i = 0; i < 5; ++i) {
        CHECK(probs(i) >= 0.0F);
        CHECK(probs(i) <= 1.0F);
        sum += probs(i);
    }
    CHECK(std::fabs(sum - 1.0F) <= 1e-6F);
}

TEST_CASE("forward with all-zero parameters is uniform") {
    const NetworkSpec spec = edlm_compact_spec({32, 32, 3}, 5);
    Parameters<float> zeros;
    for (const auto& [wshape, bshape] : parameter_shapes(spec)) {
        LayerParams<float> lp;
        if (!wshape.empty()) {
            lp.weights = TensorF(wshape);
            lp.bias = TensorF(bshape);
        }
        zeros.layers.push_back(std::move(lp));
    }
    TensorF input = TensorF::full({32, 32, 3}, 0.7F);
    const TensorF probs = forward(spec, zeros, input);
    for (int i = 0; i < 5; ++i) CHECK(probs(i) == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("forward is bit-reproducible for a fixed seed and input") {
    const NetworkSpec spec = edlm_compact_spec({32, 32, 3}, 5);
    const auto params = init_parameters<float>(spec, 77);
    TensorF input({32, 32, 3});
    Rng rng(123);
    for (std::size_t i = 0; i < input.size(); ++i) input[i] = static_cast<float>(rng.real01());

    const TensorF first = forward(spec, params, input);
    const TensorF second = forward(spec, params, input);
    CHECK(first.values() == second.values());
}

TEST_CASE("forward rejects the wrong input shape") {
    const NetworkSpec spec = edlm_compact_spec({32, 32, 3}, 5);
    const auto params = init_parameters<float>(spec, 1);
    CHECK_THROWS_AS(forward(spec, params, TensorF({16, 16, 3})), ShapeError);
}

TEST_CASE("network text round trip") {
    const NetworkSpec spec = edlm_compact_spec({64, 64, 3}, 5);
    const NetworkSpec parsed = spec_from_text(spec_to_text(spec));
    CHECK(parsed == spec);

    CHECK_THROWS_AS(spec_from_text("conv 32 3 1 1\n"), IoError);       // no input line
    CHECK_THROWS_AS(spec_from_text("input 64 64 3\nwat\n"), IoError);  // unknown kind
}

TEST_CASE("validate_spec rejects softmax in the middle") {
    NetworkSpec spec;
    spec.input_shape = {8, 8, 1};
    spec.num_classes = 2;
    spec.layers = {LayerSpec::Flatten(), LayerSpec::Softmax(), LayerSpec::FullyConnected(2)};
    CHECK_THROWS_AS(validate_spec(spec), ShapeError);
}
