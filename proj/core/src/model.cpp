#include "edlm/model.hpp"

#include <sstream>

namespace edlm {

std::vector<std::vector<int>> infer_shapes(const NetworkSpec& spec) {
    if (spec.input_shape[0] < 1 || spec.input_shape[1] < 1 || spec.input_shape[2] < 1)
        throw ShapeError("network input shape must have positive extents");
    std::vector<std::vector<int>> shapes;
    std::vector<int> cur{spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]};
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        const std::string where = "layer " + std::to_string(i);
        switch (layer.kind) {
            case LayerKind::conv: {
                if (cur.size() != 3)
                    throw ShapeError(where + " (conv): input must be 3-d, got " +
                                     shape_to_string(cur));
                ConvGeometry geom{layer.kernel, layer.kernel, layer.stride, layer.padding};
                geom.validate();
                if (layer.out_channels < 1)
                    throw ShapeError(where + " (conv): out_channels must be >= 1");
                const int oh = geom.out_extent(cur[0], layer.kernel);
                const int ow = geom.out_extent(cur[1], layer.kernel);
                if (oh < 1 || ow < 1)
                    throw ShapeError(where + " (conv): output extent underflow from " +
                                     shape_to_string(cur));
                cur = {oh, ow, layer.out_channels};
                break;
            }
            case LayerKind::relu:
            case LayerKind::softmax:
                break;  // shape preserved
            case LayerKind::maxpool2: {
                if (cur.size() != 3)
                    throw ShapeError(where + " (maxpool2): input must be 3-d, got " +
                                     shape_to_string(cur));
                if (cur[0] < 2 || cur[1] < 2)
                    throw ShapeError(where + " (maxpool2): output extent underflow from " +
                                     shape_to_string(cur));
                cur = {cur[0] / 2, cur[1] / 2, cur[2]};
                break;
            }
            case LayerKind::flatten: {
                long long volume = 1;
                for (int e : cur) volume *= e;
                cur = {static_cast<int>(volume)};
                break;
            }
            case LayerKind::fully_connected: {
                if (cur.size() != 1)
                    throw ShapeError(where + " (fully_connected): input must be flat, got " +
                                     shape_to_string(cur));
                if (layer.out_features < 1)
                    throw ShapeError(where + " (fully_connected): out_features must be >= 1");
                cur = {layer.out_features};
                break;
            }
        }
        shapes.push_back(cur);
    }
    return shapes;
}

void validate_spec(const NetworkSpec& spec) {
    if (spec.layers.empty()) throw ShapeError("network has no layers");
    if (spec.num_classes < 1) throw ShapeError("num_classes must be >= 1");
    for (std::size_t i = 0; i + 1 < spec.layers.size(); ++i)
        if (spec.layers[i].kind == LayerKind::softmax)
            throw ShapeError("softmax may only appear as the final layer (found at layer " +
                             std::to_string(i) + ")");
    const auto shapes = infer_shapes(spec);
    const auto& out = shapes.back();
    if (out.size() != 1 || out[0] != spec.num_classes)
        throw ShapeError("final layer output " + shape_to_string(out) +
                         " does not match num_classes " + std::to_string(spec.num_classes));
}

namespace {

void require_min_input(std::array<int, 3> input_shape) {
    // Five stride-2 pools; anything under 32 px underflows on the way down.
    if (input_shape[0] < 32 || input_shape[1] < 32)
        throw ShapeError("input too small: " + std::to_string(input_shape[0]) + "x" +
                         std::to_string(input_shape[1]) +
                         " (needs at least 32x32 for five pooling stages)");
    if (input_shape[2] < 1) throw ShapeError("input channel count must be >= 1");
}

}  // namespace

NetworkSpec edlm_default_spec(std::array<int, 3> input_shape, int num_classes) {
    require_min_input(input_shape);
    NetworkSpec spec;
    spec.input_shape = input_shape;
    spec.num_classes = num_classes;
    const int widths[5] = {64, 128, 256, 512, 512};
    const int depths[5] = {2, 2, 3, 3, 3};
    for (int block = 0; block < 5; ++block) {
        for (int i = 0; i < depths[block]; ++i) {
            spec.layers.push_back(LayerSpec::Conv(widths[block], 3, 1, 1));
            spec.layers.push_back(LayerSpec::Relu());
        }
        spec.layers.push_back(LayerSpec::MaxPool2());
    }
    spec.layers.push_back(LayerSpec::Flatten());
    spec.layers.push_back(LayerSpec::FullyConnected(4096));
    spec.layers.push_back(LayerSpec::Relu());
    spec.layers.push_back(LayerSpec::FullyConnected(num_classes));
    spec.layers.push_back(LayerSpec::Softmax());
    validate_spec(spec);
    return spec;
}

NetworkSpec edlm_compact_spec(std::array<int, 3> input_shape, int num_classes) {
    require_min_input(input_shape);
    NetworkSpec spec;
    spec.input_shape = input_shape;
    spec.num_classes = num_classes;
    for (int block = 0; block < 5; ++block) {
        spec.layers.push_back(LayerSpec::Conv(32, 3, 1, 1));
        spec.layers.push_back(LayerSpec::Relu());
        spec.layers.push_back(LayerSpec::MaxPool2());
    }
    spec.layers.push_back(LayerSpec::Flatten());
    spec.layers.push_back(LayerSpec::FullyConnected(num_classes));
    spec.layers.push_back(LayerSpec::Softmax());
    validate_spec(spec);
    return spec;
}

std::vector<std::pair<std::vector<int>, std::vector<int>>> parameter_shapes(
    const NetworkSpec& spec) {
    const auto shapes = infer_shapes(spec);
    std::vector<std::pair<std::vector<int>, std::vector<int>>> result;
    std::vector<int> cur{spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]};
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        if (layer.kind == LayerKind::conv) {
            result.push_back({{layer.kernel, layer.kernel, cur[2], layer.out_channels},
                              {layer.out_channels}});
        } else if (layer.kind == LayerKind::fully_connected) {
            result.push_back({{cur[0], layer.out_features}, {layer.out_features}});
        } else {
            result.push_back({{}, {}});
        }
        cur = shapes[i];
    }
    return result;
}

std::string spec_to_text(const NetworkSpec& spec) {
    std::ostringstream out;
    out << "input " << spec.input_shape[0] << ' ' << spec.input_shape[1] << ' '
        << spec.input_shape[2] << '\n';
    out << "classes " << spec.num_classes << '\n';
    for (const LayerSpec& layer : spec.layers) {
        switch (layer.kind) {
            case LayerKind::conv:
                out << "conv " << layer.out_channels << ' ' << layer.kernel << ' '
                    << layer.stride << ' ' << layer.padding << '\n';
                break;
            case LayerKind::relu: out << "relu\n"; break;
            case LayerKind::maxpool2: out << "maxpool2\n"; break;
            case LayerKind::flatten: out << "flatten\n"; break;
            case LayerKind::fully_connected:
                out << "fc " << layer.out_features << '\n';
                break;
            case LayerKind::softmax: out << "softmax\n"; break;
        }
    }
    return out.str();
}

NetworkSpec spec_from_text(const std::string& text) {
    NetworkSpec spec;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool saw_input = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string kind;
        fields >> kind;
        auto need_int = [&](const char* what) {
            long long v = 0;
            if (!(fields >> v))
                throw IoError("network text line " + std::to_string(lineno) + ": missing " +
                              what);
            return static_cast<int>(v);
        };
        if (kind == "input") {
            spec.input_shape = {need_int("height"), need_int("width"), need_int("channels")};
            saw_input = true;
        } else if (kind == "classes") {
            spec.num_classes = need_int("count");
        } else if (kind == "conv") {
            const int ch = need_int("out_channels"), k = need_int("kernel");
            const int s = need_int("stride"), p = need_int("padding");
            spec.layers.push_back(LayerSpec::Conv(ch, k, s, p));
        } else if (kind == "relu") {
            spec.layers.push_back(LayerSpec::Relu());
        } else if (kind == "maxpool2") {
            spec.layers.push_back(LayerSpec::MaxPool2());
        } else if (kind == "flatten") {
            spec.layers.push_back(LayerSpec::Flatten());
        } else if (kind == "fc") {
            spec.layers.push_back(LayerSpec::FullyConnected(need_int("out_features")));
        } else if (kind == "softmax") {
            spec.layers.push_back(LayerSpec::Softmax());
        } else {
            throw IoError("network text line " + std::to_string(lineno) +
                          ": unknown layer kind '" + kind + "'");
        }
    }
    if (!saw_input) throw IoError("network text is missing the input line");
    validate_spec(spec);
    return spec;
}

}  // namespace edlm
