#include "edlm/gradcheck.hpp"

#include <algorithm>

namespace edlm {

namespace {

NetworkSpec random_small_spec(Rng& rng) {
    // Small shapes keep every variant under 500 parameters.
    const int h = rng.uniform_int(4, 6);
    const int w = rng.uniform_int(4, 6);
    const int c = rng.uniform_int(1, 2);
    const int classes = rng.uniform_int(2, 5);
    const int conv_ch = rng.uniform_int(2, 3);
    const int hidden = rng.uniform_int(3, 5);

    NetworkSpec spec;
    spec.input_shape = {h, w, c};
    spec.num_classes = classes;
    switch (rng.uniform_int(0, 4)) {
        case 0:
            spec.layers = {LayerSpec::Flatten(), LayerSpec::FullyConnected(classes),
                           LayerSpec::Softmax()};
            break;
        case 1:
            spec.layers = {LayerSpec::Flatten(), LayerSpec::FullyConnected(hidden),
                           LayerSpec::Relu(), LayerSpec::FullyConnected(classes),
                           LayerSpec::Softmax()};
            break;
        case 2:
            spec.layers = {LayerSpec::Conv(conv_ch, 3, 1, 1), LayerSpec::Relu(),
                           LayerSpec::MaxPool2(), LayerSpec::Flatten(),
                           LayerSpec::FullyConnected(classes), LayerSpec::Softmax()};
            break;
        case 3:
            spec.layers = {LayerSpec::Conv(conv_ch, 3, 1, 1), LayerSpec::MaxPool2(),
                           LayerSpec::Flatten(), LayerSpec::FullyConnected(classes),
                           LayerSpec::Softmax()};
            break;
        default:
            spec.layers = {LayerSpec::Conv(conv_ch, 3, 1, 1), LayerSpec::Relu(),
                           LayerSpec::Conv(conv_ch, 3, 1, 1), LayerSpec::MaxPool2(),
                           LayerSpec::Flatten(), LayerSpec::FullyConnected(classes),
                           LayerSpec::Softmax()};
            break;
    }
    validate_spec(spec);
    return spec;
}

}  // namespace

GradCheckReport run_gradcheck_suite(std::uint64_t seed, int networks, double eps) {
    Rng rng(seed);
    GradCheckReport report;
    for (int net = 0; net < networks; ++net) {
        const NetworkSpec spec = random_small_spec(rng);
        Parameters<double> params = init_parameters<double>(spec, rng.next_u64());

        Tensor<double> input({spec.input_shape[0], spec.input_shape[1], spec.input_shape[2]});
        for (std::size_t i = 0; i < input.size(); ++i) input[i] = rng.real01();

        Tensor<double> labels({spec.num_classes});
        labels(rng.below_int(spec.num_classes)) = 1.0;
        const LossForm form = (net % 2 == 0) ? LossForm::binary_sum : LossForm::categorical;

        Tape<double> tape;
        forward(spec, params, input, &tape);
        const Gradients<double> analytic = backward_from_loss(spec, params, tape, labels, form);

        auto track = [&](double a, double f) {
            report.max_rel_err = std::max(report.max_rel_err, grad_rel_err(a, f));
            ++report.checked_values;
        };

        // Every weight and bias tensor, probed one value at a time.
        for (std::size_t li = 0; li < spec.layers.size(); ++li) {
            if (!spec.layers[li].has_params()) continue;
            for (int part = 0; part < 2; ++part) {
                Tensor<double>& target =
                    part == 0 ? params.layers[li].weights : params.layers[li].bias;
                const Tensor<double>& agrad = part == 0 ? analytic.params.layers[li].weights
                                                        : analytic.params.layers[li].bias;
                auto loss_fn = [&](const Tensor<double>& probe) {
                    Tensor<double> saved = target;
                    target = probe;
                    const Tensor<double> out = forward(spec, params, input);
                    const double loss = cross_entropy(labels, out, form);
                    target = std::move(saved);
                    return loss;
                };
                const Tensor<double> fd = finite_diff_grad<double>(loss_fn, target, eps);
                for (std::size_t i = 0; i < fd.size(); ++i) track(agrad[i], fd[i]);
            }
        }

        // Gradient with respect to the network input.
        auto input_loss = [&](const Tensor<double>& probe) {
            const Tensor<double> out = forward(spec, params, probe);
            return cross_entropy(labels, out, form);
        };
        const Tensor<double> fd_in = finite_diff_grad<double>(input_loss, input, eps);
        for (std::size_t i = 0; i < fd_in.size(); ++i) track(analytic.input[i], fd_in[i]);

        ++report.networks;
    }
    return report;
}

}  // namespace edlm
