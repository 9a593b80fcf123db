#include <doctest.h>

#include <cmath>

#include "edlm/report.hpp"

using namespace edlm;

#ifndef EDLM_TEST_DATA_DIR
#error "EDLM_TEST_DATA_DIR must point at the repo data directory"
#endif

namespace {

std::vector<ModelMetricsTable> published() {
    return load_published_baselines(std::string(EDLM_TEST_DATA_DIR) +
                                    "/published_baselines.json");
}

double improvement_from(const Report& report, const std::string& metric,
                        const std::string& baseline) {
    // search the machine document rather than the text table
    const auto models = report_models_from_json(report.machine);
    ModelMetricsTable ours, base;
    for (const auto& m : models) {
        if (m.name == "EDLM") ours = m;
        if (m.name == baseline) base = m;
    }
    auto macro = [&](const ModelMetricsTable& m) {
        std::vector<std::optional<double>> column;
        for (const auto& cm : m.per_class)
            column.push_back(metric == "sensitivity" ? cm.sensitivity
                             : metric == "specificity" ? cm.specificity
                                                        : cm.f_measure);
        return macro_average(column).value;
    };
    return relative_improvement(macro(ours), macro(base));
}

}  // namespace

TEST_CASE("published baselines load with all six models") {
    const auto models = published();
    REQUIRE(models.size() == 6);
    CHECK(models[0].name == "VGG16");
    CHECK(models[5].name == "EDLM");
    CHECK(*models[5].per_class[0].sensitivity == doctest::Approx(0.96));
}

TEST_CASE("report on published values reproduces the aggregate sensitivity deltas") {
    const Report report = render_report(published());

    const struct {
        const char* baseline;
        double published;
    } rows[] = {
        {"VGG16", 8.28}, {"VGG19", 7.03}, {"RESNET18", 5.58},
        {"RESNET34", 4.26}, {"RESNET50", 2.04},
    };
    for (const auto& row : rows) {
        const double got = improvement_from(report, "sensitivity", row.baseline);
        CHECK(std::fabs(got - row.published) <= 0.15);
    }

    // Specificity and F-measure recomputed from the table's rounded values
    // miss the published aggregates by up to a couple of tenths; they are
    // reported under a documented 1.0-point informational bound.
    const struct {
        const char* metric;
        const char* baseline;
        double published;
    } loose[] = {
        {"specificity", "VGG16", 1.84}, {"specificity", "VGG19", 1.51},
        {"specificity", "RESNET18", 1.18}, {"specificity", "RESNET34", 0.94},
        {"specificity", "RESNET50", 0.51}, {"f_measure", "VGG16", 9.59},
        {"f_measure", "VGG19", 8.02}, {"f_measure", "RESNET18", 6.36},
        {"f_measure", "RESNET34", 5.00}, {"f_measure", "RESNET50", 2.62},
    };
    for (const auto& row : loose) {
        const double got = improvement_from(report, row.metric, row.baseline);
        CHECK(std::fabs(got - row.published) <= 1.0);
    }
}

TEST_CASE("single model renders with an empty improvements section") {
    const auto models = published();
    const Report report = render_report({models[5]});
    const auto parsed = report_models_from_json(report.machine);
    CHECK(parsed.size() == 1);
    CHECK(report.machine.find("\"improvements\": []") != std::string::npos);
    CHECK(report.table.find("Relative improvement") == std::string::npos);
}

TEST_CASE("report re-rendered from its machine form is byte identical") {
    const Report first = render_report(published());
    const Report second = render_report(report_models_from_json(first.machine));
    CHECK(first.machine == second.machine);
    CHECK(first.table == second.table);
}

TEST_CASE("text table carries the fixed column order") {
    // feed the models scrambled; the table must still order the known lineup
    auto models = published();
    std::swap(models[0], models[5]);
    std::swap(models[1], models[3]);
    const Report report = render_report(models);
    const std::string& header = report.table.substr(0, report.table.find('\n'));
    const std::size_t vgg16 = header.find("VGG16");
    const std::size_t vgg19 = header.find("VGG19");
    const std::size_t r18 = header.find("RESNET18");
    const std::size_t r34 = header.find("RESNET34");
    const std::size_t r50 = header.find("RESNET50");
    const std::size_t edlm = header.find("EDLM");
    REQUIRE(vgg16 != std::string::npos);
    CHECK(vgg16 < vgg19);
    CHECK(vgg19 < r18);
    CHECK(r18 < r34);
    CHECK(r34 < r50);
    CHECK(r50 < edlm);
}

TEST_CASE("metrics document round trip") {
    ConfusionMatrix cm(5);
    cm.at(0, 0) = 10;
    cm.at(1, 1) = 8;
    cm.at(1, 0) = 2;
    cm.at(2, 2) = 5;
    cm.at(3, 3) = 4;
    cm.at(4, 4) = 6;
    cm.at(4, 2) = 1;
    const ModelMetricsTable model = metrics_from_confusion("EDLM", cm);
    const std::string doc = metrics_to_json(model, cm);
    const ModelMetricsTable back = metrics_from_json(doc);
    CHECK(back.name == "EDLM");
    for (int k = 0; k < kNumGrades; ++k) {
        CHECK(back.per_class[static_cast<std::size_t>(k)].sensitivity ==
              model.per_class[static_cast<std::size_t>(k)].sensitivity);
        CHECK(back.per_class[static_cast<std::size_t>(k)].f_measure ==
              model.per_class[static_cast<std::size_t>(k)].f_measure);
    }
}
