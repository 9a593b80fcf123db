#include <doctest.h>

#include <cmath>

#include "edlm/metrics.hpp"

using namespace edlm;

TEST_CASE("grade_from_lesions conformance table") {
    struct Row {
        int ma;
        bool neovasc;
        DRGrade want;
    };
    // Exhaustive over the boundary-relevant counts, with and without
    // neovascularisation.
    const Row rows[] = {
        {0, false, DRGrade::no_dr},
        {1, false, DRGrade::mild_npdr},
        {4, false, DRGrade::mild_npdr},
        {5, false, DRGrade::mild_npdr},
        {6, false, DRGrade::moderate_npdr},
        {10, false, DRGrade::moderate_npdr},
        {15, false, DRGrade::moderate_npdr},
        {16, false, DRGrade::severe_npdr},
        {20, false, DRGrade::severe_npdr},
        {0, true, DRGrade::proliferative_dr},
        {1, true, DRGrade::proliferative_dr},
        {4, true, DRGrade::proliferative_dr},
        {5, true, DRGrade::proliferative_dr},
        {6, true, DRGrade::proliferative_dr},
        {10, true, DRGrade::proliferative_dr},
        {15, true, DRGrade::proliferative_dr},
        {16, true, DRGrade::proliferative_dr},
        {20, true, DRGrade::proliferative_dr},
    };
    for (const Row& row : rows) CHECK(grade_from_lesions(row.ma, row.neovasc) == row.want);
    CHECK_THROWS_AS(grade_from_lesions(-1, false), ValueError);
}

TEST_CASE("confusion_matrix basics") {
    const ConfusionMatrix perfect = confusion_matrix({0, 1, 2, 3, 4}, {0, 1, 2, 3, 4});
    for (int a = 0; a < 5; ++a)
        for (int p = 0; p < 5; ++p) CHECK(perfect.at(a, p) == (a == p ? 1 : 0));

    const ConfusionMatrix empty = confusion_matrix({}, {});
    CHECK(empty.total() == 0);

    const ConfusionMatrix cm = confusion_matrix({0, 1, 1}, {0, 1, 2});
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(1, 1) == 1);
    CHECK(cm.at(2, 1) == 1);
    CHECK(cm.total() == 3);

    CHECK_THROWS_AS(confusion_matrix({0}, {0, 1}), ValueError);
    CHECK_THROWS_AS(confusion_matrix({9}, {0}), ValueError);
}

TEST_CASE("confusion_matrix is order independent") {
    const ConfusionMatrix a = confusion_matrix({0, 1, 2, 2, 4}, {0, 2, 2, 3, 4});
    const ConfusionMatrix b = confusion_matrix({4, 2, 2, 1, 0}, {4, 3, 2, 2, 0});
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) CHECK(a.at(i, j) == b.at(i, j));
}

TEST_CASE("class_metrics matches hand arithmetic on a binary matrix") {
    // rows = true, cols = predicted: tp=80, fn=20, fp=10, tn=90
    ConfusionMatrix cm(2);
    cm.at(0, 0) = 80;
    cm.at(0, 1) = 20;
    cm.at(1, 0) = 10;
    cm.at(1, 1) = 90;
    const ClassMetrics m = class_metrics(cm, 0);
    CHECK(*m.sensitivity == doctest::Approx(0.8));
    CHECK(*m.specificity == doctest::Approx(0.9));
    CHECK(*m.precision == doctest::Approx(80.0 / 90.0));

    // counts partition the total for every class
    for (int k = 0; k < 2; ++k) {
        std::int64_t tp = cm.at(k, k), fn = 0, fp = 0, tn = 0;
        for (int a = 0; a < 2; ++a)
            for (int p = 0; p < 2; ++p) {
                if (a == k && p != k) fn += cm.at(a, p);
                if (a != k && p == k) fp += cm.at(a, p);
                if (a != k && p != k) tn += cm.at(a, p);
            }
        CHECK(tp + fn + fp + tn == cm.total());
    }
}

TEST_CASE("f-measure convention") {
    CHECK(*f_measure_from(1.0, 0.0) == 0.0);  // pinned: p=1, r=0 scores 0
    CHECK(*f_measure_from(0.5, 0.5) == doctest::Approx(0.5));
    CHECK(!f_measure_from(std::nullopt, 1.0).has_value());
    CHECK(!f_measure_from(0.0, 0.0).has_value());  // 0/0 stays undefined
}

TEST_CASE("diagonal-only matrix gives perfect metrics for supported classes") {
    ConfusionMatrix cm(3);
    cm.at(0, 0) = 5;
    cm.at(1, 1) = 2;
    cm.at(2, 2) = 7;
    for (int k = 0; k < 3; ++k) {
        const ClassMetrics m = class_metrics(cm, k);
        CHECK(*m.sensitivity == 1.0);
        CHECK(*m.specificity == 1.0);
        CHECK(*m.f_measure == 1.0);
    }
}

TEST_CASE("undefined metrics appear for unseen classes") {
    // No sample has true class 2 and nothing is predicted as 2.
    const ConfusionMatrix cm = confusion_matrix({0, 1}, {0, 1}, 3);
    const ClassMetrics m = class_metrics(cm, 2);
    CHECK(!m.sensitivity.has_value());
    CHECK(!m.precision.has_value());
    CHECK(m.specificity.has_value());  // tn exists
}

TEST_CASE("macro_average of the published sensitivity columns") {
    const std::vector<std::optional<double>> edlm{0.96, 0.92, 0.95, 0.93, 0.93};
    CHECK(macro_average(edlm).value == doctest::Approx(0.938).epsilon(1e-12));

    const std::vector<std::optional<double>> vgg16{0.91, 0.83, 0.90, 0.85, 0.84};
    CHECK(macro_average(vgg16).value == doctest::Approx(0.866).epsilon(1e-12));

    const std::vector<std::optional<double>> same{0.7, 0.7, 0.7};
    CHECK(macro_average(same).value == doctest::Approx(0.7));

    const std::vector<std::optional<double>> with_hole{0.5, std::nullopt, 1.0};
    const MacroAverage avg = macro_average(with_hole);
    CHECK(avg.value == doctest::Approx(0.75));
    CHECK(avg.undefined_excluded == 1);

    CHECK_THROWS_AS(macro_average({std::nullopt, std::nullopt}), ValueError);
    CHECK_THROWS_AS(macro_average({}), ValueError);
}

TEST_CASE("relative_improvement reproduces the published sensitivity deltas") {
    const double edlm = 0.938;
    struct Row {
        double baseline_macro;
        double published_delta;
    };
    // macro sensitivity per baseline and its published aggregate delta
    const Row rows[] = {
        {0.866, 8.28},  // VGG16
        {0.876, 7.03},  // VGG19
        {0.888, 5.58},  // RESNET18
        {0.900, 4.26},  // RESNET34
        {0.920, 2.04},  // RESNET50
    };
    for (const Row& row : rows) {
        const double got = relative_improvement(edlm, row.baseline_macro);
        CHECK(std::fabs(got - row.published_delta) <= 0.15);
    }
    // and the exact recomputed values
    CHECK(relative_improvement(edlm, 0.866) == doctest::Approx(8.3141).epsilon(1e-4));
    CHECK(relative_improvement(edlm, 0.920) == doctest::Approx(1.9565).epsilon(1e-4));

    CHECK(relative_improvement(0.5, 0.5) == 0.0);
    CHECK_THROWS_AS(relative_improvement(0.5, 0.0), ValueError);
}
