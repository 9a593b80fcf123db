#include "edlm/metrics.hpp"

namespace edlm {

const char* grade_name(DRGrade g) {
    switch (g) {
        case DRGrade::no_dr: return "No DR";
        case DRGrade::mild_npdr: return "Mild NPDR";
        case DRGrade::moderate_npdr: return "Moderate NPDR";
        case DRGrade::severe_npdr: return "Severe NPDR";
        case DRGrade::proliferative_dr: return "Proliferative DR";
    }
    return "?";
}

DRGrade grade_from_lesions(int ma_count, bool neovascularisation) {
    if (ma_count < 0) throw ValueError("microaneurysm count must be >= 0");
    if (neovascularisation) return DRGrade::proliferative_dr;
    if (ma_count == 0) return DRGrade::no_dr;
    if (ma_count <= 5) return DRGrade::mild_npdr;
    if (ma_count <= 15) return DRGrade::moderate_npdr;
    return DRGrade::severe_npdr;
}

ConfusionMatrix::ConfusionMatrix(int classes) : classes_(classes) {
    if (classes < 1) throw ValueError("confusion matrix needs at least one class");
    counts_.assign(static_cast<std::size_t>(classes) * classes, 0);
}

std::int64_t& ConfusionMatrix::at(int actual, int predicted) {
    if (actual < 0 || actual >= classes_ || predicted < 0 || predicted >= classes_)
        throw ValueError("class index out of range");
    return counts_[static_cast<std::size_t>(actual) * classes_ + predicted];
}

std::int64_t ConfusionMatrix::at(int actual, int predicted) const {
    return const_cast<ConfusionMatrix*>(this)->at(actual, predicted);
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (std::int64_t c : counts_) t += c;
    return t;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& predicted,
                                 const std::vector<int>& actual, int classes) {
    if (predicted.size() != actual.size())
        throw ValueError("prediction list length " + std::to_string(predicted.size()) +
                         " != actual list length " + std::to_string(actual.size()));
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < predicted.size(); ++i) ++cm.at(actual[i], predicted[i]);
    return cm;
}

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> f_measure_from(std::optional<double> precision,
                                     std::optional<double> recall) {
    if (!precision || !recall) return std::nullopt;
    const double p = *precision, r = *recall;
    if (p + r == 0.0) return std::nullopt;
    return 2.0 * p * r / (p + r);
}

ClassMetrics class_metrics(const ConfusionMatrix& cm, int k) {
    if (k < 0 || k >= cm.classes()) throw ValueError("class index out of range");
    std::int64_t tp = cm.at(k, k), fn = 0, fp = 0, tn = 0;
    for (int a = 0; a < cm.classes(); ++a) {
        for (int p = 0; p < cm.classes(); ++p) {
            if (a == k && p != k) fn += cm.at(a, p);
            if (a != k && p == k) fp += cm.at(a, p);
            if (a != k && p != k) tn += cm.at(a, p);
        }
    }
    ClassMetrics m;
    m.sensitivity = ratio(tp, tp + fn);
    m.specificity = ratio(tn, tn + fp);
    m.precision = ratio(tp, tp + fp);
    m.f_measure = f_measure_from(m.precision, m.sensitivity);
    return m;
}

MacroAverage macro_average(const std::vector<std::optional<double>>& per_class) {
    if (per_class.empty()) throw ValueError("macro_average needs at least one class");
    MacroAverage result;
    double sum = 0.0;
    int defined = 0;
    for (const auto& v : per_class) {
        if (v) {
            sum += *v;
            ++defined;
        } else {
            ++result.undefined_excluded;
        }
    }
    if (defined == 0) throw ValueError("macro_average: every class metric is undefined");
    result.value = sum / defined;
    return result;
}

double relative_improvement(double ours, double baseline) {
    if (!(baseline > 0.0)) throw ValueError("relative improvement needs a baseline > 0");
    return 100.0 * (ours / baseline - 1.0);
}

}  // namespace edlm
