#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edlm/error.hpp"

namespace edlm {

/// Severity grades, ordered.
enum class DRGrade : int {
    no_dr = 0,
    mild_npdr = 1,
    moderate_npdr = 2,
    severe_npdr = 3,
    proliferative_dr = 4,
};

inline constexpr int kNumGrades = 5;

const char* grade_name(DRGrade g);

/// Lesion-count grading rule. Neovascularisation always grades as
/// proliferative; otherwise 0 microaneurysms is healthy, 1-5 mild, 6-15
/// moderate and >15 severe.
DRGrade grade_from_lesions(int ma_count, bool neovascularisation);

/// Square count matrix, rows = true class, columns = predicted class.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int classes);

    int classes() const { return classes_; }
    std::int64_t& at(int actual, int predicted);
    std::int64_t at(int actual, int predicted) const;
    std::int64_t total() const;

private:
    int classes_;
    std::vector<std::int64_t> counts_;
};

/// Tallies prediction/actual pairs; both lists must have equal length and
/// in-range values.
ConfusionMatrix confusion_matrix(const std::vector<int>& predicted,
                                 const std::vector<int>& actual, int classes = kNumGrades);

/// One-vs-rest metrics of a single class; 0/0 ratios are left unset.
struct ClassMetrics {
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> precision;
    std::optional<double> f_measure;
};

/// Harmonic mean of precision and recall; 0 whenever either is 0 with the
/// other defined (covers the pinned p=1, r=0 convention), unset only when
/// p + r has no defined value.
std::optional<double> f_measure_from(std::optional<double> precision,
                                     std::optional<double> recall);

ClassMetrics class_metrics(const ConfusionMatrix& cm, int k);

struct MacroAverage {
    double value = 0.0;
    int undefined_excluded = 0;
};

/// Arithmetic mean over the defined entries; counts how many undefined
/// entries were excluded. Throws ValueError if every entry is undefined.
MacroAverage macro_average(const std::vector<std::optional<double>>& per_class);

/// 100 * (ours / baseline - 1); baseline must be > 0.
double relative_improvement(double ours, double baseline);

}  // namespace edlm
