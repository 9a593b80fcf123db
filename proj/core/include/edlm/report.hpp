#pragma once

#include <string>
#include <vector>

#include "edlm/metrics.hpp"

namespace edlm {

/// Per-class metrics of one named model.
struct ModelMetricsTable {
    std::string name;
    std::vector<ClassMetrics> per_class;  // kNumGrades entries, class order 0..4
};

/// Rendered result: a versioned machine-readable JSON document plus a fixed
/// column-order plain-text table.
struct Report {
    std::string machine;
    std::string table;
};

/// Builds per-class and macro metrics per model plus pairwise relative
/// improvements of the EDLM column (or the last model when no EDLM entry is
/// present) against every other model. Field ordering is deterministic and
/// re-rendering a parsed report is byte-identical.
Report render_report(const std::vector<ModelMetricsTable>& models);

/// Parses the `machine` document of render_report back into model tables.
std::vector<ModelMetricsTable> report_models_from_json(const std::string& json_text);

/// Derives the metric table of one model from its confusion matrix.
ModelMetricsTable metrics_from_confusion(const std::string& name, const ConfusionMatrix& cm);

/// Single-model metrics document written by evaluation runs (includes the
/// confusion matrix) and read back by the report command.
std::string metrics_to_json(const ModelMetricsTable& model, const ConfusionMatrix& cm);
ModelMetricsTable metrics_from_json(const std::string& json_text);

/// Loads the published per-class baseline metrics data file.
std::vector<ModelMetricsTable> load_published_baselines(const std::string& path);

}  // namespace edlm
