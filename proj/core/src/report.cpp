#include "edlm/report.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace edlm {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<const char*, 3> kMetricKeys = {"sensitivity", "specificity", "f_measure"};
constexpr std::array<const char*, 6> kKnownColumns = {"VGG16",    "VGG19",    "RESNET18",
                                                      "RESNET34", "RESNET50", "EDLM"};

std::optional<double> metric_of(const ClassMetrics& m, const std::string& key) {
    if (key == "sensitivity") return m.sensitivity;
    if (key == "specificity") return m.specificity;
    if (key == "precision") return m.precision;
    return m.f_measure;
}

Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> opt_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

void check_table(const ModelMetricsTable& model) {
    if (model.per_class.size() != static_cast<std::size_t>(kNumGrades))
        throw ValueError("model '" + model.name + "' must carry metrics for all " +
                         std::to_string(kNumGrades) + " classes");
}

std::vector<std::optional<double>> metric_column(const ModelMetricsTable& model,
                                                 const std::string& key) {
    std::vector<std::optional<double>> column;
    for (const auto& cm : model.per_class) column.push_back(metric_of(cm, key));
    return column;
}

/// Column order of the text table: the published lineup first, then anything
/// else in input order.
std::vector<std::size_t> column_order(const std::vector<ModelMetricsTable>& models) {
    std::vector<std::size_t> order;
    for (const char* name : kKnownColumns)
        for (std::size_t i = 0; i < models.size(); ++i)
            if (models[i].name == name) order.push_back(i);
    for (std::size_t i = 0; i < models.size(); ++i)
        if (std::find(order.begin(), order.end(), i) == order.end()) order.push_back(i);
    return order;
}

std::size_t ours_index(const std::vector<ModelMetricsTable>& models) {
    for (std::size_t i = 0; i < models.size(); ++i)
        if (models[i].name == "EDLM") return i;
    return models.size() - 1;
}

std::string cell(const std::optional<double>& v) {
    if (!v) return "n/a";
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << *v;
    return out.str();
}

Json per_class_json(const ModelMetricsTable& model) {
    Json per_class = Json::array();
    for (int k = 0; k < kNumGrades; ++k) {
        const auto& m = model.per_class[static_cast<std::size_t>(k)];
        Json row;
        row["class"] = grade_name(static_cast<DRGrade>(k));
        row["sensitivity"] = opt_json(m.sensitivity);
        row["specificity"] = opt_json(m.specificity);
        row["precision"] = opt_json(m.precision);
        row["f_measure"] = opt_json(m.f_measure);
        per_class.push_back(std::move(row));
    }
    return per_class;
}

ModelMetricsTable table_from_json_model(const Json& jm) {
    ModelMetricsTable model;
    model.name = jm.at("name").get<std::string>();
    for (const auto& row : jm.at("per_class")) {
        ClassMetrics m;
        m.sensitivity = opt_from(row.at("sensitivity"));
        m.specificity = opt_from(row.at("specificity"));
        m.precision = opt_from(row.at("precision"));
        m.f_measure = opt_from(row.at("f_measure"));
        model.per_class.push_back(m);
    }
    check_table(model);
    return model;
}

}  // namespace

Report render_report(const std::vector<ModelMetricsTable>& models) {
    if (models.empty()) throw ValueError("render_report needs at least one model");
    for (const auto& m : models) check_table(m);

    const auto order = column_order(models);
    const std::size_t ours = ours_index(models);

    Json doc;
    doc["format"] = "edlm-report/1";
    doc["models"] = Json::array();
    for (std::size_t idx : order) {
        const auto& model = models[idx];
        Json jm;
        jm["name"] = model.name;
        jm["per_class"] = per_class_json(model);
        Json macro;
        for (const char* key : kMetricKeys) {
            try {
                const MacroAverage avg = macro_average(metric_column(model, key));
                Json entry;
                entry["value"] = avg.value;
                entry["undefined_excluded"] = avg.undefined_excluded;
                macro[key] = std::move(entry);
            } catch (const ValueError&) {
                macro[key] = nullptr;
            }
        }
        jm["macro"] = std::move(macro);
        doc["models"].push_back(std::move(jm));
    }

    doc["improvements"] = Json::array();
    if (models.size() > 1) {
        for (const char* key : kMetricKeys) {
            std::optional<double> ours_macro;
            try {
                ours_macro = macro_average(metric_column(models[ours], key)).value;
            } catch (const ValueError&) {
            }
            for (std::size_t idx : order) {
                if (idx == ours) continue;
                Json entry;
                entry["metric"] = key;
                entry["model"] = models[ours].name;
                entry["baseline"] = models[idx].name;
                std::optional<double> percent;
                if (ours_macro) {
                    try {
                        const double base = macro_average(metric_column(models[idx], key)).value;
                        if (base > 0) percent = relative_improvement(*ours_macro, base);
                    } catch (const ValueError&) {
                    }
                }
                entry["percent"] = opt_json(percent);
                doc["improvements"].push_back(std::move(entry));
            }
        }
    }

    Report report;
    report.machine = doc.dump(2) + "\n";

    // Plain-text table, fixed column order.
    std::ostringstream table;
    const int label_w = 20, class_w = 18, col_w = 10;
    auto pad = [&](const std::string& s, int w) {
        std::string out = s;
        if (static_cast<int>(out.size()) < w) out.append(static_cast<std::size_t>(w) - out.size(), ' ');
        return out;
    };
    table << pad("Performance metrics", label_w) << pad("Image type", class_w);
    for (std::size_t idx : order) table << pad(models[idx].name, col_w);
    table << '\n';
    const std::array<std::pair<const char*, const char*>, 3> blocks{{
        {"Sensitivity", "sensitivity"},
        {"Specificity", "specificity"},
        {"F measure", "f_measure"},
    }};
    for (const auto& [title, key] : blocks) {
        for (int k = 0; k < kNumGrades; ++k) {
            table << pad(k == 0 ? title : "", label_w)
                  << pad(grade_name(static_cast<DRGrade>(k)), class_w);
            for (std::size_t idx : order)
                table << pad(cell(metric_of(models[idx].per_class[static_cast<std::size_t>(k)], key)), col_w);
            table << '\n';
        }
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        table << pad(b == 0 ? "Macro average" : "", label_w) << pad(blocks[b].first, class_w);
        for (std::size_t idx : order) {
            std::optional<double> value;
            try {
                value = macro_average(metric_column(models[idx], blocks[b].second)).value;
            } catch (const ValueError&) {
            }
            table << pad(cell(value), col_w);
        }
        table << '\n';
    }
    if (models.size() > 1) {
        table << '\n' << "Relative improvement of " << models[ours].name << " (percent):\n";
        for (const auto& entry : doc["improvements"]) {
            table << "  " << entry["metric"].get<std::string>() << " vs "
                  << entry["baseline"].get<std::string>() << ": ";
            if (entry["percent"].is_null()) {
                table << "n/a\n";
            } else {
                table << std::fixed << std::setprecision(2) << entry["percent"].get<double>()
                      << '\n';
            }
        }
    }
    report.table = table.str();
    return report;
}

std::vector<ModelMetricsTable> report_models_from_json(const std::string& json_text) {
    Json doc = Json::parse(json_text);
    if (!doc.contains("format") || doc["format"] != "edlm-report/1")
        throw IoError("not an edlm-report/1 document");
    std::vector<ModelMetricsTable> models;
    for (const auto& jm : doc.at("models")) models.push_back(table_from_json_model(jm));
    return models;
}

ModelMetricsTable metrics_from_confusion(const std::string& name, const ConfusionMatrix& cm) {
    ModelMetricsTable model;
    model.name = name;
    for (int k = 0; k < cm.classes(); ++k) model.per_class.push_back(class_metrics(cm, k));
    return model;
}

std::string metrics_to_json(const ModelMetricsTable& model, const ConfusionMatrix& cm) {
    check_table(model);
    Json doc;
    doc["format"] = "edlm-metrics/1";
    doc["model"] = model.name;
    Json rows = Json::array();
    for (int a = 0; a < cm.classes(); ++a) {
        Json row = Json::array();
        for (int p = 0; p < cm.classes(); ++p) row.push_back(cm.at(a, p));
        rows.push_back(std::move(row));
    }
    doc["confusion"] = std::move(rows);
    doc["per_class"] = per_class_json(model);
    return doc.dump(2) + "\n";
}

ModelMetricsTable metrics_from_json(const std::string& json_text) {
    Json doc = Json::parse(json_text);
    if (!doc.contains("format") || doc["format"] != "edlm-metrics/1")
        throw IoError("not an edlm-metrics/1 document");
    ModelMetricsTable model;
    model.name = doc.at("model").get<std::string>();
    for (const auto& row : doc.at("per_class")) {
        ClassMetrics m;
        m.sensitivity = opt_from(row.at("sensitivity"));
        m.specificity = opt_from(row.at("specificity"));
        m.precision = opt_from(row.at("precision"));
        m.f_measure = opt_from(row.at("f_measure"));
        model.per_class.push_back(m);
    }
    check_table(model);
    return model;
}

std::vector<ModelMetricsTable> load_published_baselines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("missing published baselines file: " + path);
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw IoError("bad published baselines file " + path + ": " + e.what());
    }
    if (!doc.contains("format") || doc["format"] != "edlm-published/1")
        throw IoError("not an edlm-published/1 document: " + path);
    std::vector<ModelMetricsTable> models;
    for (const auto& jm : doc.at("models")) {
        ModelMetricsTable model;
        model.name = jm.at("name").get<std::string>();
        const auto& sens = jm.at("sensitivity");
        const auto& spec = jm.at("specificity");
        const auto& f = jm.at("f_measure");
        if (sens.size() != kNumGrades || spec.size() != kNumGrades || f.size() != kNumGrades)
            throw IoError("published baselines must list all five classes: " + path);
        for (int k = 0; k < kNumGrades; ++k) {
            ClassMetrics m;
            m.sensitivity = sens[static_cast<std::size_t>(k)].get<double>();
            m.specificity = spec[static_cast<std::size_t>(k)].get<double>();
            m.f_measure = f[static_cast<std::size_t>(k)].get<double>();
            model.per_class.push_back(m);
        }
        models.push_back(std::move(model));
    }
    return models;
}

}  // namespace edlm
