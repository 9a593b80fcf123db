// Command-line front end: synth, preprocess, train, eval, gradcheck, report.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "edlm/checkpoint.hpp"
#include "edlm/dataset.hpp"
#include "edlm/enhance.hpp"
#include "edlm/gradcheck.hpp"
#include "edlm/report.hpp"
#include "edlm/training.hpp"

namespace fs = std::filesystem;
using namespace edlm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct CommonOpts {
    std::uint64_t seed = 0;
    std::string data_root;
};

void echo(const std::string& key, const std::string& value) {
    std::cout << "config " << key << " = " << value << "\n";
}

void echo(const std::string& key, double value) { echo(key, std::to_string(value)); }
void echo(const std::string& key, std::uint64_t value) { echo(key, std::to_string(value)); }
void echo(const std::string& key, int value) { echo(key, std::to_string(value)); }

std::string resolve_image_path(const fs::path& manifest_dir, const std::string& image_path) {
    fs::path p(image_path);
    if (p.is_absolute()) return p.string();
    return (manifest_dir / p).string();
}

TensorF image_to_tensor(const ImageU8& img) {
    TensorF t({img.height, img.width, 3});
    for (std::size_t i = 0; i < img.data.size(); ++i)
        t[i] = static_cast<float>(img.data[i]) / 255.0F;
    return t;
}

/// Loads every manifest image, resizing to (h, w) when needed.
std::pair<std::vector<TensorF>, std::vector<int>> load_tensors(
    const std::vector<ManifestRecord>& records, const fs::path& manifest_dir, int h, int w) {
    std::vector<TensorF> images;
    std::vector<int> labels;
    for (const auto& rec : records) {
        ImageU8 img = decode_image(resolve_image_path(manifest_dir, rec.image_path));
        if (img.height != h || img.width != w) img = resize_bilinear(img, h, w);
        images.push_back(image_to_tensor(img));
        labels.push_back(rec.grade);
    }
    return {std::move(images), std::move(labels)};
}

fs::path default_published_file(const std::string& data_root) {
    std::vector<fs::path> candidates;
    if (!data_root.empty()) candidates.emplace_back(data_root);
    candidates.emplace_back(fs::current_path() / "data");
    std::error_code ec;
    const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
    if (!ec) {
        candidates.push_back(exe.parent_path() / ".." / "share" / "edlm");
        candidates.push_back(exe.parent_path() / ".." / ".." / "data");
    }
    for (const auto& dir : candidates) {
        const fs::path file = dir / "published_baselines.json";
        if (fs::exists(file)) return file;
    }
    throw IoError("cannot locate published_baselines.json; set --data-root or EDLM_DATA_ROOT");
}

// --- synth ---------------------------------------------------------------

int run_synth(const std::string& out_dir, int per_class, int size, std::uint64_t seed) {
    echo("out", out_dir);
    echo("per-class", per_class);
    echo("size", size);
    echo("seed", seed);

    fs::create_directories(fs::path(out_dir) / "images");
    const auto samples = synth_dataset(per_class, size, seed);
    std::vector<ManifestRecord> records;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::string name =
            "images/g" + std::to_string(samples[i].grade) + "_" + std::to_string(i) + ".png";
        encode_image((fs::path(out_dir) / name).string(), samples[i].image);
        records.push_back({name, samples[i].grade, samples[i].ma_count,
                           samples[i].neovascularisation});
    }
    write_manifest((fs::path(out_dir) / "manifest.csv").string(), records);
    std::cout << "wrote " << records.size() << " images and " << out_dir << "/manifest.csv\n";
    return kExitOk;
}

// --- preprocess ------------------------------------------------------------

int run_preprocess(const std::string& manifest, const std::string& out_dir,
                   const EnhanceConfig& cfg, const std::vector<int>& resize_to) {
    echo("manifest", manifest);
    echo("out", out_dir);
    echo("clip-fraction", cfg.clip_fraction);
    echo("tile-grid", std::to_string(cfg.tile_rows) + "x" + std::to_string(cfg.tile_cols));
    echo("median-window", cfg.median_window);
    echo("sigma", cfg.gaussian_sigma);
    echo("channel-mode",
         cfg.channel_mode == ChannelMode::per_channel ? "per-channel" : "luminance");
    cfg.validate();

    const auto records = load_manifest(manifest);
    const fs::path manifest_dir = fs::path(manifest).parent_path();
    fs::create_directories(fs::path(out_dir) / "images");

    std::vector<ManifestRecord> out_records;
    for (std::size_t i = 0; i < records.size(); ++i) {
        ImageU8 img = decode_image(resolve_image_path(manifest_dir, records[i].image_path));
        img = enhance(img, cfg);
        if (resize_to.size() == 2) img = resize_bilinear(img, resize_to[0], resize_to[1]);
        const std::string name = "images/" + std::to_string(i) + "_g" +
                                 std::to_string(records[i].grade) + ".png";
        encode_image((fs::path(out_dir) / name).string(), img);
        ManifestRecord rec = records[i];
        rec.image_path = name;
        out_records.push_back(std::move(rec));
    }
    write_manifest((fs::path(out_dir) / "manifest.csv").string(), out_records);
    std::cout << "enhanced " << out_records.size() << " images into " << out_dir << "\n";
    return kExitOk;
}

// --- train -----------------------------------------------------------------

int run_train(const std::string& manifest, const std::string& out_dir, const std::string& arch,
              int classes, const TrainConfig& config, double split,
              const std::vector<int>& size_override) {
    echo("manifest", manifest);
    echo("out", out_dir);
    echo("arch", arch);
    echo("classes", classes);
    echo("lr", config.learning_rate);
    echo("weight-decay", config.weight_decay);
    echo("batch-size", config.batch_size);
    echo("epochs", config.epochs);
    echo("sampling", config.sampling == SamplingMode::uniform ? "uniform" : "informative");
    echo("loss", config.loss == LossForm::binary_sum ? "eq5" : "categorical");
    echo("seed", config.seed);
    echo("split", split);
    echo("clip-ratio", config.clip_ratio);

    auto records = load_manifest(manifest);
    if (records.empty()) throw IoError("manifest has no rows: " + manifest);
    const fs::path manifest_dir = fs::path(manifest).parent_path();
    fs::create_directories(out_dir);

    std::vector<ManifestRecord> holdout;
    if (split > 0.0) {
        auto [train_part, test_part] = stratified_split(records, split, config.seed);
        records = std::move(train_part);
        holdout = std::move(test_part);
        for (auto& rec : holdout)
            rec.image_path = fs::absolute(resolve_image_path(manifest_dir, rec.image_path));
        write_manifest((fs::path(out_dir) / "holdout_manifest.csv").string(), holdout);
        std::cout << "held out " << holdout.size() << " samples to " << out_dir
                  << "/holdout_manifest.csv\n";
    }

    // Network input size comes from the first image unless overridden.
    int h, w;
    if (size_override.size() == 2) {
        h = size_override[0];
        w = size_override[1];
    } else {
        const ImageU8 first =
            decode_image(resolve_image_path(manifest_dir, records.front().image_path));
        h = first.height;
        w = first.width;
    }
    echo("input-size", std::to_string(h) + "x" + std::to_string(w));

    const NetworkSpec spec = arch == "table3" ? edlm_default_spec({h, w, 3}, classes)
                                              : edlm_compact_spec({h, w, 3}, classes);
    const auto [images, labels] = load_tensors(records, manifest_dir, h, w);
    const TrainResult<float> result = train(images, labels, spec, config);

    Checkpoint ckpt;
    ckpt.spec = spec;
    ckpt.params = result.params;
    ckpt.epochs_completed = static_cast<std::uint32_t>(result.history.epochs.size());
    ckpt.seed = config.seed;
    ckpt.final_loss =
        result.history.epochs.empty() ? 0.0 : result.history.epochs.back().mean_loss;
    save_checkpoint((fs::path(out_dir) / "checkpoint.edlm").string(), ckpt);

    std::ofstream hist((fs::path(out_dir) / "history.csv").string(), std::ios::trunc);
    hist << result.history.to_lines();
    hist.close();

    for (std::size_t e = 0; e < result.history.epochs.size(); ++e)
        std::cout << "epoch " << e << " loss " << result.history.epochs[e].mean_loss << " acc "
                  << result.history.epochs[e].accuracy << "\n";
    std::cout << "wrote " << out_dir << "/checkpoint.edlm and history.csv\n";
    return kExitOk;
}

// --- eval ------------------------------------------------------------------

int run_eval(const std::string& checkpoint, const std::string& manifest,
             const std::string& out_file, const std::string& name) {
    echo("checkpoint", checkpoint);
    echo("manifest", manifest);
    echo("out", out_file);
    echo("name", name);

    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const auto records = load_manifest(manifest);
    if (records.empty()) throw IoError("manifest has no rows: " + manifest);
    const fs::path manifest_dir = fs::path(manifest).parent_path();
    const auto [images, labels] = load_tensors(records, manifest_dir, ckpt.spec.input_shape[0],
                                               ckpt.spec.input_shape[1]);

    const ConfusionMatrix cm = evaluate(ckpt.spec, ckpt.params, images, labels);
    const ModelMetricsTable model = metrics_from_confusion(name, cm);
    if (!out_file.empty()) {
        std::ofstream out(out_file, std::ios::trunc);
        if (!out) throw IoError("cannot open metrics file for writing: " + out_file);
        out << metrics_to_json(model, cm);
    }

    double correct = 0;
    for (int k = 0; k < cm.classes(); ++k) correct += static_cast<double>(cm.at(k, k));
    std::cout << render_report({model}).table;
    std::cout << "accuracy " << correct / static_cast<double>(cm.total()) << " over "
              << cm.total() << " samples\n";
    return kExitOk;
}

// --- gradcheck ---------------------------------------------------------------

int run_gradcheck(std::uint64_t seed, int networks) {
    echo("seed", seed);
    echo("networks", networks);
    const GradCheckReport report = run_gradcheck_suite(seed, networks);
    std::cout << "checked " << report.checked_values << " gradient values across "
              << report.networks << " networks\n";
    std::cout << "max relative error " << report.max_rel_err << "\n";
    if (report.max_rel_err <= 1e-4) return kExitOk;
    std::cerr << "gradient check breached the 1e-4 bound\n";
    return kExitNumeric;
}

// --- report ------------------------------------------------------------------

int run_report(bool published, const std::vector<std::string>& metric_files,
               const std::string& out_file, const std::string& data_root) {
    std::vector<ModelMetricsTable> models;
    if (published) {
        const fs::path file = default_published_file(data_root);
        echo("published", file.string());
        for (auto& m : load_published_baselines(file.string())) models.push_back(std::move(m));
    }
    for (const auto& path : metric_files) {
        echo("metrics", path);
        std::ifstream in(path);
        if (!in) throw IoError("missing metrics file: " + path);
        const std::string text((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
        models.push_back(metrics_from_json(text));
    }
    const Report report = render_report(models);
    std::cout << report.table;
    if (!out_file.empty()) {
        std::ofstream out(out_file, std::ios::trunc);
        if (!out) throw IoError("cannot open report file for writing: " + out_file);
        out << report.machine;
        std::cout << "wrote " << out_file << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diabetic-retinopathy classification pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI file");

    CommonOpts common;
    app.add_option("--data-root", common.data_root, "Default data directory")
        ->envname("EDLM_DATA_ROOT");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
    std::string synth_out;
    int per_class = 100, synth_size = 64;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--per-class", per_class, "Images per grade");
    synth->add_option("--size", synth_size, "Image side length (>= 32)");
    synth->add_option("--seed", synth_seed, "Generator seed");

    // preprocess
    auto* preprocess = app.add_subcommand("preprocess", "Enhance the images of a manifest");
    std::string pre_manifest, pre_out;
    EnhanceConfig enhance_cfg;
    std::string channel_mode = "per-channel";
    std::vector<int> tile_grid{8, 8};
    std::vector<int> pre_size;
    preprocess->add_option("--manifest", pre_manifest, "Input manifest CSV")->required();
    preprocess->add_option("--out", pre_out, "Output directory")->required();
    preprocess->add_option("--clip-fraction", enhance_cfg.clip_fraction,
                           "Histogram clip fraction in [0.002, 0.005]");
    preprocess->add_option("--tile-grid", tile_grid, "Tile grid rows cols")->expected(2);
    preprocess->add_option("--median-window", enhance_cfg.median_window, "Median window (odd)");
    preprocess->add_option("--sigma", enhance_cfg.gaussian_sigma, "Gaussian sigma");
    preprocess->add_option("--channel-mode", channel_mode, "per-channel or luminance")
        ->check(CLI::IsMember({"per-channel", "luminance"}));
    preprocess->add_option("--size", pre_size, "Resize output to H W")->expected(2);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model from a manifest");
    std::string train_manifest, train_out, arch = "compact", sampling = "uniform", loss = "eq5";
    int classes = 5;
    TrainConfig train_cfg;
    double split = 0.0;
    std::vector<int> train_size;
    train_cmd->add_option("--manifest", train_manifest, "Input manifest CSV")->required();
    train_cmd->add_option("--out", train_out, "Output directory")->required();
    train_cmd->add_option("--arch", arch, "Architecture")
        ->check(CLI::IsMember({"table3", "compact"}));
    train_cmd->add_option("--classes", classes, "Number of classes");
    train_cmd->add_option("--lr", train_cfg.learning_rate, "Learning rate");
    train_cmd->add_option("--weight-decay", train_cfg.weight_decay, "Weight decay");
    train_cmd->add_option("--batch-size", train_cfg.batch_size, "Mini-batch size");
    train_cmd->add_option("--epochs", train_cfg.epochs, "Epoch count");
    train_cmd->add_option("--sampling", sampling, "uniform or informative")
        ->check(CLI::IsMember({"uniform", "informative"}));
    train_cmd->add_option("--loss", loss, "eq5 or categorical")
        ->check(CLI::IsMember({"eq5", "categorical"}));
    train_cmd->add_option("--seed", train_cfg.seed, "Training seed");
    train_cmd->add_option("--clip-ratio", train_cfg.clip_ratio,
                          "Per-tensor step cap as a fraction of the tensor norm (0 disables)");
    train_cmd->add_option("--split", split, "Held-out fraction in (0, 1)")
        ->check(CLI::Range(0.0, 0.999));
    train_cmd->add_option("--size", train_size, "Resize inputs to H W")->expected(2);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint against a manifest");
    std::string eval_checkpoint, eval_manifest, eval_out, eval_name = "EDLM";
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "Manifest CSV")->required();
    eval_cmd->add_option("--out", eval_out, "Metrics JSON output file");
    eval_cmd->add_option("--name", eval_name, "Model name in the metrics document");

    // gradcheck
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient audit");
    std::uint64_t gc_seed = 0;
    int gc_networks = 100;
    gradcheck_cmd->add_option("--seed", gc_seed, "Suite seed");
    gradcheck_cmd->add_option("--networks", gc_networks, "Number of random networks");

    // report
    auto* report_cmd = app.add_subcommand("report", "Render a metrics comparison report");
    bool published = false;
    std::vector<std::string> metric_files;
    std::string report_out;
    report_cmd->add_flag("--published", published, "Include the published baseline table");
    report_cmd->add_option("--metrics", metric_files, "Metrics JSON files from eval");
    report_cmd->add_option("--out", report_out, "Write the machine-readable report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth) return run_synth(synth_out, per_class, synth_size, synth_seed);
        if (*preprocess) {
            enhance_cfg.tile_rows = tile_grid[0];
            enhance_cfg.tile_cols = tile_grid[1];
            enhance_cfg.channel_mode = channel_mode == "luminance" ? ChannelMode::luminance
                                                                   : ChannelMode::per_channel;
            return run_preprocess(pre_manifest, pre_out, enhance_cfg, pre_size);
        }
        if (*train_cmd) {
            train_cfg.sampling = sampling == "informative" ? SamplingMode::informative
                                                           : SamplingMode::uniform;
            train_cfg.loss = loss == "categorical" ? LossForm::categorical
                                                   : LossForm::binary_sum;
            return run_train(train_manifest, train_out, arch, classes, train_cfg, split,
                             train_size);
        }
        if (*eval_cmd) return run_eval(eval_checkpoint, eval_manifest, eval_out, eval_name);
        if (*gradcheck_cmd) return run_gradcheck(gc_seed, gc_networks);
        if (*report_cmd) {
            if (!published && metric_files.empty()) {
                std::cerr << "report needs --published and/or --metrics files\n";
                return kExitUsage;
            }
            return run_report(published, metric_files, report_out, common.data_root);
        }
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
