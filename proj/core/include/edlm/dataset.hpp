#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edlm/image.hpp"
#include "edlm/metrics.hpp"

namespace edlm {

/// One dataset row. ma_count and neovascularisation are optional lesion
/// annotations.
struct ManifestRecord {
    std::string image_path;
    int grade = 0;
    std::optional<int> ma_count;
    std::optional<bool> neovascularisation;

    bool operator==(const ManifestRecord&) const = default;
};

/// Parses a CSV manifest with the exact header
/// `image_path,grade,ma_count,neovasc`; empty optional cells are allowed.
/// Malformed rows raise an error citing the line number.
std::vector<ManifestRecord> load_manifest(const std::string& path);

void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records);

struct ClassDistribution {
    std::array<std::int64_t, kNumGrades> per_grade{};
    std::int64_t total = 0;
};

ClassDistribution class_distribution(const std::vector<ManifestRecord>& records);

/// Per-class shuffled split. Test count per class is round(count * fraction);
/// both halves keep the original manifest order. Deterministic given seed.
std::pair<std::vector<ManifestRecord>, std::vector<ManifestRecord>> stratified_split(
    const std::vector<ManifestRecord>& records, double test_fraction, std::uint64_t seed);

/// One generated sample with its ground-truth lesion stats.
struct SynthSample {
    ImageU8 image;
    int grade = 0;
    int ma_count = 0;
    bool neovascularisation = false;
};

/// Deterministic synthetic retina generator for desk-scale training: a
/// textured disc background plus class-dependent lesion motifs (dark dots as
/// microaneurysm proxies, dark blobs as hemorrhage proxies, bright branching
/// filaments as a neovascularisation proxy) and Gaussian pixel noise
/// (sigma 8). Dot counts per grade follow the lesion-count grading rule.
std::vector<SynthSample> synth_dataset(int n_per_class, int image_size, std::uint64_t seed);

}  // namespace edlm
