#include "edlm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "edlm/rng.hpp"

namespace edlm {

namespace {

constexpr const char* kHeader = "image_path,grade,ma_count,neovasc";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

int parse_int(const std::string& s, int lineno, const char* what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("manifest line " + std::to_string(lineno) + ": bad " + what + " value '" +
                      s + "'");
    }
}

std::string trim_cr(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
    return s;
}

}  // namespace

std::vector<ManifestRecord> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("missing manifest file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("manifest is empty (no header): " + path);
    if (trim_cr(line) != kHeader)
        throw IoError("manifest has a bad header (expected '" + std::string(kHeader) +
                      "'): " + path);

    std::vector<ManifestRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim_cr(line);
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() < 2 || cells.size() > 4)
            throw IoError("manifest line " + std::to_string(lineno) + ": expected 2-4 cells, got " +
                          std::to_string(cells.size()));
        ManifestRecord rec;
        rec.image_path = cells[0];
        if (rec.image_path.empty())
            throw IoError("manifest line " + std::to_string(lineno) + ": empty image path");
        rec.grade = parse_int(cells[1], lineno, "grade");
        if (rec.grade < 0 || rec.grade >= kNumGrades)
            throw IoError("manifest line " + std::to_string(lineno) + ": grade " +
                          std::to_string(rec.grade) + " outside 0-4");
        if (cells.size() >= 3 && !cells[2].empty()) {
            rec.ma_count = parse_int(cells[2], lineno, "ma_count");
            if (*rec.ma_count < 0)
                throw IoError("manifest line " + std::to_string(lineno) + ": negative ma_count");
        }
        if (cells.size() >= 4 && !cells[3].empty()) {
            const int v = parse_int(cells[3], lineno, "neovasc");
            if (v != 0 && v != 1)
                throw IoError("manifest line " + std::to_string(lineno) +
                              ": neovasc must be 0 or 1");
            rec.neovascularisation = v == 1;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_manifest(const std::string& path, const std::vector<ManifestRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open manifest for writing: " + path);
    out << kHeader << '\n';
    for (const auto& rec : records) {
        out << rec.image_path << ',' << rec.grade << ',';
        if (rec.ma_count) out << *rec.ma_count;
        out << ',';
        if (rec.neovascularisation) out << (*rec.neovascularisation ? 1 : 0);
        out << '\n';
    }
    if (!out) throw IoError("failed while writing manifest: " + path);
}

ClassDistribution class_distribution(const std::vector<ManifestRecord>& records) {
    ClassDistribution dist;
    for (const auto& rec : records) {
        ++dist.per_grade[static_cast<std::size_t>(rec.grade)];
        ++dist.total;
    }
    return dist;
}

std::pair<std::vector<ManifestRecord>, std::vector<ManifestRecord>> stratified_split(
    const std::vector<ManifestRecord>& records, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ValueError("test_fraction must be in (0, 1)");

    Rng rng(seed);
    std::vector<bool> in_test(records.size(), false);
    for (int grade = 0; grade < kNumGrades; ++grade) {
        std::vector<std::size_t> indices;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].grade == grade) indices.push_back(i);
        // Fisher-Yates on this class's indices, then take the head as test.
        for (std::size_t i = indices.size(); i > 1; --i)
            std::swap(indices[i - 1], indices[rng.below(i)]);
        const auto take = static_cast<std::size_t>(
            std::lround(static_cast<double>(indices.size()) * test_fraction));
        for (std::size_t i = 0; i < take && i < indices.size(); ++i) in_test[indices[i]] = true;
    }

    std::pair<std::vector<ManifestRecord>, std::vector<ManifestRecord>> result;
    for (std::size_t i = 0; i < records.size(); ++i)
        (in_test[i] ? result.second : result.first).push_back(records[i]);
    return result;
}

}  // namespace edlm
