#include <cmath>

#include "edlm/dataset.hpp"
#include "edlm/rng.hpp"

namespace edlm {

namespace {

struct Rgb {
    int r, g, b;
};

// Generator palette and motif geometry. Dot/blob radii and filament lengths
// are pinned so the compact network can separate classes at 64x64.
constexpr Rgb kBackground{12, 10, 10};
constexpr Rgb kDiscBase{185, 105, 45};
constexpr Rgb kDot{25, 8, 8};          // microaneurysm proxy
constexpr Rgb kBlob{55, 12, 10};       // hemorrhage proxy
constexpr Rgb kFilament{248, 238, 170};  // neovascularisation proxy
constexpr int kDotRadiusMin = 1, kDotRadiusMax = 2;
constexpr int kBlobRadiusMin = 3, kBlobRadiusMax = 5;
constexpr int kFilamentLenMin = 8, kFilamentLenMax = 15;
constexpr double kNoiseSigma = 8.0;

void put(ImageU8& img, int y, int x, Rgb c) {
    if (y < 0 || y >= img.height || x < 0 || x >= img.width) return;
    img.at(y, x, 0) = static_cast<std::uint8_t>(c.r);
    img.at(y, x, 1) = static_cast<std::uint8_t>(c.g);
    img.at(y, x, 2) = static_cast<std::uint8_t>(c.b);
}

void fill_disc(ImageU8& img, double cy, double cx, double radius, Rgb color) {
    const int r = static_cast<int>(std::ceil(radius));
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (dy * dy + dx * dx <= radius * radius)
                put(img, static_cast<int>(cy) + dy, static_cast<int>(cx) + dx, color);
}

void draw_walk(ImageU8& img, Rng& rng, double y, double x, double angle, int length) {
    for (int step = 0; step < length; ++step) {
        y += std::sin(angle);
        x += std::cos(angle);
        angle += rng.uniform(-0.5, 0.5);
        // 2x2 stamp keeps the filament visible through the median filter.
        const int iy = static_cast<int>(std::lround(y));
        const int ix = static_cast<int>(std::lround(x));
        put(img, iy, ix, kFilament);
        put(img, iy + 1, ix, kFilament);
        put(img, iy, ix + 1, kFilament);
        put(img, iy + 1, ix + 1, kFilament);
    }
}

SynthSample make_sample(int grade, int size, Rng& rng) {
    SynthSample sample;
    sample.grade = grade;
    sample.image = ImageU8(size, size);
    ImageU8& img = sample.image;

    const double center = size / 2.0;
    const double disc_radius = 0.47 * size;

    // Textured disc on a dark field.
    const double ta = rng.uniform(0.5, 1.5), tb = rng.uniform(0.5, 1.5);
    const double phase = rng.uniform(0.0, 6.283185307179586);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double dy = y - center, dx = x - center;
            const double dist = std::sqrt(dy * dy + dx * dx);
            if (dist > disc_radius) {
                put(img, y, x, kBackground);
                continue;
            }
            const double falloff = 1.0 - 0.35 * (dist / disc_radius) * (dist / disc_radius);
            const double texture =
                6.0 * std::sin(6.283185307179586 * (ta * x + tb * y) / size + phase);
            auto ch = [&](int base) {
                const int v = static_cast<int>(std::lround(base * falloff + texture));
                return v < 0 ? 0 : (v > 255 ? 255 : v);
            };
            put(img, y, x, {ch(kDiscBase.r), ch(kDiscBase.g), ch(kDiscBase.b)});
        }
    }

    auto lesion_pos = [&](double max_frac) {
        // Uniform over a disc of radius max_frac * disc_radius.
        const double r = disc_radius * max_frac * std::sqrt(rng.real01());
        const double a = rng.uniform(0.0, 6.283185307179586);
        return std::pair<double, double>{center + r * std::sin(a), center + r * std::cos(a)};
    };

    switch (grade) {
        case 0: sample.ma_count = 0; break;
        case 1: sample.ma_count = rng.uniform_int(1, 5); break;
        case 2: sample.ma_count = rng.uniform_int(6, 15); break;
        case 3: sample.ma_count = rng.uniform_int(16, 30); break;
        default: sample.ma_count = rng.uniform_int(16, 30); break;
    }
    sample.neovascularisation = grade == 4;

    for (int i = 0; i < sample.ma_count; ++i) {
        const auto [y, x] = lesion_pos(0.8);
        fill_disc(img, y, x, rng.uniform_int(kDotRadiusMin, kDotRadiusMax), kDot);
    }
    if (grade >= 3) {
        const int blobs = rng.uniform_int(2, 4);
        for (int i = 0; i < blobs; ++i) {
            const auto [y, x] = lesion_pos(0.7);
            fill_disc(img, y, x, rng.uniform_int(kBlobRadiusMin, kBlobRadiusMax), kBlob);
        }
    }
    if (grade == 4) {
        const int filaments = rng.uniform_int(3, 5);
        for (int i = 0; i < filaments; ++i) {
            const auto [y, x] = lesion_pos(0.6);
            const double angle = rng.uniform(0.0, 6.283185307179586);
            const int length = rng.uniform_int(kFilamentLenMin, kFilamentLenMax);
            draw_walk(img, rng, y, x, angle, length);
            if (rng.real01() < 0.5)
                draw_walk(img, rng, y, x, angle + rng.uniform(0.8, 1.2), length / 2);
        }
    }

    for (std::uint8_t& v : img.data) {
        const double noisy = v + rng.normal(0.0, kNoiseSigma);
        v = static_cast<std::uint8_t>(noisy < 0 ? 0 : (noisy > 255 ? 255 : std::lround(noisy)));
    }
    return sample;
}

}  // namespace

std::vector<SynthSample> synth_dataset(int n_per_class, int image_size, std::uint64_t seed) {
    if (n_per_class < 1) throw ValueError("n_per_class must be >= 1");
    if (image_size < 32) throw ValueError("image_size must be >= 32");
    Rng rng(seed);
    std::vector<SynthSample> samples;
    samples.reserve(static_cast<std::size_t>(n_per_class) * kNumGrades);
    for (int grade = 0; grade < kNumGrades; ++grade)
        for (int i = 0; i < n_per_class; ++i) samples.push_back(make_sample(grade, image_size, rng));
    return samples;
}

}  // namespace edlm
