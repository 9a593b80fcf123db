#include "edlm/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace edlm {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline std::uint8_t round_u8(double v) {
    return static_cast<std::uint8_t>(clampi(static_cast<int>(std::lround(v)), 0, 255));
}

std::vector<std::uint8_t> extract_plane(const ImageU8& img, int c) {
    std::vector<std::uint8_t> plane(static_cast<std::size_t>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            plane[static_cast<std::size_t>(y) * img.width + x] = img.at(y, x, c);
    return plane;
}

std::vector<std::uint8_t> median_plane(const std::vector<std::uint8_t>& plane, int h, int w,
                                       int window) {
    const int r = window / 2;
    std::vector<std::uint8_t> out(plane.size());
    std::vector<std::uint8_t> neighborhood(static_cast<std::size_t>(window) * window);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t n = 0;
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = clampi(y + dy, 0, h - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = clampi(x + dx, 0, w - 1);
                    neighborhood[n++] = plane[static_cast<std::size_t>(yy) * w + xx];
                }
            }
            auto mid = neighborhood.begin() + static_cast<std::ptrdiff_t>(n / 2);
            std::nth_element(neighborhood.begin(), mid, neighborhood.begin() + static_cast<std::ptrdiff_t>(n));
            out[static_cast<std::size_t>(y) * w + x] = *mid;
        }
    }
    return out;
}

std::vector<std::uint8_t> gaussian_plane(const std::vector<std::uint8_t>& plane, int h, int w,
                                         double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    const int n = 2 * r + 1;
    // Truncated 2-d kernel, renormalized to sum exactly 1.
    std::vector<double> kernel(static_cast<std::size_t>(n) * n);
    double total = 0.0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            kernel[static_cast<std::size_t>(dy + r) * n + (dx + r)] = v;
            total += v;
        }
    for (double& v : kernel) v /= total;

    std::vector<std::uint8_t> out(plane.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = clampi(y + dy, 0, h - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = clampi(x + dx, 0, w - 1);
                    acc += kernel[static_cast<std::size_t>(dy + r) * n + (dx + r)] *
                           plane[static_cast<std::size_t>(yy) * w + xx];
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = round_u8(acc);
        }
    }
    return out;
}

/// Tile boundaries that partition `extent` into `tiles` nearly equal runs.
struct TileEdges {
    std::vector<int> start;   // inclusive
    std::vector<int> stop;    // exclusive
    std::vector<double> center;
};

TileEdges make_edges(int extent, int tiles) {
    TileEdges e;
    for (int t = 0; t < tiles; ++t) {
        const int s = static_cast<int>(static_cast<long long>(t) * extent / tiles);
        const int p = static_cast<int>(static_cast<long long>(t + 1) * extent / tiles);
        e.start.push_back(s);
        e.stop.push_back(p);
        e.center.push_back((s + p - 1) / 2.0);
    }
    return e;
}

/// Per-pixel interpolation coordinates: the two surrounding tile indices and
/// the blend weight toward the second one.
struct Blend {
    std::vector<int> lo, hi;
    std::vector<double> frac;
};

Blend make_blend(int extent, const TileEdges& edges) {
    Blend b;
    b.lo.resize(extent);
    b.hi.resize(extent);
    b.frac.resize(extent);
    const int tiles = static_cast<int>(edges.center.size());
    for (int v = 0; v < extent; ++v) {
        if (v <= edges.center.front()) {
            b.lo[v] = b.hi[v] = 0;
            b.frac[v] = 0.0;
        } else if (v >= edges.center.back()) {
            b.lo[v] = b.hi[v] = tiles - 1;
            b.frac[v] = 0.0;
        } else {
            int t = 0;
            while (edges.center[t + 1] < v) ++t;
            b.lo[v] = t;
            b.hi[v] = t + 1;
            b.frac[v] = (v - edges.center[t]) / (edges.center[t + 1] - edges.center[t]);
        }
    }
    return b;
}

std::vector<std::uint8_t> clahe_plane(const std::vector<std::uint8_t>& plane, int h, int w,
                                      const EnhanceConfig& cfg) {
    const TileEdges rows = make_edges(h, cfg.tile_rows);
    const TileEdges cols = make_edges(w, cfg.tile_cols);

    std::vector<Lut256> luts(static_cast<std::size_t>(cfg.tile_rows) * cfg.tile_cols);
    for (int ty = 0; ty < cfg.tile_rows; ++ty) {
        for (int tx = 0; tx < cfg.tile_cols; ++tx) {
            Histogram256 hist{};
            for (int y = rows.start[ty]; y < rows.stop[ty]; ++y)
                for (int x = cols.start[tx]; x < cols.stop[tx]; ++x)
                    ++hist[plane[static_cast<std::size_t>(y) * w + x]];
            Lut256& lut = luts[static_cast<std::size_t>(ty) * cfg.tile_cols + tx];
            int occupied = 0;
            for (std::uint32_t c : hist) occupied += c > 0;
            if (occupied <= 1) {
                // Zero dynamic range: there is no contrast to redistribute,
                // so the tile maps identically (keeps constant regions and
                // constant images fixed).
                for (int v = 0; v < 256; ++v)
                    lut[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(v);
                continue;
            }
            const std::int64_t pixels =
                static_cast<std::int64_t>(rows.stop[ty] - rows.start[ty]) *
                (cols.stop[tx] - cols.start[tx]);
            const Histogram256 clipped = clip_histogram(hist, cfg.clip_fraction, pixels);
            lut = build_lut(clipped);
        }
    }

    const Blend by = make_blend(h, rows);
    const Blend bx = make_blend(w, cols);
    std::vector<std::uint8_t> out(plane.size());
    for (int y = 0; y < h; ++y) {
        const int ty0 = by.lo[y], ty1 = by.hi[y];
        const double fy = by.frac[y];
        for (int x = 0; x < w; ++x) {
            const int tx0 = bx.lo[x], tx1 = bx.hi[x];
            const double fx = bx.frac[x];
            const std::uint8_t v = plane[static_cast<std::size_t>(y) * w + x];
            const double v00 = luts[static_cast<std::size_t>(ty0) * cfg.tile_cols + tx0][v];
            const double v01 = luts[static_cast<std::size_t>(ty0) * cfg.tile_cols + tx1][v];
            const double v10 = luts[static_cast<std::size_t>(ty1) * cfg.tile_cols + tx0][v];
            const double v11 = luts[static_cast<std::size_t>(ty1) * cfg.tile_cols + tx1][v];
            const double top = v00 * (1.0 - fx) + v01 * fx;
            const double bottom = v10 * (1.0 - fx) + v11 * fx;
            out[static_cast<std::size_t>(y) * w + x] = round_u8(top * (1.0 - fy) + bottom * fy);
        }
    }
    return out;
}

}  // namespace

ImageU8 hybrid_filter(const ImageU8& img, const EnhanceConfig& cfg) {
    cfg.validate();
    ImageU8 out(img.height, img.width);
    for (int c = 0; c < 3; ++c) {
        auto plane = extract_plane(img, c);
        plane = median_plane(plane, img.height, img.width, cfg.median_window);
        plane = gaussian_plane(plane, img.height, img.width, cfg.gaussian_sigma);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(y, x, c) = plane[static_cast<std::size_t>(y) * img.width + x];
    }
    return out;
}

Histogram256 clip_histogram(const Histogram256& h, double clip_fraction,
                            std::int64_t region_pixels) {
    if (!(clip_fraction >= 0.002 && clip_fraction <= 0.005))
        throw ValueError("clip_fraction must be in [0.002, 0.005], got " +
                         std::to_string(clip_fraction));
    const std::int64_t level =
        std::max<std::int64_t>(1, std::llround(clip_fraction * static_cast<double>(region_pixels)));

    Histogram256 out{};
    std::int64_t excess = 0;
    for (int i = 0; i < 256; ++i) {
        const std::int64_t c = h[static_cast<std::size_t>(i)];
        if (c > level) {
            out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(level);
            excess += c - level;
        } else {
            out[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(c);
        }
    }
    const std::int64_t share = excess / 256;
    const std::int64_t remainder = excess % 256;
    for (int i = 0; i < 256; ++i)
        out[static_cast<std::size_t>(i)] += static_cast<std::uint32_t>(share + (i < remainder ? 1 : 0));
    return out;
}

Lut256 build_lut(const Histogram256& h) {
    std::uint64_t total = 0;
    for (std::uint32_t c : h) total += c;
    if (total == 0) throw ValueError("cannot build a LUT from an empty histogram");
    Lut256 lut{};
    std::uint64_t cum = 0;
    for (int v = 0; v < 256; ++v) {
        cum += h[static_cast<std::size_t>(v)];
        lut[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(
            std::lround(255.0 * static_cast<double>(cum) / static_cast<double>(total)));
    }
    return lut;
}

ImageU8 clahe(const ImageU8& img, const EnhanceConfig& cfg) {
    cfg.validate();
    if (img.height < cfg.tile_rows || img.width < cfg.tile_cols)
        throw ValueError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                         " is smaller than the tile grid " + std::to_string(cfg.tile_rows) + "x" +
                         std::to_string(cfg.tile_cols));

    ImageU8 out(img.height, img.width);
    if (cfg.channel_mode == ChannelMode::per_channel) {
        for (int c = 0; c < 3; ++c) {
            const auto plane = clahe_plane(extract_plane(img, c), img.height, img.width, cfg);
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x)
                    out.at(y, x, c) = plane[static_cast<std::size_t>(y) * img.width + x];
        }
        return out;
    }

    // Luminance mode: equalize the BT.601 luma plane and rescale RGB by the
    // per-pixel luma ratio.
    std::vector<std::uint8_t> luma(static_cast<std::size_t>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            luma[static_cast<std::size_t>(y) * img.width + x] = round_u8(
                0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2));
    const auto mapped = clahe_plane(luma, img.height, img.width, cfg);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
            const double ratio = (mapped[i] + 1.0) / (luma[i] + 1.0);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = round_u8(img.at(y, x, c) * ratio);
        }
    }
    return out;
}

ImageU8 resize_bilinear(const ImageU8& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw ShapeError("resize extents must be >= 1");
    if (out_h == img.height && out_w == img.width) return img;

    ImageU8 out(out_h, out_w);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        const int yf = static_cast<int>(std::floor(src_y));
        const double fy = src_y - yf;
        const int y0 = clampi(yf, 0, img.height - 1);
        const int y1 = clampi(yf + 1, 0, img.height - 1);
        for (int x = 0; x < out_w; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            const int xf = static_cast<int>(std::floor(src_x));
            const double fx = src_x - xf;
            const int x0 = clampi(xf, 0, img.width - 1);
            const int x1 = clampi(xf + 1, 0, img.width - 1);
            for (int c = 0; c < 3; ++c) {
                const double top = img.at(y0, x0, c) * (1.0 - fx) + img.at(y0, x1, c) * fx;
                const double bottom = img.at(y1, x0, c) * (1.0 - fx) + img.at(y1, x1, c) * fx;
                out.at(y, x, c) = round_u8(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    return out;
}

ImageU8 enhance(const ImageU8& img, const EnhanceConfig& cfg) {
    return clahe(hybrid_filter(img, cfg), cfg);
}

}  // namespace edlm
