#pragma once

#include <array>
#include <cstdint>

#include "edlm/error.hpp"
#include "edlm/image.hpp"

namespace edlm {

enum class ChannelMode { per_channel, luminance };

/// Knobs of the enhancement pipeline. clip_fraction is the histogram clip
/// limit as a fraction of the tile's pixel count and must stay in
/// [0.002, 0.005].
struct EnhanceConfig {
    double clip_fraction = 0.003;
    int tile_rows = 8;
    int tile_cols = 8;
    int median_window = 3;
    double gaussian_sigma = 1.0;
    ChannelMode channel_mode = ChannelMode::per_channel;

    void validate() const {
        if (!(clip_fraction >= 0.002 && clip_fraction <= 0.005))
            throw ValueError("clip_fraction must be in [0.002, 0.005], got " +
                             std::to_string(clip_fraction));
        if (tile_rows < 1 || tile_cols < 1)
            throw ValueError("tile grid extents must be >= 1");
        if (median_window < 1 || median_window % 2 == 0)
            throw ValueError("median_window must be odd and >= 1");
        if (!(gaussian_sigma > 0)) throw ValueError("gaussian_sigma must be > 0");
    }
};

/// 256-bin intensity histogram; the counts of a region always sum to its
/// pixel count.
using Histogram256 = std::array<std::uint32_t, 256>;

/// Look-up table mapping input intensity to equalized output intensity.
using Lut256 = std::array<std::uint8_t, 256>;

/// Median filter (edge-replicate) followed by Gaussian blur (radius
/// ceil(3*sigma), edge-replicate, kernel renormalized to sum 1), applied per
/// channel.
ImageU8 hybrid_filter(const ImageU8& img, const EnhanceConfig& cfg);

/// Caps every bin at max(1, round(clip_fraction * region_pixels)) and
/// redistributes the clipped excess uniformly: excess / 256 to every bin and
/// the remainder r to the first r bins. Total count is conserved exactly.
Histogram256 clip_histogram(const Histogram256& h, double clip_fraction,
                            std::int64_t region_pixels);

/// LUT[v] = round(255 * CDF(v)); monotone non-decreasing.
Lut256 build_lut(const Histogram256& h);

/// Contrast-limited adaptive histogram equalization: per tile histogram ->
/// clip -> LUT, then bilinear interpolation between the four nearest tile
/// centers per pixel (edges clamp to the nearest centers).
ImageU8 clahe(const ImageU8& img, const EnhanceConfig& cfg);

/// Bilinear resampling with half-pixel centers; same-size calls return the
/// input bit-identically.
ImageU8 resize_bilinear(const ImageU8& img, int out_h, int out_w);

/// The full enhancement pipeline: hybrid_filter then clahe.
ImageU8 enhance(const ImageU8& img, const EnhanceConfig& cfg);

}  // namespace edlm
