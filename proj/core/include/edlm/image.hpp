#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edlm/error.hpp"

namespace edlm {

/// 8-bit RGB image, row-major, interleaved channels.
struct ImageU8 {
    int height = 0;
    int width = 0;
    static constexpr int channels = 3;
    std::vector<std::uint8_t> data;

    ImageU8() = default;
    ImageU8(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0) {
        if (h < 1 || w < 1) throw ShapeError("image extents must be >= 1");
    }

    std::uint8_t& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    bool operator==(const ImageU8&) const = default;
};

/// Decodes a PNG or JPEG file into 8-bit RGB; grayscale sources are expanded
/// to three channels. Unsupported variants (e.g. CMYK JPEG) are rejected with
/// a clear error.
ImageU8 decode_image(const std::string& path);

/// Encodes by file extension: .png (lossless) or .jpg/.jpeg (quality 95).
void encode_image(const std::string& path, const ImageU8& img);

}  // namespace edlm
