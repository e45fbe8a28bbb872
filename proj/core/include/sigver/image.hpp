#pragma once

#include <cstdint>
#include <vector>

namespace sigver {

/// 8-bit grayscale raster, row-major, 0 = black ink, 255 = white background.
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }

    bool operator==(const GrayImage&) const = default;
};

/// Normalized float raster in [0,1]; 0 = background, 1 = darkest ink.
struct FloatImage {
    int height = 0;
    int width = 0;
    std::vector<float> values;

    FloatImage() = default;
    FloatImage(int h, int w, float fill = 0.0f)
        : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

    float& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
    float at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }

    bool operator==(const FloatImage&) const = default;
};

} // namespace sigver
