#pragma once

#include <cstdint>
#include <string>

#include "sigver/image.hpp"

namespace sigver {

struct PreprocessConfig {
    int canvas_height = 840;
    int canvas_width = 1360;
    int out_height = 170;
    int out_width = 242;

    /// Throws InvalidConfig unless 0 < out dims <= canvas dims.
    void validate() const;
};

/// Otsu's threshold over the 256-bin histogram: the level t maximizing the
/// between-class variance of {intensity <= t} vs {intensity > t}. Ties pick
/// the smallest t; a constant image returns its constant value.
std::uint8_t otsu_threshold(const GrayImage& img);

/// Pixels strictly above the Otsu threshold become pure background (255);
/// ink pixels are kept as-is. Idempotent.
GrayImage remove_background(const GrayImage& img);

/// Places the image on a fresh background canvas so that its ink center of
/// mass (pixels < 255, weighted by darkness 255 - v) lands on the canvas
/// center, offsets rounded to the nearest pixel. Ink overhanging the canvas
/// is cropped. Throws NoInk when the image has no pixel below 255.
GrayImage center_on_canvas(const GrayImage& img, const PreprocessConfig& cfg);

/// value = (255 - intensity) / 255: background 0, darkest ink 1.
FloatImage invert_normalize(const GrayImage& img);

/// Corner-aligned bilinear resampling: source coordinate of output index i
/// is i * (in - 1) / (out - 1); a single-row/column output samples index 0.
FloatImage resize_bilinear(const FloatImage& img, int out_height, int out_width);

/// load -> remove_background -> center_on_canvas -> invert_normalize ->
/// resize to (cfg.out_height, cfg.out_width). Deterministic.
FloatImage preprocess_pipeline(const std::string& path, const PreprocessConfig& cfg);

/// Pipeline minus the initial decode, for callers that already hold pixels.
FloatImage preprocess_image(const GrayImage& img, const PreprocessConfig& cfg);

} // namespace sigver
