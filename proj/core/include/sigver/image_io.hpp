#pragma once

#include <string>

#include "sigver/image.hpp"

namespace sigver {

/// Decodes a PNG or binary PGM (P5) file to grayscale. Color PNGs are
/// reduced with integer luminance round(0.299 R + 0.587 G + 0.114 B);
/// alpha is ignored. Throws FileNotFound, UnsupportedFormat or DecodeError.
GrayImage load_grayscale(const std::string& path);

void save_pgm(const GrayImage& img, const std::string& path);

/// 8-bit grayscale PNG writer (fixture and corpus generation).
void save_png_gray(const GrayImage& img, const std::string& path);

/// 8-bit RGB PNG writer; rgb is row-major interleaved, 3 bytes per pixel.
void save_png_rgb(int height, int width, const std::vector<std::uint8_t>& rgb,
                  const std::string& path);

/// Preprocessed-raster cache entry ("SIMG": magic, height u32, width u32,
/// row-major f32 values, little-endian).
void save_float_image(const FloatImage& img, const std::string& path);
FloatImage load_float_image(const std::string& path);

} // namespace sigver
