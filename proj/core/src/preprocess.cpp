#include "sigver/preprocess.hpp"

#include <array>
#include <cmath>
#include <cstdint>

#include "sigver/error.hpp"
#include "sigver/image_io.hpp"

namespace sigver {

void PreprocessConfig::validate() const {
    if (canvas_height < 1 || canvas_width < 1 || out_height < 1 || out_width < 1)
        raise(ErrorCode::InvalidConfig, "preprocess dimensions must be positive");
    if (out_height > canvas_height || out_width > canvas_width)
        raise(ErrorCode::InvalidConfig, "output dimensions must not exceed the canvas");
}

std::uint8_t otsu_threshold(const GrayImage& img) {
    if (img.pixels.empty()) raise(ErrorCode::EmptyInput, "otsu_threshold on empty image");

    std::array<std::uint64_t, 256> hist{};
    for (std::uint8_t p : img.pixels) hist[p]++;

    int lo = 0, hi = 255;
    while (hist[lo] == 0) ++lo;
    while (hist[hi] == 0) --hi;
    if (lo == hi) return static_cast<std::uint8_t>(lo); // constant image keeps its value

    const double total = static_cast<double>(img.pixels.size());
    double sum_all = 0.0;
    for (int v = 0; v < 256; ++v) sum_all += static_cast<double>(v) * hist[v];

    int best = 0;
    double best_var = -1.0;
    double w0 = 0.0, sum0 = 0.0;
    for (int t = 0; t < 256; ++t) {
        w0 += static_cast<double>(hist[t]);
        sum0 += static_cast<double>(t) * hist[t];
        double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        double mu0 = sum0 / w0;
        double mu1 = (sum_all - sum0) / w1;
        double var = (w0 / total) * (w1 / total) * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) { // ties keep the smallest t
            best_var = var;
            best = t;
        }
    }
    return static_cast<std::uint8_t>(best);
}

GrayImage remove_background(const GrayImage& img) {
    if (img.pixels.empty()) return img;
    std::uint8_t t = otsu_threshold(img);
    GrayImage out = img;
    for (auto& p : out.pixels)
        if (p > t) p = 255;
    return out;
}

GrayImage center_on_canvas(const GrayImage& img, const PreprocessConfig& cfg) {
    cfg.validate();

    double mass = 0.0, mr = 0.0, mc = 0.0;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            int w = 255 - img.at(r, c);
            if (w == 0) continue;
            mass += w;
            mr += static_cast<double>(w) * r;
            mc += static_cast<double>(w) * c;
        }
    }
    if (mass == 0.0) raise(ErrorCode::NoInk, "image has no ink pixels");

    double center_r = (cfg.canvas_height - 1) / 2.0;
    double center_c = (cfg.canvas_width - 1) / 2.0;
    long off_r = std::llround(center_r - mr / mass);
    long off_c = std::llround(center_c - mc / mass);

    GrayImage canvas(cfg.canvas_height, cfg.canvas_width, 255);
    for (int r = 0; r < img.height; ++r) {
        long dest_r = r + off_r;
        if (dest_r < 0 || dest_r >= cfg.canvas_height) continue;
        for (int c = 0; c < img.width; ++c) {
            long dest_c = c + off_c;
            if (dest_c < 0 || dest_c >= cfg.canvas_width) continue;
            canvas.at(static_cast<int>(dest_r), static_cast<int>(dest_c)) = img.at(r, c);
        }
    }
    return canvas;
}

FloatImage invert_normalize(const GrayImage& img) {
    FloatImage out(img.height, img.width);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.values[i] = static_cast<float>(255 - img.pixels[i]) / 255.0f;
    return out;
}

FloatImage resize_bilinear(const FloatImage& img, int out_height, int out_width) {
    if (out_height < 1 || out_width < 1)
        raise(ErrorCode::InvalidConfig, "resize target must be positive");

    FloatImage out(out_height, out_width);
    double sy = out_height > 1 ? static_cast<double>(img.height - 1) / (out_height - 1) : 0.0;
    double sx = out_width > 1 ? static_cast<double>(img.width - 1) / (out_width - 1) : 0.0;

    for (int oy = 0; oy < out_height; ++oy) {
        double fy = oy * sy;
        int y0 = static_cast<int>(fy);
        int y1 = y0 + 1 < img.height ? y0 + 1 : y0;
        double wy = fy - y0;
        for (int ox = 0; ox < out_width; ++ox) {
            double fx = ox * sx;
            int x0 = static_cast<int>(fx);
            int x1 = x0 + 1 < img.width ? x0 + 1 : x0;
            double wx = fx - x0;
            double top = (1.0 - wx) * img.at(y0, x0) + wx * img.at(y0, x1);
            double bot = (1.0 - wx) * img.at(y1, x0) + wx * img.at(y1, x1);
            out.at(oy, ox) = static_cast<float>((1.0 - wy) * top + wy * bot);
        }
    }
    return out;
}

FloatImage preprocess_image(const GrayImage& img, const PreprocessConfig& cfg) {
    cfg.validate();
    GrayImage masked = remove_background(img);
    GrayImage centered = center_on_canvas(masked, cfg);
    FloatImage normalized = invert_normalize(centered);
    return resize_bilinear(normalized, cfg.out_height, cfg.out_width);
}

FloatImage preprocess_pipeline(const std::string& path, const PreprocessConfig& cfg) {
    return preprocess_image(load_grayscale(path), cfg);
}

} // namespace sigver
