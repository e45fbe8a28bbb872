#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "sigver/error.hpp"
#include "sigver/image_io.hpp"
#include "sigver/preprocess.hpp"
#include "sigver/rng.hpp"
#include "test_support.hpp"

using namespace sigver;
using testsup::gray_image;
using testsup::thrown_code;

namespace {

// Independent Otsu oracle: scan all 256 thresholds, between-class variance
// computed directly from per-pixel sums.
int otsu_oracle(const GrayImage& img) {
    const double n = static_cast<double>(img.pixels.size());
    int best = 0;
    double best_var = -1.0;
    for (int t = 0; t < 256; ++t) {
        double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (std::uint8_t p : img.pixels) {
            if (p <= t) { n0 += 1; s0 += p; }
            else { n1 += 1; s1 += p; }
        }
        if (n0 == 0 || n1 == 0) continue;
        double mu0 = s0 / n0, mu1 = s1 / n1;
        double var = (n0 / n) * (n1 / n) * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best = t;
        }
    }
    return best;
}

GrayImage random_gray(int h, int w, Rng& rng) {
    GrayImage img(h, w);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

// Signature-like raster: bright background, dark blob.
GrayImage blobby_gray(int h, int w, Rng& rng) {
    GrayImage img(h, w, 250);
    int blobs = 2 + static_cast<int>(rng.below(3));
    for (int b = 0; b < blobs; ++b) {
        int cy = 2 + static_cast<int>(rng.below(std::max(1, h - 4)));
        int cx = 2 + static_cast<int>(rng.below(std::max(1, w - 4)));
        for (int y = std::max(0, cy - 2); y < std::min(h, cy + 2); ++y)
            for (int x = std::max(0, cx - 2); x < std::min(w, cx + 2); ++x)
                img.at(y, x) = static_cast<std::uint8_t>(rng.below(80));
    }
    return img;
}

} // namespace

TEST_CASE("otsu threshold: trivial cases") {
    GrayImage bimodal(2, 2);
    bimodal.pixels = {0, 0, 255, 255};
    std::uint8_t t = otsu_threshold(bimodal);
    CHECK(t < 255); // separates the two modes
    CHECK(t == otsu_oracle(bimodal));

    GrayImage constant(3, 3, 200);
    CHECK(otsu_threshold(constant) == 200);

    GrayImage six = gray_image(1, 6, {10, 10, 10, 240, 240, 240});
    CHECK(otsu_threshold(six) == otsu_oracle(six));
    CHECK(otsu_threshold(six) == 10); // smallest threshold on the plateau
}

TEST_CASE("otsu threshold equals exhaustive scan on random images") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        GrayImage img = trial % 2 == 0 ? random_gray(7, 9, rng) : blobby_gray(12, 15, rng);
        int expect = otsu_oracle(img);
        // oracle skips degenerate constant images
        if (*std::min_element(img.pixels.begin(), img.pixels.end()) ==
            *std::max_element(img.pixels.begin(), img.pixels.end()))
            continue;
        CHECK(otsu_threshold(img) == expect);
    }
}

TEST_CASE("remove_background masks above-threshold pixels") {
    GrayImage img = gray_image(1, 4, {10, 10, 240, 240});
    GrayImage expect = gray_image(1, 4, {10, 10, 255, 255});
    CHECK(remove_background(img) == expect);

    GrayImage all_ink(2, 2, 0);
    CHECK(remove_background(all_ink) == all_ink);

    GrayImage all_bg(2, 2, 255);
    CHECK(remove_background(all_bg) == all_bg);
}

TEST_CASE("remove_background is idempotent") {
    Rng rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        GrayImage img = trial % 2 == 0 ? random_gray(8, 8, rng) : blobby_gray(10, 14, rng);
        GrayImage once = remove_background(img);
        CHECK(remove_background(once) == once);
    }
}

TEST_CASE("center_on_canvas trivial placements") {
    PreprocessConfig cfg;
    cfg.canvas_height = 5;
    cfg.canvas_width = 5;
    cfg.out_height = 5;
    cfg.out_width = 5;

    GrayImage dot(1, 1, 0);
    GrayImage canvas = center_on_canvas(dot, cfg);
    CHECK(canvas.at(2, 2) == 0);
    int ink = 0;
    for (auto p : canvas.pixels) ink += p < 255 ? 1 : 0;
    CHECK(ink == 1);

    // symmetric 3x3 blob onto 9x9: blob center lands on (4,4)
    PreprocessConfig big;
    big.canvas_height = 9;
    big.canvas_width = 9;
    big.out_height = 9;
    big.out_width = 9;
    GrayImage blob(3, 3, 0);
    GrayImage placed = center_on_canvas(blob, big);
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c)
            CHECK(placed.at(r, c) == ((r >= 3 && r <= 5 && c >= 3 && c <= 5) ? 0 : 255));
}

TEST_CASE("center_on_canvas matches brute-force centroid on an L blob") {
    // L-shaped ink with nonuniform darkness
    GrayImage img(4, 4, 255);
    img.at(0, 0) = 0;
    img.at(1, 0) = 100;
    img.at(2, 0) = 50;
    img.at(3, 0) = 0;
    img.at(3, 1) = 10;
    img.at(3, 2) = 40;

    double mass = 0, mr = 0, mc = 0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            double w = 255.0 - img.at(r, c);
            mass += w;
            mr += w * r;
            mc += w * c;
        }
    double cy = mr / mass, cx = mc / mass;

    PreprocessConfig cfg;
    cfg.canvas_height = 21;
    cfg.canvas_width = 21;
    cfg.out_height = 21;
    cfg.out_width = 21;
    GrayImage canvas = center_on_canvas(img, cfg);

    long off_r = std::llround(10.0 - cy);
    long off_c = std::llround(10.0 - cx);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(canvas.at(r + static_cast<int>(off_r), c + static_cast<int>(off_c)) ==
                  img.at(r, c));
}

TEST_CASE("center_on_canvas errors and cropping") {
    PreprocessConfig cfg;
    cfg.canvas_height = 4;
    cfg.canvas_width = 4;
    cfg.out_height = 4;
    cfg.out_width = 4;

    GrayImage blank(3, 3, 255);
    CHECK(thrown_code([&] { center_on_canvas(blank, cfg); }) == ErrorCode::NoInk);

    // ink wider than the canvas is cropped, not rescaled
    GrayImage wide(1, 9, 0);
    GrayImage canvas = center_on_canvas(wide, cfg);
    CHECK(canvas.height == 4);
    CHECK(canvas.width == 4);
    int ink = 0;
    for (auto p : canvas.pixels) ink += p < 255 ? 1 : 0;
    CHECK(ink == 4); // one full row survives
}

TEST_CASE("invert_normalize formula") {
    GrayImage img = gray_image(1, 3, {255, 0, 128});
    FloatImage f = invert_normalize(img);
    CHECK(f.values[0] == 0.0f);
    CHECK(f.values[1] == 1.0f);
    CHECK(f.values[2] == doctest::Approx(127.0f / 255.0f));
}

TEST_CASE("resize_bilinear identity and constants") {
    Rng rng(3);
    FloatImage img = testsup::random_float_image(5, 7, rng);
    CHECK(resize_bilinear(img, 5, 7) == img);

    FloatImage constant(4, 4, 0.37f);
    FloatImage r = resize_bilinear(constant, 9, 3);
    for (float v : r.values) CHECK(v == doctest::Approx(0.37f));
}

TEST_CASE("resize_bilinear 2x2 -> 3x3 matches the bilinear formula") {
    FloatImage img(2, 2);
    float a = 0.0f, b = 1.0f, c = 0.5f, d = 0.25f;
    img.at(0, 0) = a;
    img.at(0, 1) = b;
    img.at(1, 0) = c;
    img.at(1, 1) = d;

    FloatImage r = resize_bilinear(img, 3, 3);
    // corner-aligned sample grid {0, 0.5, 1} in each axis
    CHECK(r.at(0, 0) == doctest::Approx(a));
    CHECK(r.at(0, 1) == doctest::Approx((a + b) / 2));
    CHECK(r.at(0, 2) == doctest::Approx(b));
    CHECK(r.at(1, 0) == doctest::Approx((a + c) / 2));
    CHECK(r.at(1, 1) == doctest::Approx((a + b + c + d) / 4));
    CHECK(r.at(1, 2) == doctest::Approx((b + d) / 2));
    CHECK(r.at(2, 0) == doctest::Approx(c));
    CHECK(r.at(2, 1) == doctest::Approx((c + d) / 2));
    CHECK(r.at(2, 2) == doctest::Approx(d));
}

TEST_CASE("resize keeps values in [0,1]") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        FloatImage img = testsup::random_float_image(6, 9, rng);
        FloatImage r = resize_bilinear(img, 4, 13);
        for (float v : r.values) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("preprocess pipeline: shape, range, determinism, NoInk") {
    testsup::TempDir tmp("preprocess");
    PreprocessConfig cfg;
    cfg.canvas_height = 24;
    cfg.canvas_width = 32;
    cfg.out_height = 12;
    cfg.out_width = 16;

    Rng rng(23);
    GrayImage img = blobby_gray(18, 25, rng);
    std::string path = tmp.str("sig.pgm");
    save_pgm(img, path);

    FloatImage out = preprocess_pipeline(path, cfg);
    CHECK(out.height == 12);
    CHECK(out.width == 16);
    for (float v : out.values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    FloatImage again = preprocess_pipeline(path, cfg);
    CHECK(out == again); // bit-identical

    GrayImage blank(10, 10, 255);
    std::string blank_path = tmp.str("blank.pgm");
    save_pgm(blank, blank_path);
    CHECK(thrown_code([&] { preprocess_pipeline(blank_path, cfg); }) == ErrorCode::NoInk);
}

TEST_CASE("pipeline is invariant to translating the ink blob") {
    PreprocessConfig cfg;
    cfg.canvas_height = 40;
    cfg.canvas_width = 40;
    cfg.out_height = 20;
    cfg.out_width = 20;

    Rng rng(29);
    for (int trial = 0; trial < 8; ++trial) {
        GrayImage base(30, 30, 255);
        // small blob near the center
        for (int r = 13; r < 17; ++r)
            for (int c = 12; c < 18; ++c)
                base.at(r, c) = static_cast<std::uint8_t>(rng.below(100));

        int dy = static_cast<int>(rng.below(7)) - 3;
        int dx = static_cast<int>(rng.below(7)) - 3;
        GrayImage moved(30, 30, 255);
        for (int r = 13; r < 17; ++r)
            for (int c = 12; c < 18; ++c)
                moved.at(r + dy, c + dx) = base.at(r, c);

        FloatImage a = preprocess_image(base, cfg);
        FloatImage b = preprocess_image(moved, cfg);
        CHECK(a == b);
    }
}

TEST_CASE("preprocess config validation") {
    PreprocessConfig cfg;
    cfg.out_height = cfg.canvas_height + 1;
    CHECK(thrown_code([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
    PreprocessConfig neg;
    neg.canvas_width = 0;
    CHECK(thrown_code([&] { neg.validate(); }) == ErrorCode::InvalidConfig);
}
