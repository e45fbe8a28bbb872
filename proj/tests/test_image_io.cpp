#include <doctest.h>

#include "sigver/error.hpp"
#include "sigver/image_io.hpp"
#include "sigver/rng.hpp"
#include "test_support.hpp"

using namespace sigver;
using testsup::thrown_code;

TEST_CASE("PGM decode is the identity on stored bytes") {
    testsup::TempDir tmp("pgm");
    GrayImage img = testsup::gray_image(2, 2, {0, 255, 128, 64});
    save_pgm(img, tmp.str("a.pgm"));
    CHECK(load_grayscale(tmp.str("a.pgm")) == img);
}

TEST_CASE("PGM with comments and maxval scaling") {
    testsup::TempDir tmp("pgm2");
    std::string raw = "P5 # comment\n2 1 # dims\n100\n";
    raw.push_back(static_cast<char>(100));
    raw.push_back(static_cast<char>(50));
    testsup::write_file_bytes(tmp.str("b.pgm"), raw);
    GrayImage img = load_grayscale(tmp.str("b.pgm"));
    CHECK(img.width == 2);
    CHECK(img.height == 1);
    CHECK(img.pixels[0] == 255); // 100/100 -> 255
    CHECK(img.pixels[1] == 128); // round(50*255/100)
}

TEST_CASE("grayscale PNG round trip") {
    testsup::TempDir tmp("png");
    Rng rng(7);
    GrayImage img(5, 9);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    save_png_gray(img, tmp.str("g.png"));
    CHECK(load_grayscale(tmp.str("g.png")) == img);
}

TEST_CASE("all-white RGB PNG becomes all-255 grayscale") {
    testsup::TempDir tmp("pngrgb");
    std::vector<std::uint8_t> rgb(4 * 4 * 3, 255);
    save_png_rgb(4, 4, rgb, tmp.str("w.png"));
    GrayImage img = load_grayscale(tmp.str("w.png"));
    CHECK(img.height == 4);
    CHECK(img.width == 4);
    for (auto p : img.pixels) CHECK(p == 255);
}

TEST_CASE("color PNG reduces with the documented luminance weights") {
    testsup::TempDir tmp("pnglum");
    // one pure-red, one pure-green, one pure-blue pixel
    std::vector<std::uint8_t> rgb = {255, 0, 0, 0, 255, 0, 0, 0, 255};
    save_png_rgb(1, 3, rgb, tmp.str("c.png"));
    GrayImage img = load_grayscale(tmp.str("c.png"));
    CHECK(img.pixels[0] == 76);  // round(0.299*255)
    CHECK(img.pixels[1] == 150); // round(0.587*255)
    CHECK(img.pixels[2] == 29);  // round(0.114*255)
}

TEST_CASE("decode errors") {
    testsup::TempDir tmp("bad");

    CHECK(thrown_code([&] { load_grayscale(tmp.str("missing.png")); }) ==
          ErrorCode::FileNotFound);

    testsup::write_file_bytes(tmp.str("junk.bin"), "this is not an image at all");
    CHECK(thrown_code([&] { load_grayscale(tmp.str("junk.bin")); }) ==
          ErrorCode::UnsupportedFormat);

    // P2 (ascii PGM) is explicitly unsupported
    testsup::write_file_bytes(tmp.str("ascii.pgm"), "P2\n1 1\n255\n0\n");
    CHECK(thrown_code([&] { load_grayscale(tmp.str("ascii.pgm")); }) ==
          ErrorCode::UnsupportedFormat);

    // truncated PNG
    GrayImage img(8, 8, 100);
    save_png_gray(img, tmp.str("t.png"));
    std::string bytes = testsup::read_file_bytes(tmp.str("t.png"));
    testsup::write_file_bytes(tmp.str("t.png"), bytes.substr(0, bytes.size() / 2));
    CHECK(thrown_code([&] { load_grayscale(tmp.str("t.png")); }) == ErrorCode::DecodeError);

    // truncated PGM raster
    testsup::write_file_bytes(tmp.str("t.pgm"), "P5\n4 4\n255\nxx");
    CHECK(thrown_code([&] { load_grayscale(tmp.str("t.pgm")); }) == ErrorCode::DecodeError);
}

TEST_CASE("float image cache round trip") {
    testsup::TempDir tmp("simg");
    Rng rng(9);
    FloatImage img = testsup::random_float_image(6, 4, rng);
    save_float_image(img, tmp.str("x.simg"));
    CHECK(load_float_image(tmp.str("x.simg")) == img);

    std::string bytes = testsup::read_file_bytes(tmp.str("x.simg"));
    testsup::write_file_bytes(tmp.str("x.simg"), bytes.substr(0, bytes.size() - 3));
    CHECK(thrown_code([&] { load_float_image(tmp.str("x.simg")); }) == ErrorCode::CorruptFile);
}
