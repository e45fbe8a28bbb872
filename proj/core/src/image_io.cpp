#include "sigver/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>

#include "sigver/error.hpp"

namespace sigver {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    double y = 0.299 * r + 0.587 * g + 0.114 * b;
    long v = std::lround(y);
    if (v < 0) v = 0;
    if (v > 255) v = 255;
    return static_cast<std::uint8_t>(v);
}

GrayImage load_png(const std::string& path, std::FILE* fp) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) raise(ErrorCode::DecodeError, path + ": libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        raise(ErrorCode::DecodeError, path + ": libpng init failed");
    }

    std::vector<std::uint8_t> interleaved;
    std::vector<png_bytep> row_ptrs;
    png_uint_32 width = 0, height = 0;
    int channels = 0;

    // libpng reports errors through longjmp; everything allocated past this
    // point must be a plain local released below.
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::DecodeError, path + ": malformed PNG");
    }

    png_init_io(png, fp);
    png_read_info(png, info);

    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        raise(ErrorCode::DecodeError, path + ": unexpected channel layout after expansion");
    }

    interleaved.resize(static_cast<std::size_t>(height) * width * channels);
    row_ptrs.resize(height);
    for (png_uint_32 r = 0; r < height; ++r)
        row_ptrs[r] = interleaved.data() + static_cast<std::size_t>(r) * width * channels;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    GrayImage img(static_cast<int>(height), static_cast<int>(width));
    if (channels == 1) {
        std::copy(interleaved.begin(), interleaved.end(), img.pixels.begin());
    } else {
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            img.pixels[i] = luminance(interleaved[3 * i], interleaved[3 * i + 1],
                                      interleaved[3 * i + 2]);
    }
    return img;
}

GrayImage load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::FileNotFound, path + ": cannot open");

    auto next_token = [&]() -> std::string {
        // Whitespace-separated tokens, '#' comments run to end of line.
        std::string tok;
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {}
                continue;
            }
            if (std::isspace(c)) {
                if (!tok.empty()) return tok;
                continue;
            }
            tok.push_back(static_cast<char>(c));
        }
        if (tok.empty()) raise(ErrorCode::DecodeError, path + ": truncated PGM header");
        return tok;
    };

    std::string magic = next_token();
    if (magic != "P5") raise(ErrorCode::DecodeError, path + ": not a binary PGM");
    long w = 0, h = 0, maxval = 0;
    try {
        w = std::stol(next_token());
        h = std::stol(next_token());
        maxval = std::stol(next_token());
    } catch (const std::exception&) {
        raise(ErrorCode::DecodeError, path + ": bad PGM header");
    }
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        raise(ErrorCode::DecodeError, path + ": unsupported PGM dimensions or maxval");

    GrayImage img(static_cast<int>(h), static_cast<int>(w));
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        raise(ErrorCode::DecodeError, path + ": truncated PGM raster");
    if (maxval != 255) {
        for (auto& p : img.pixels)
            p = static_cast<std::uint8_t>(std::lround(p * 255.0 / static_cast<double>(maxval)));
    }
    return img;
}

} // namespace

GrayImage load_grayscale(const std::string& path) {
    if (!std::filesystem::exists(path))
        raise(ErrorCode::FileNotFound, path + ": no such file");

    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) raise(ErrorCode::FileNotFound, path + ": cannot open");

    unsigned char sig[8] = {0};
    std::size_t got = std::fread(sig, 1, sizeof sig, fp.get());
    if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) {
        std::rewind(fp.get());
        return load_png(path, fp.get());
    }
    if (got >= 2 && sig[0] == 'P' && sig[1] == '5') {
        fp.reset();
        return load_pgm(path);
    }
    raise(ErrorCode::UnsupportedFormat, path + ": only PNG and binary PGM (P5) are accepted");
}

void save_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, path + ": cannot open for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) raise(ErrorCode::IoError, path + ": write failed");
}

namespace {

void save_png_impl(int height, int width, int color_type, int channels,
                   const std::uint8_t* data, const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) raise(ErrorCode::IoError, path + ": cannot open for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) raise(ErrorCode::IoError, path + ": libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        raise(ErrorCode::IoError, path + ": libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        raise(ErrorCode::IoError, path + ": PNG write failed");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int r = 0; r < height; ++r)
        rows[r] = const_cast<png_bytep>(data + static_cast<std::size_t>(r) * width * channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace

void save_png_gray(const GrayImage& img, const std::string& path) {
    save_png_impl(img.height, img.width, PNG_COLOR_TYPE_GRAY, 1, img.pixels.data(), path);
}

void save_png_rgb(int height, int width, const std::vector<std::uint8_t>& rgb,
                  const std::string& path) {
    if (rgb.size() != static_cast<std::size_t>(height) * width * 3)
        raise(ErrorCode::LengthMismatch, "rgb buffer size does not match dimensions");
    save_png_impl(height, width, PNG_COLOR_TYPE_RGB, 3, rgb.data(), path);
}

namespace {
constexpr char kSimgMagic[4] = {'S', 'I', 'M', 'G'};

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::string& buf, std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off])) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 3])) << 24);
}
} // namespace

void save_float_image(const FloatImage& img, const std::string& path) {
    std::string buf;
    buf.append(kSimgMagic, 4);
    put_u32(buf, static_cast<std::uint32_t>(img.height));
    put_u32(buf, static_cast<std::uint32_t>(img.width));
    for (float v : img.values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(buf, bits);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, path + ": cannot open for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) raise(ErrorCode::IoError, path + ": write failed");
}

FloatImage load_float_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::FileNotFound, path + ": cannot open");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), kSimgMagic, 4) != 0)
        raise(ErrorCode::CorruptFile, path + ": not a SIMG file");
    std::uint32_t h = get_u32(buf, 4);
    std::uint32_t w = get_u32(buf, 8);
    std::size_t expect = 12 + static_cast<std::size_t>(h) * w * 4;
    if (buf.size() != expect)
        raise(ErrorCode::CorruptFile, path + ": wrong SIMG payload size");
    FloatImage img(static_cast<int>(h), static_cast<int>(w));
    for (std::size_t i = 0; i < img.values.size(); ++i) {
        std::uint32_t bits = get_u32(buf, 12 + i * 4);
        std::memcpy(&img.values[i], &bits, 4);
    }
    return img;
}

} // namespace sigver
