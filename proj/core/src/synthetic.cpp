#include "sigver/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "sigver/error.hpp"
#include "sigver/image_io.hpp"
#include "sigver/rng.hpp"

namespace fs = std::filesystem;

namespace sigver {

namespace {

struct Point {
    double x = 0.0, y = 0.0;
};

struct Stroke {
    Point p0, p1, p2; // quadratic Bezier control points
};

struct WriterGlyph {
    std::vector<Stroke> strokes;
    double base_width = 2.0;
};

Point bezier(const Stroke& s, double t) {
    double u = 1.0 - t;
    return {u * u * s.p0.x + 2 * u * t * s.p1.x + t * t * s.p2.x,
            u * u * s.p0.y + 2 * u * t * s.p1.y + t * t * s.p2.y};
}

Point bezier_tangent(const Stroke& s, double t) {
    return {2 * (1 - t) * (s.p1.x - s.p0.x) + 2 * t * (s.p2.x - s.p1.x),
            2 * (1 - t) * (s.p1.y - s.p0.y) + 2 * t * (s.p2.y - s.p1.y)};
}

WriterGlyph writer_glyph(const SynthConfig& cfg, int writer) {
    Rng rng(cfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(writer));
    WriterGlyph glyph;
    int strokes = 3 + static_cast<int>(rng.below(2)); // 3 or 4
    double mx = 0.18 * cfg.image_width, my = 0.20 * cfg.image_height;
    auto point = [&]() -> Point {
        return {rng.uniform(mx, cfg.image_width - mx), rng.uniform(my, cfg.image_height - my)};
    };
    Point prev = point();
    for (int s = 0; s < strokes; ++s) {
        Stroke st;
        st.p0 = prev;       // strokes chain into one connected scrawl
        st.p1 = point();
        st.p2 = point();
        prev = st.p2;
        glyph.strokes.push_back(st);
    }
    glyph.base_width = rng.uniform(1.5, 2.3);
    return glyph;
}

void stamp(GrayImage& img, double cx, double cy, double radius, int ink) {
    int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1.5)));
    int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + radius + 1.5)));
    int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1.5)));
    int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + radius + 1.5)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double d = std::hypot(x - cx, y - cy);
            double v;
            if (d <= radius) v = ink;
            else if (d <= radius + 1.0) v = ink + (255.0 - ink) * (d - radius); // soft edge
            else continue;
            auto& px = img.at(y, x);
            px = std::min<int>(px, static_cast<int>(std::lround(v)));
        }
    }
}

} // namespace

GrayImage render_signature(const SynthConfig& cfg, int writer, int instance, bool forged) {
    WriterGlyph glyph = writer_glyph(cfg, writer);

    std::uint64_t stream = cfg.seed * 0x2545F4914F6CDD1DULL +
                           static_cast<std::uint64_t>(writer) * 1000003ULL +
                           static_cast<std::uint64_t>(instance) * 2ULL + (forged ? 1 : 0);
    Rng rng(stream);

    double jitter = forged ? 2.6 : 0.9;
    double tremor_amp = forged ? rng.uniform(1.0, 1.8) : 0.0;
    double tremor_freq = forged ? rng.uniform(4.0, 7.0) : 0.0;
    double width = glyph.base_width;
    if (forged) width *= rng.next() % 2 == 0 ? 0.70 : 1.40; // forger misses pen pressure
    width += rng.normal() * 0.10;
    width = std::max(0.8, width);
    int ink = 25 + static_cast<int>(rng.below(30));

    GrayImage img(cfg.image_height, cfg.image_width, 255);
    for (const Stroke& base : glyph.strokes) {
        Stroke s = base;
        for (Point* p : {&s.p0, &s.p1, &s.p2}) {
            p->x += rng.normal() * jitter;
            p->y += rng.normal() * jitter;
        }
        double phase = rng.uniform(0.0, 6.283185307179586);
        const int steps = 160;
        for (int i = 0; i <= steps; ++i) {
            double t = static_cast<double>(i) / steps;
            Point p = bezier(s, t);
            if (tremor_amp > 0.0) {
                Point tan = bezier_tangent(s, t);
                double norm = std::hypot(tan.x, tan.y);
                if (norm > 1e-9) {
                    double off = tremor_amp * std::sin(tremor_freq * 6.283185307179586 * t + phase);
                    p.x += -tan.y / norm * off;
                    p.y += tan.x / norm * off;
                }
            }
            stamp(img, p.x, p.y, width, ink);
        }
    }
    return img;
}

void generate_corpus(const std::string& root, const SynthConfig& cfg) {
    if (cfg.writers < 1 || cfg.genuine_per_writer < 1 || cfg.forged_per_writer < 1 ||
        cfg.image_height < 16 || cfg.image_width < 16)
        raise(ErrorCode::InvalidConfig, "bad synthetic corpus configuration");

    fs::path base(root);
    fs::create_directories(base / "full_org");
    fs::create_directories(base / "full_forg");

    for (int w = 1; w <= cfg.writers; ++w) {
        for (int i = 1; i <= cfg.genuine_per_writer; ++i) {
            GrayImage img = render_signature(cfg, w, i, false);
            save_pgm(img, (base / "full_org" /
                           ("original_" + std::to_string(w) + "_" + std::to_string(i) + ".pgm"))
                              .string());
        }
        for (int i = 1; i <= cfg.forged_per_writer; ++i) {
            GrayImage img = render_signature(cfg, w, i, true);
            save_pgm(img, (base / "full_forg" /
                           ("forgeries_" + std::to_string(w) + "_" + std::to_string(i) + ".pgm"))
                              .string());
        }
    }
}

} // namespace sigver
