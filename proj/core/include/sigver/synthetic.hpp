#pragma once

#include <cstdint>
#include <string>

#include "sigver/image.hpp"

namespace sigver {

/// Synthetic signature corpus: each writer is a fixed set of quadratic
/// Bezier strokes. Genuine samples re-draw them with small control-point
/// jitter; forgeries imitate the same strokes with larger jitter, a
/// perpendicular tremor and an off-target pen width — the writer-independent
/// cues a verifier is expected to pick up.
struct SynthConfig {
    int writers = 40;
    int genuine_per_writer = 12;
    int forged_per_writer = 12;
    int image_height = 64;
    int image_width = 96;
    std::uint64_t seed = 0;
};

/// Writes a CEDAR-layout corpus under root:
/// full_org/original_<writer>_<i>.pgm and full_forg/forgeries_<writer>_<i>.pgm.
void generate_corpus(const std::string& root, const SynthConfig& cfg);

/// One rendered sample (writer >= 1, instance >= 1); forged selects the
/// imitation rendering. Deterministic in (cfg.seed, writer, instance, forged).
GrayImage render_signature(const SynthConfig& cfg, int writer, int instance, bool forged);

} // namespace sigver
