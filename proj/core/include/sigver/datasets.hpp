#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sigver/matrix.hpp"

namespace sigver {

enum class Label : std::uint8_t { genuine = 0, forged = 1 };

struct SignatureSample {
    std::string image_path;
    int writer_id = 0;
    Label label = Label::genuine;
    std::string dataset_tag;

    bool operator==(const SignatureSample&) const = default;
};

using Manifest = std::vector<SignatureSample>;

enum class DatasetLayout { cedar, bhsig, flat_manifest };

struct SplitSpec {
    double test_fraction = 0.33;
    std::uint64_t seed = 0;
    bool stratified = false;
    bool writer_disjoint = false;

    void validate() const;
};

/// Walks a signature corpus.
///  cedar:  root/full_org/original_<writer>_<i>.{png,pgm} genuine,
///          root/full_forg/forgeries_<writer>_<i>.{png,pgm} forged
///  bhsig:  one directory per writer (trailing digits = writer id) holding
///          files with G- (genuine) / F- (forged) name prefixes
///  flat_manifest: root is a manifest CSV, or a directory containing
///          manifest.csv
/// Entries come back sorted by path; files with other extensions are skipped.
Manifest scan_dataset(const std::string& root, DatasetLayout layout);

/// Seeded-shuffle split: test gets ceil(test_fraction * n) samples (the
/// ceiling is evaluated with a 1e-9 slack so decimal fractions such as 0.33
/// are not tipped over an integer boundary by binary rounding), train the
/// complement; order inside each part follows the shuffle.
std::pair<Manifest, Manifest> split_random(const Manifest& manifest, const SplitSpec& spec);

/// CSV with header `path,writer_id,label,dataset_tag`, label literal
/// `genuine`/`forged`, LF line endings. Fields containing a comma, quote or
/// newline are quoted per RFC 4180.
void write_manifest(const Manifest& manifest, const std::string& path);
Manifest read_manifest(const std::string& path);

/// Feature file ("SFTV"): magic, n u32, dim u32, n*dim little-endian f32
/// row-major, then n label bytes (0 genuine, 1 forged).
void write_features(const FeatureMatrix& features, const std::vector<std::uint8_t>& labels,
                    const std::string& path);
std::pair<FeatureMatrix, std::vector<std::uint8_t>> read_features(const std::string& path);

std::vector<std::uint8_t> labels_of(const Manifest& manifest);

} // namespace sigver
