#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sigver/datasets.hpp"
#include "sigver/featnet.hpp"
#include "sigver/gbt.hpp"
#include "sigver/metrics.hpp"
#include "sigver/preprocess.hpp"
#include "sigver/stacker.hpp"
#include "sigver/toml.hpp"

namespace sigver {

struct ExtractorConfig {
    std::vector<ConvSpec> conv_blocks{{16, 3, 1}, {32, 3, 1}, {64, 3, 1}};
    int feature_dim = 128;
    std::uint64_t seed = 1;
};

struct RunConfig {
    std::string dataset_root;
    DatasetLayout layout = DatasetLayout::cedar;
    PreprocessConfig preprocess;
    ExtractorConfig signet;
    ExtractorConfig signetf;
    TrainSpec train_spec;
    GbtParams gbt;
    LogregParams logreg;
    int oof_folds = 0;
    std::uint64_t oof_seed = 0;
    SplitSpec split;
    std::string output_dir = "out";
    bool write_feature_files = true;

    /// Derives every component seed from one master seed.
    void apply_master_seed(std::uint64_t seed);
};

RunConfig run_config_from_toml(const toml::Table& table);
RunConfig load_run_config(const std::string& path);

/// Section-level readers used by both run_config_from_toml and the CLI;
/// absent keys keep the passed-in defaults.
PreprocessConfig preprocess_config_from_toml(const toml::Table& t, PreprocessConfig defaults);
ExtractorConfig extractor_config_from_toml(const toml::Table& t, const std::string& section,
                                           ExtractorConfig defaults);
TrainSpec train_spec_from_toml(const toml::Table& t, TrainSpec defaults);
GbtParams gbt_params_from_toml(const toml::Table& t, GbtParams defaults);
LogregParams logreg_params_from_toml(const toml::Table& t, LogregParams defaults);

/// Maps the dataset's genuine writer ids (train split) onto the contiguous
/// range the writer head expects. Ids appear in ascending order.
struct WriterIndex {
    std::vector<int> ids; // position = mapped id
    int index_of(int writer_id) const; // -1 when absent
};
WriterIndex index_writers(const Manifest& manifest);

/// Preprocesses every manifest entry in order.
std::vector<FloatImage> preprocess_manifest(const Manifest& manifest,
                                            const PreprocessConfig& cfg);

/// Assembles remapped training samples; writers missing from the index (a
/// forged sample of an unseen writer) map to 0 and never enter the writer
/// cross-entropy.
std::vector<TrainSample> build_train_samples(const Manifest& manifest,
                                             const std::vector<FloatImage>& images,
                                             const WriterIndex& writers);

/// Trains one extractor on manifest+images with the writer count derived
/// from the data. signet keeps genuine samples only.
FeatNet train_extractor(const Manifest& manifest, const std::vector<FloatImage>& images,
                        const ExtractorConfig& net_cfg, const TrainSpec& spec,
                        Objective objective, int input_height, int input_width);

/// Full protocol: scan, split, preprocess, train both extractors on the
/// train split, extract features, fit the ensemble on the train features and
/// evaluate on the test features. Persists manifests, SFNT/SENS models,
/// SFTV feature files and report.json under cfg.output_dir. Errors carry the
/// failing stage name. Byte-deterministic for fixed seeds.
EvalReport run_experiment(const RunConfig& cfg);

DatasetLayout layout_from_string(const std::string& name);

} // namespace sigver
