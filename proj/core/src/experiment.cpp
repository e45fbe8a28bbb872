#include "sigver/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "sigver/error.hpp"
#include "sigver/serialize.hpp"

namespace fs = std::filesystem;

namespace sigver {

void RunConfig::apply_master_seed(std::uint64_t seed) {
    split.seed = seed;
    signet.seed = seed + 1;
    signetf.seed = seed + 2;
    oof_seed = seed + 3;
}

DatasetLayout layout_from_string(const std::string& name) {
    if (name == "cedar") return DatasetLayout::cedar;
    if (name == "bhsig") return DatasetLayout::bhsig;
    if (name == "flat_manifest") return DatasetLayout::flat_manifest;
    raise(ErrorCode::InvalidConfig, "unknown dataset layout '" + name + "'");
}

namespace {

std::vector<ConvSpec> conv_blocks_from_toml(const toml::Table& t, const std::string& section,
                                            std::vector<ConvSpec> fallback) {
    if (!t.has(section, "conv_blocks")) return fallback;
    std::vector<ConvSpec> blocks;
    for (const toml::Value& row : t.get(section, "conv_blocks").as_array()) {
        const auto& triple = row.as_array();
        if (triple.size() != 3)
            raise(ErrorCode::InvalidConfig,
                  "[" + section + "] conv_blocks entries must be [channels, kernel, stride]");
        blocks.push_back({static_cast<int>(triple[0].as_int()),
                          static_cast<int>(triple[1].as_int()),
                          static_cast<int>(triple[2].as_int())});
    }
    return blocks;
}

} // namespace

PreprocessConfig preprocess_config_from_toml(const toml::Table& t, PreprocessConfig cfg) {
    cfg.canvas_height =
        static_cast<int>(t.get_int("preprocess", "canvas_height", cfg.canvas_height));
    cfg.canvas_width =
        static_cast<int>(t.get_int("preprocess", "canvas_width", cfg.canvas_width));
    cfg.out_height = static_cast<int>(t.get_int("preprocess", "out_height", cfg.out_height));
    cfg.out_width = static_cast<int>(t.get_int("preprocess", "out_width", cfg.out_width));
    return cfg;
}

ExtractorConfig extractor_config_from_toml(const toml::Table& t, const std::string& section,
                                           ExtractorConfig cfg) {
    cfg.conv_blocks = conv_blocks_from_toml(t, section, cfg.conv_blocks);
    cfg.feature_dim = static_cast<int>(t.get_int(section, "feature_dim", cfg.feature_dim));
    cfg.seed =
        static_cast<std::uint64_t>(t.get_int(section, "seed", static_cast<std::int64_t>(cfg.seed)));
    return cfg;
}

TrainSpec train_spec_from_toml(const toml::Table& t, TrainSpec spec) {
    spec.epochs = static_cast<int>(t.get_int("train", "epochs", spec.epochs));
    spec.batch_size = static_cast<int>(t.get_int("train", "batch_size", spec.batch_size));
    spec.learning_rate = t.get_double("train", "learning_rate", spec.learning_rate);
    spec.momentum = t.get_double("train", "momentum", spec.momentum);
    spec.forgery_loss_weight =
        t.get_double("train", "forgery_loss_weight", spec.forgery_loss_weight);
    return spec;
}

GbtParams gbt_params_from_toml(const toml::Table& t, GbtParams p) {
    p.n_rounds = static_cast<int>(t.get_int("gbt", "n_rounds", p.n_rounds));
    p.max_depth = static_cast<int>(t.get_int("gbt", "max_depth", p.max_depth));
    p.learning_rate = t.get_double("gbt", "learning_rate", p.learning_rate);
    p.l2_lambda = t.get_double("gbt", "l2_lambda", p.l2_lambda);
    p.min_gain = t.get_double("gbt", "min_gain", p.min_gain);
    p.min_child_hessian = t.get_double("gbt", "min_child_hessian", p.min_child_hessian);
    return p;
}

LogregParams logreg_params_from_toml(const toml::Table& t, LogregParams p) {
    p.reg = t.get_double("stack", "reg", p.reg);
    p.tol = t.get_double("stack", "tol", p.tol);
    p.max_iter = static_cast<int>(t.get_int("stack", "max_iter", p.max_iter));
    return p;
}

RunConfig run_config_from_toml(const toml::Table& t) {
    RunConfig cfg;
    cfg.dataset_root = t.get_string("dataset", "root", "");
    if (cfg.dataset_root.empty())
        raise(ErrorCode::InvalidConfig, "config needs [dataset] root");
    cfg.layout = layout_from_string(t.get_string("dataset", "layout", "cedar"));

    cfg.preprocess = preprocess_config_from_toml(t, cfg.preprocess);
    cfg.signet = extractor_config_from_toml(t, "signet", cfg.signet);
    cfg.signetf.seed = 2;
    cfg.signetf = extractor_config_from_toml(t, "signet_f", cfg.signetf);
    cfg.train_spec = train_spec_from_toml(t, cfg.train_spec);
    cfg.gbt = gbt_params_from_toml(t, cfg.gbt);
    cfg.logreg = logreg_params_from_toml(t, cfg.logreg);
    cfg.oof_folds = static_cast<int>(t.get_int("stack", "oof_folds", cfg.oof_folds));
    cfg.oof_seed = static_cast<std::uint64_t>(
        t.get_int("stack", "oof_seed", static_cast<std::int64_t>(cfg.oof_seed)));

    cfg.split.test_fraction = t.get_double("split", "test_fraction", cfg.split.test_fraction);
    cfg.split.seed = static_cast<std::uint64_t>(
        t.get_int("split", "seed", static_cast<std::int64_t>(cfg.split.seed)));
    cfg.split.stratified = t.get_bool("split", "stratified", cfg.split.stratified);
    cfg.split.writer_disjoint =
        t.get_bool("split", "writer_disjoint", cfg.split.writer_disjoint);

    cfg.output_dir = t.get_string("output", "dir", cfg.output_dir);
    cfg.write_feature_files = t.get_bool("output", "write_features", cfg.write_feature_files);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return run_config_from_toml(toml::parse_file(path));
}

int WriterIndex::index_of(int writer_id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), writer_id);
    if (it == ids.end() || *it != writer_id) return -1;
    return static_cast<int>(it - ids.begin());
}

WriterIndex index_writers(const Manifest& manifest) {
    std::set<int> distinct;
    for (const auto& s : manifest)
        if (s.label == Label::genuine) distinct.insert(s.writer_id);
    WriterIndex idx;
    idx.ids.assign(distinct.begin(), distinct.end());
    return idx;
}

std::vector<FloatImage> preprocess_manifest(const Manifest& manifest,
                                            const PreprocessConfig& cfg) {
    std::vector<FloatImage> out;
    out.reserve(manifest.size());
    for (const auto& s : manifest) out.push_back(preprocess_pipeline(s.image_path, cfg));
    return out;
}

std::vector<TrainSample> build_train_samples(const Manifest& manifest,
                                             const std::vector<FloatImage>& images,
                                             const WriterIndex& writers) {
    if (manifest.size() != images.size())
        raise(ErrorCode::LengthMismatch, "manifest and image list differ in length");
    std::vector<TrainSample> samples;
    samples.reserve(manifest.size());
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        int mapped = writers.index_of(manifest[i].writer_id);
        samples.push_back({images[i], mapped < 0 ? 0 : mapped,
                           manifest[i].label == Label::forged});
    }
    return samples;
}

FeatNet train_extractor(const Manifest& manifest, const std::vector<FloatImage>& images,
                        const ExtractorConfig& net_cfg, const TrainSpec& spec,
                        Objective objective, int input_height, int input_width) {
    WriterIndex writers = index_writers(manifest);
    if (writers.ids.size() < 2)
        raise(ErrorCode::InvalidConfig, "extractor training needs genuine samples from at "
                                        "least two writers");

    std::vector<TrainSample> samples = build_train_samples(manifest, images, writers);
    if (objective == Objective::signet)
        std::erase_if(samples, [](const TrainSample& s) { return s.forged; });

    NetConfig cfg;
    cfg.input_height = input_height;
    cfg.input_width = input_width;
    cfg.conv_blocks = net_cfg.conv_blocks;
    cfg.feature_dim = net_cfg.feature_dim;
    cfg.num_writers = static_cast<int>(writers.ids.size());
    cfg.forgery_head = objective == Objective::signet_f;
    cfg.seed = net_cfg.seed;

    return train(FeatNet(cfg), samples, spec, objective);
}

namespace {

template <typename F>
auto staged(const char* stage, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw Error(e.code(), std::string(e.what()), stage);
    }
}

FeatureMatrix extract_images(const FeatNet& net, const std::vector<FloatImage>& images) {
    return extract_batch(net, images);
}

} // namespace

EvalReport run_experiment(const RunConfig& cfg) {
    cfg.preprocess.validate();

    Manifest manifest = staged("scan", [&] { return scan_dataset(cfg.dataset_root, cfg.layout); });

    auto [train_set, test_set] =
        staged("split", [&] { return split_random(manifest, cfg.split); });

    std::vector<FloatImage> train_images =
        staged("preprocess", [&] { return preprocess_manifest(train_set, cfg.preprocess); });
    std::vector<FloatImage> test_images =
        staged("preprocess", [&] { return preprocess_manifest(test_set, cfg.preprocess); });

    FeatNet signet = staged("train-extractor", [&] {
        return train_extractor(train_set, train_images, cfg.signet, cfg.train_spec,
                               Objective::signet, cfg.preprocess.out_height,
                               cfg.preprocess.out_width);
    });
    FeatNet signetf = staged("train-extractor", [&] {
        return train_extractor(train_set, train_images, cfg.signetf, cfg.train_spec,
                               Objective::signet_f, cfg.preprocess.out_height,
                               cfg.preprocess.out_width);
    });

    FeatureMatrix train_a = staged("extract", [&] { return extract_images(signet, train_images); });
    FeatureMatrix train_b = staged("extract", [&] { return extract_images(signetf, train_images); });
    FeatureMatrix test_a = staged("extract", [&] { return extract_images(signet, test_images); });
    FeatureMatrix test_b = staged("extract", [&] { return extract_images(signetf, test_images); });

    std::vector<std::uint8_t> train_labels = labels_of(train_set);
    std::vector<std::uint8_t> test_labels = labels_of(test_set);

    EnsembleModel model = staged("train", [&] {
        EnsembleOptions options;
        options.gbt = cfg.gbt;
        options.logreg = cfg.logreg;
        options.oof_folds = cfg.oof_folds;
        options.oof_seed = cfg.oof_seed;
        return train_ensemble(widen(train_a), widen(train_b), train_labels, options);
    });

    EvalReport report = staged("evaluate", [&] {
        return evaluate_ensemble(model, widen(test_a), widen(test_b), test_labels);
    });

    staged("write", [&] {
        fs::path out(cfg.output_dir);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) raise(ErrorCode::IoError, cfg.output_dir + ": cannot create output directory");

        write_manifest(train_set, (out / "manifest_train.csv").string());
        write_manifest(test_set, (out / "manifest_test.csv").string());
        save_featnet(signet, (out / "signet.sfnt").string());
        save_featnet(signetf, (out / "signet_f.sfnt").string());
        save_ensemble(model, (out / "model.sens").string());
        if (cfg.write_feature_files) {
            write_features(train_a, train_labels, (out / "train_signet.sftv").string());
            write_features(train_b, train_labels, (out / "train_signet_f.sftv").string());
            write_features(test_a, test_labels, (out / "test_signet.sftv").string());
            write_features(test_b, test_labels, (out / "test_signet_f.sftv").string());
        }
        std::ofstream report_file(out / "report.json", std::ios::binary | std::ios::trunc);
        if (!report_file) raise(ErrorCode::IoError, "cannot write report.json");
        report_file << report_to_json(report);
        return 0;
    });

    return report;
}

} // namespace sigver
