// sigverify: writer-independent offline signature verification pipeline.
//
// Subcommands: scan, preprocess, train-extractor, extract, train, evaluate,
// run, synth. Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric
// failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sigver/datasets.hpp"
#include "sigver/error.hpp"
#include "sigver/experiment.hpp"
#include "sigver/image_io.hpp"
#include "sigver/metrics.hpp"
#include "sigver/preprocess.hpp"
#include "sigver/serialize.hpp"
#include "sigver/synthetic.hpp"

namespace fs = std::filesystem;
using namespace sigver;

namespace {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidArgument:
            return 1;
        case ErrorCode::DegenerateLeaf:
        case ErrorCode::NoConvergence:
            return 3;
        default:
            return 2;
    }
}

toml::Table load_config_or_empty(const std::string& path) {
    if (path.empty()) return {};
    return toml::parse_file(path);
}

// Stable cache-file name for one source image (FNV-1a of the path).
std::string cache_entry_name(const std::string& image_path) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : image_path) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf) + ".simg";
}

std::vector<FloatImage> load_or_preprocess(const Manifest& manifest, const PreprocessConfig& cfg,
                                           const std::string& cache_dir) {
    std::vector<FloatImage> images;
    images.reserve(manifest.size());
    for (const auto& s : manifest) {
        if (!cache_dir.empty()) {
            fs::path cached = fs::path(cache_dir) / cache_entry_name(s.image_path);
            if (fs::exists(cached)) {
                images.push_back(load_float_image(cached.string()));
                continue;
            }
        }
        images.push_back(preprocess_pipeline(s.image_path, cfg));
    }
    return images;
}

Objective objective_from_string(const std::string& name) {
    if (name == "signet") return Objective::signet;
    if (name == "signet-f") return Objective::signet_f;
    raise(ErrorCode::InvalidArgument, "--objective must be signet or signet-f");
}

struct Args {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;

    std::string root;
    std::string layout = "cedar";
    std::string manifest;
    std::string cache_dir;
    std::string objective;
    std::string net_path;
    std::string model_path;
    std::string feat_signet;
    std::string feat_signetf;

    SynthConfig synth;
};

int cmd_scan(const Args& a) {
    if (a.out.empty()) raise(ErrorCode::InvalidArgument, "scan needs --out <manifest.csv>");
    Manifest manifest = scan_dataset(a.root, layout_from_string(a.layout));
    write_manifest(manifest, a.out);
    std::size_t genuine = 0;
    for (const auto& s : manifest) genuine += s.label == Label::genuine ? 1 : 0;
    std::printf("scanned %zu samples (%zu genuine, %zu forged) -> %s\n", manifest.size(),
                genuine, manifest.size() - genuine, a.out.c_str());
    return 0;
}

int cmd_preprocess(const Args& a) {
    if (a.out.empty()) raise(ErrorCode::InvalidArgument, "preprocess needs --out <dir>");
    toml::Table t = load_config_or_empty(a.config_path);
    PreprocessConfig cfg = preprocess_config_from_toml(t, {});
    cfg.validate();

    Manifest manifest = read_manifest(a.manifest);
    fs::create_directories(a.out);
    std::ofstream index(fs::path(a.out) / "cache.csv", std::ios::binary | std::ios::trunc);
    if (!index) raise(ErrorCode::IoError, a.out + ": cannot write cache index");
    index << "path,cache_file\n";
    for (const auto& s : manifest) {
        FloatImage img = preprocess_pipeline(s.image_path, cfg);
        std::string name = cache_entry_name(s.image_path);
        save_float_image(img, (fs::path(a.out) / name).string());
        index << s.image_path << ',' << name << '\n';
    }
    std::printf("preprocessed %zu images -> %s\n", manifest.size(), a.out.c_str());
    return 0;
}

int cmd_train_extractor(const Args& a) {
    if (a.out.empty()) raise(ErrorCode::InvalidArgument, "train-extractor needs --out <net.sfnt>");
    Objective objective = objective_from_string(a.objective);

    toml::Table t = load_config_or_empty(a.config_path);
    PreprocessConfig pp = preprocess_config_from_toml(t, {});
    pp.validate();
    std::string section = objective == Objective::signet ? "signet" : "signet_f";
    ExtractorConfig net_cfg = extractor_config_from_toml(t, section, {});
    if (a.seed) net_cfg.seed = *a.seed;
    TrainSpec spec = train_spec_from_toml(t, {});

    Manifest manifest = read_manifest(a.manifest);
    std::vector<FloatImage> images = load_or_preprocess(manifest, pp, a.cache_dir);
    FeatNet net = train_extractor(manifest, images, net_cfg, spec, objective, pp.out_height,
                                  pp.out_width);
    save_featnet(net, a.out);
    std::printf("trained %s extractor on %zu samples -> %s\n", a.objective.c_str(),
                manifest.size(), a.out.c_str());
    return 0;
}

int cmd_extract(const Args& a) {
    if (a.out.empty()) raise(ErrorCode::InvalidArgument, "extract needs --out <features.sftv>");
    FeatNet net = load_featnet(a.net_path);

    toml::Table t = load_config_or_empty(a.config_path);
    PreprocessConfig pp = preprocess_config_from_toml(t, {});
    pp.out_height = net.config().input_height;
    pp.out_width = net.config().input_width;
    if (t.has("preprocess", "out_height") &&
        (static_cast<int>(t.get_int("preprocess", "out_height", 0)) != pp.out_height ||
         static_cast<int>(t.get_int("preprocess", "out_width", 0)) != pp.out_width))
        raise(ErrorCode::ShapeMismatch,
              "configured output dimensions do not match the network input");
    pp.validate();

    Manifest manifest = read_manifest(a.manifest);
    std::vector<FloatImage> images = load_or_preprocess(manifest, pp, a.cache_dir);
    FeatureMatrix features = extract_batch(net, images);
    write_features(features, labels_of(manifest), a.out);
    std::printf("extracted %zux%zu features -> %s\n", features.rows, features.cols,
                a.out.c_str());
    return 0;
}

int cmd_train(const Args& a) {
    if (a.out.empty()) raise(ErrorCode::InvalidArgument, "train needs --out <model.sens>");
    auto [fa, la] = read_features(a.feat_signet);
    auto [fb, lb] = read_features(a.feat_signetf);
    if (la != lb)
        raise(ErrorCode::LengthMismatch, "branch feature files carry different labels");

    toml::Table t = load_config_or_empty(a.config_path);
    EnsembleOptions options;
    options.gbt = gbt_params_from_toml(t, {});
    options.logreg = logreg_params_from_toml(t, {});
    options.oof_folds = static_cast<int>(t.get_int("stack", "oof_folds", 0));
    options.oof_seed = static_cast<std::uint64_t>(t.get_int("stack", "oof_seed", 0));
    if (a.seed) options.oof_seed = *a.seed;

    EnsembleModel model = train_ensemble(widen(fa), widen(fb), la, options);
    save_ensemble(model, a.out);
    std::printf("trained ensemble on %zu samples -> %s\n", fa.rows, a.out.c_str());
    return 0;
}

int cmd_evaluate(const Args& a) {
    EnsembleModel model = load_ensemble(a.model_path);
    auto [fa, la] = read_features(a.feat_signet);
    auto [fb, lb] = read_features(a.feat_signetf);
    if (la != lb)
        raise(ErrorCode::LengthMismatch, "branch feature files carry different labels");

    EvalReport report = evaluate_ensemble(model, widen(fa), widen(fb), la);
    std::fputs(report_to_table(report).c_str(), stdout);
    if (!a.out.empty()) {
        std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
        if (!out) raise(ErrorCode::IoError, a.out + ": cannot open for writing");
        out << report_to_json(report);
        std::printf("report -> %s\n", a.out.c_str());
    }
    return 0;
}

int cmd_run(const Args& a) {
    if (a.config_path.empty()) raise(ErrorCode::InvalidArgument, "run needs --config <cfg.toml>");
    RunConfig cfg = load_run_config(a.config_path);
    if (a.seed) cfg.apply_master_seed(*a.seed);
    if (!a.out.empty()) cfg.output_dir = a.out;

    EvalReport report = run_experiment(cfg);
    std::fputs(report_to_table(report).c_str(), stdout);
    std::printf("artifacts -> %s\n", cfg.output_dir.c_str());
    return 0;
}

int cmd_synth(const Args& a) {
    if (a.out.empty()) raise(ErrorCode::InvalidArgument, "synth needs --out <dir>");
    SynthConfig cfg = a.synth;
    if (a.seed) cfg.seed = *a.seed;
    generate_corpus(a.out, cfg);
    std::printf("synthetic corpus: %d writers x (%d genuine + %d forged) -> %s\n", cfg.writers,
                cfg.genuine_per_writer, cfg.forged_per_writer, a.out.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"writer-independent offline signature verification"};
    app.require_subcommand(1);
    app.fallthrough();

    Args args;
    app.add_option("--config", args.config_path, "TOML config file")->envname("SIGVERIFY_CONFIG");
    app.add_option("--seed", args.seed, "master seed override");
    app.add_option("--out", args.out, "output file or directory");

    CLI::App* scan = app.add_subcommand("scan", "scan a dataset tree into a manifest CSV");
    scan->add_option("--root", args.root, "dataset root directory")->required();
    scan->add_option("--layout", args.layout, "cedar | bhsig | flat_manifest");

    CLI::App* preprocess =
        app.add_subcommand("preprocess", "preprocess manifest images into a raster cache");
    preprocess->add_option("--manifest", args.manifest, "manifest CSV")->required();

    CLI::App* train_x = app.add_subcommand("train-extractor", "train a feature extractor CNN");
    train_x->add_option("--manifest", args.manifest, "training manifest CSV")->required();
    train_x->add_option("--objective", args.objective, "signet | signet-f")->required();
    train_x->add_option("--cache", args.cache_dir, "preprocessed raster cache directory");

    CLI::App* extract = app.add_subcommand("extract", "extract features with a trained network");
    extract->add_option("--net", args.net_path, "SFNT network file")->required();
    extract->add_option("--manifest", args.manifest, "manifest CSV")->required();
    extract->add_option("--cache", args.cache_dir, "preprocessed raster cache directory");

    CLI::App* train = app.add_subcommand("train", "train the boosted ensemble + combiner");
    train->add_option("--signet-features", args.feat_signet, "SFTV features, signet branch")
        ->required();
    train->add_option("--signetf-features", args.feat_signetf, "SFTV features, signet-f branch")
        ->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a trained ensemble");
    evaluate->add_option("--model", args.model_path, "SENS ensemble file")->required();
    evaluate->add_option("--signet-features", args.feat_signet, "SFTV features, signet branch")
        ->required();
    evaluate->add_option("--signetf-features", args.feat_signetf, "SFTV features, signet-f branch")
        ->required();

    CLI::App* run = app.add_subcommand("run", "full pipeline from a RunConfig TOML");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic signature corpus");
    synth->add_option("--writers", args.synth.writers, "number of writers");
    synth->add_option("--genuine", args.synth.genuine_per_writer, "genuine samples per writer");
    synth->add_option("--forged", args.synth.forged_per_writer, "forged samples per writer");
    synth->add_option("--height", args.synth.image_height, "image height");
    synth->add_option("--width", args.synth.image_width, "image width");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scan->parsed()) return cmd_scan(args);
        if (preprocess->parsed()) return cmd_preprocess(args);
        if (train_x->parsed()) return cmd_train_extractor(args);
        if (extract->parsed()) return cmd_extract(args);
        if (train->parsed()) return cmd_train(args);
        if (evaluate->parsed()) return cmd_evaluate(args);
        if (run->parsed()) return cmd_run(args);
        if (synth->parsed()) return cmd_synth(args);
    } catch (const Error& e) {
        if (e.stage().empty())
            std::fprintf(stderr, "error [%s]: %s\n", error_code_name(e.code()), e.what());
        else
            std::fprintf(stderr, "error [%s] at stage %s: %s\n", error_code_name(e.code()),
                         e.stage().c_str(), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
