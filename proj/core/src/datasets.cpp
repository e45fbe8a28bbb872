#include "sigver/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "sigver/error.hpp"
#include "sigver/rng.hpp"

namespace fs = std::filesystem;

namespace sigver {

void SplitSpec::validate() const {
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
        raise(ErrorCode::InvalidConfig, "test_fraction must lie in (0,1)");
}

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".pgm";
}

// original_<writer>_<index> / forgeries_<writer>_<index>
int parse_cedar_writer(const std::string& stem, const std::string& prefix,
                       const std::string& path) {
    if (stem.rfind(prefix, 0) != 0)
        raise(ErrorCode::UnparsableFilename, path + ": expected prefix '" + prefix + "'");
    std::size_t start = prefix.size();
    std::size_t underscore = stem.find('_', start);
    if (underscore == std::string::npos || underscore == start)
        raise(ErrorCode::UnparsableFilename, path + ": missing writer id");
    int writer = 0;
    auto [ptr, ec] = std::from_chars(stem.data() + start, stem.data() + underscore, writer);
    if (ec != std::errc() || ptr != stem.data() + underscore)
        raise(ErrorCode::UnparsableFilename, path + ": writer id is not a number");
    return writer;
}

int parse_trailing_digits(const std::string& name, const std::string& path) {
    std::size_t end = name.size();
    while (end > 0 && !std::isdigit(static_cast<unsigned char>(name[end - 1]))) --end;
    std::size_t begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(name[begin - 1]))) --begin;
    if (begin == end)
        raise(ErrorCode::UnparsableFilename, path + ": no writer digits in directory name");
    int writer = 0;
    std::from_chars(name.data() + begin, name.data() + end, writer);
    return writer;
}

void scan_cedar_dir(const fs::path& dir, const std::string& prefix, Label label,
                    Manifest& out) {
    if (!fs::exists(dir)) return;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !has_image_extension(entry.path())) continue;
        std::string stem = entry.path().stem().string();
        int writer = parse_cedar_writer(stem, prefix, entry.path().string());
        out.push_back({entry.path().string(), writer, label, "cedar"});
    }
}

void scan_bhsig(const fs::path& root, Manifest& out) {
    for (const auto& writer_dir : fs::directory_iterator(root)) {
        if (!writer_dir.is_directory()) continue;
        int writer = parse_trailing_digits(writer_dir.path().filename().string(),
                                           writer_dir.path().string());
        for (const auto& entry : fs::directory_iterator(writer_dir.path())) {
            if (!entry.is_regular_file() || !has_image_extension(entry.path())) continue;
            std::string name = entry.path().filename().string();
            Label label;
            if (name.rfind("G-", 0) == 0) label = Label::genuine;
            else if (name.rfind("F-", 0) == 0) label = Label::forged;
            else raise(ErrorCode::UnparsableFilename,
                       entry.path().string() + ": expected G- or F- prefix");
            out.push_back({entry.path().string(), writer, label, "bhsig"});
        }
    }
}

} // namespace

Manifest scan_dataset(const std::string& root, DatasetLayout layout) {
    if (layout == DatasetLayout::flat_manifest) {
        fs::path p(root);
        if (fs::is_regular_file(p)) return read_manifest(root);
        if (fs::is_directory(p)) {
            fs::path csv = p / "manifest.csv";
            if (!fs::exists(csv))
                raise(ErrorCode::MissingDirectory, root + ": no manifest.csv inside");
            return read_manifest(csv.string());
        }
        raise(ErrorCode::MissingDirectory, root + ": no such file or directory");
    }

    if (!fs::is_directory(root))
        raise(ErrorCode::MissingDirectory, root + ": no such directory");

    Manifest out;
    if (layout == DatasetLayout::cedar) {
        scan_cedar_dir(fs::path(root) / "full_org", "original_", Label::genuine, out);
        scan_cedar_dir(fs::path(root) / "full_forg", "forgeries_", Label::forged, out);
    } else {
        scan_bhsig(root, out);
    }
    std::sort(out.begin(), out.end(), [](const SignatureSample& a, const SignatureSample& b) {
        return a.image_path < b.image_path;
    });
    return out;
}

namespace {

std::size_t test_count(double fraction, std::size_t n) {
    // ceil with a small slack: 0.33 * 5400 lands on 1782.0000000000002 in
    // binary and must still count as 1782.
    double raw = fraction * static_cast<double>(n);
    auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    if (k < 1) k = 1;
    if (k > n - 1) k = n - 1;
    return k;
}

std::pair<Manifest, Manifest> shuffle_split(const Manifest& manifest,
                                            std::vector<std::size_t> indices, double fraction,
                                            Rng& rng) {
    rng.shuffle(indices);
    std::size_t k = test_count(fraction, indices.size());
    Manifest test, train;
    test.reserve(k);
    train.reserve(indices.size() - k);
    for (std::size_t i = 0; i < indices.size(); ++i)
        (i < k ? test : train).push_back(manifest[indices[i]]);
    return {std::move(train), std::move(test)};
}

} // namespace

std::pair<Manifest, Manifest> split_random(const Manifest& manifest, const SplitSpec& spec) {
    spec.validate();
    if (manifest.size() < 2)
        raise(ErrorCode::TooFewSamples, "need at least two samples to split");

    Rng rng(spec.seed);

    if (spec.writer_disjoint) {
        // Whole writers go to the test side until it reaches the target size.
        std::vector<int> writers;
        for (const auto& s : manifest) writers.push_back(s.writer_id);
        std::sort(writers.begin(), writers.end());
        writers.erase(std::unique(writers.begin(), writers.end()), writers.end());
        if (writers.size() < 2)
            raise(ErrorCode::TooFewSamples, "writer-disjoint split needs at least two writers");
        rng.shuffle(writers);

        std::size_t target = test_count(spec.test_fraction, manifest.size());
        std::set<int> test_writers;
        std::size_t assigned = 0;
        for (int w : writers) {
            if (assigned >= target || test_writers.size() + 1 == writers.size()) break;
            test_writers.insert(w);
            for (const auto& s : manifest) assigned += s.writer_id == w ? 1 : 0;
        }
        Manifest train, test;
        for (const auto& s : manifest)
            (test_writers.count(s.writer_id) ? test : train).push_back(s);
        return {std::move(train), std::move(test)};
    }

    if (spec.stratified) {
        // Per-class seeded shuffles, genuine first; each class contributes
        // ceil(fraction * class size).
        std::vector<std::size_t> genuine, forged;
        for (std::size_t i = 0; i < manifest.size(); ++i)
            (manifest[i].label == Label::genuine ? genuine : forged).push_back(i);
        Manifest train, test;
        for (auto* group : {&genuine, &forged}) {
            if (group->empty()) continue;
            if (group->size() < 2)
                raise(ErrorCode::TooFewSamples, "stratified split needs two samples per class");
            auto [tr, te] = shuffle_split(manifest, *group, spec.test_fraction, rng);
            train.insert(train.end(), tr.begin(), tr.end());
            test.insert(test.end(), te.begin(), te.end());
        }
        return {std::move(train), std::move(test)};
    }

    std::vector<std::size_t> indices(manifest.size());
    std::iota(indices.begin(), indices.end(), 0);
    return shuffle_split(manifest, std::move(indices), spec.test_fraction, rng);
}

namespace {

bool needs_quoting(const std::string& field) {
    return field.find_first_of(",\"\n\r") != std::string::npos;
}

std::string csv_escape(const std::string& field) {
    if (!needs_quoting(field)) return field;
    std::string out = "\"";
    for (char c : field) {
        out.push_back(c);
        if (c == '"') out.push_back('"');
    }
    out.push_back('"');
    return out;
}

// Splits one CSV record. Quoted fields may contain commas and doubled quotes.
std::vector<std::string> csv_fields(const std::string& line, std::size_t line_no,
                                    const std::string& path) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted)
        raise(ErrorCode::ParseError,
              path + ":" + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(std::move(cur));
    return fields;
}

constexpr const char* kManifestHeader = "path,writer_id,label,dataset_tag";

} // namespace

void write_manifest(const Manifest& manifest, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, path + ": cannot open for writing");
    out << kManifestHeader << "\n";
    for (const auto& s : manifest) {
        out << csv_escape(s.image_path) << ',' << s.writer_id << ','
            << (s.label == Label::genuine ? "genuine" : "forged") << ','
            << csv_escape(s.dataset_tag) << '\n';
    }
    if (!out) raise(ErrorCode::IoError, path + ": write failed");
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::FileNotFound, path + ": cannot open");

    Manifest out;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != kManifestHeader)
                raise(ErrorCode::ParseError, path + ":1: bad header");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> f = csv_fields(line, line_no, path);
        if (f.size() != 4)
            raise(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) + ": expected 4 fields");
        int writer = 0;
        auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), writer);
        if (ec != std::errc() || ptr != f[1].data() + f[1].size())
            raise(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) + ": bad writer_id");
        Label label;
        if (f[2] == "genuine") label = Label::genuine;
        else if (f[2] == "forged") label = Label::forged;
        else raise(ErrorCode::ParseError,
                   path + ":" + std::to_string(line_no) + ": label must be genuine or forged");
        if (f[0].empty())
            raise(ErrorCode::ParseError, path + ":" + std::to_string(line_no) + ": empty path");
        if (!seen.insert(f[0]).second)
            raise(ErrorCode::ParseError,
                  path + ":" + std::to_string(line_no) + ": duplicate image path");
        out.push_back({std::move(f[0]), writer, label, std::move(f[3])});
    }
    return out;
}

namespace {
constexpr char kSftvMagic[4] = {'S', 'F', 'T', 'V'};

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

void write_features(const FeatureMatrix& features, const std::vector<std::uint8_t>& labels,
                    const std::string& path) {
    if (features.rows != labels.size())
        raise(ErrorCode::LengthMismatch, "feature rows must match label count");

    std::string buf;
    buf.append(kSftvMagic, 4);
    put_u32(buf, static_cast<std::uint32_t>(features.rows));
    put_u32(buf, static_cast<std::uint32_t>(features.cols));
    for (float v : features.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(buf, bits);
    }
    for (std::uint8_t label : labels) {
        if (label > 1) raise(ErrorCode::InvalidArgument, "labels must be 0 or 1");
        buf.push_back(static_cast<char>(label));
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, path + ": cannot open for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) raise(ErrorCode::IoError, path + ": write failed");
}

std::pair<FeatureMatrix, std::vector<std::uint8_t>> read_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::FileNotFound, path + ": cannot open");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 12 || std::memcmp(buf.data(), kSftvMagic, 4) != 0)
        raise(ErrorCode::CorruptFile, path + ": not a SFTV file");
    std::size_t n = get_u32(buf, 4);
    std::size_t dim = get_u32(buf, 8);
    std::size_t expect = 12 + n * dim * 4 + n;
    if (buf.size() != expect)
        raise(ErrorCode::CorruptFile, path + ": wrong SFTV payload size");

    FeatureMatrix m(n, dim);
    for (std::size_t i = 0; i < n * dim; ++i) {
        std::uint32_t bits = get_u32(buf, 12 + i * 4);
        std::memcpy(&m.data[i], &bits, 4);
    }
    std::vector<std::uint8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto b = static_cast<std::uint8_t>(buf[12 + n * dim * 4 + i]);
        if (b > 1) raise(ErrorCode::CorruptFile, path + ": label byte outside {0,1}");
        labels[i] = b;
    }
    return {std::move(m), std::move(labels)};
}

std::vector<std::uint8_t> labels_of(const Manifest& manifest) {
    std::vector<std::uint8_t> out(manifest.size());
    for (std::size_t i = 0; i < manifest.size(); ++i)
        out[i] = static_cast<std::uint8_t>(manifest[i].label);
    return out;
}

} // namespace sigver
