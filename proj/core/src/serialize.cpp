#include "sigver/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "sigver/error.hpp"

namespace sigver {

namespace {

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void magic(const char m[4]) { buf_.append(m, 4); }

    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string bytes, std::string path)
        : buf_(std::move(bytes)), path_(std::move(path)) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(gather(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(gather(4)); }
    std::uint64_t u64() { return gather(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    void expect_magic(const char m[4]) {
        const char* p = take(4);
        if (std::memcmp(p, m, 4) != 0)
            raise(ErrorCode::CorruptFile, path_ + ": bad magic");
    }

    void expect_end() const {
        if (pos_ != buf_.size())
            raise(ErrorCode::CorruptFile, path_ + ": trailing bytes");
    }

    const std::string& path() const { return path_; }

private:
    const char* take(std::size_t n) {
        if (pos_ + n > buf_.size())
            raise(ErrorCode::CorruptFile, path_ + ": truncated file");
        const char* p = buf_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint64_t gather(std::size_t n) {
        const char* p = take(n);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
        return v;
    }

    std::string buf_;
    std::string path_;
    std::size_t pos_ = 0;
};

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, path + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(ErrorCode::IoError, path + ": write failed");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::FileNotFound, path + ": cannot open");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr char kFeatnetMagic[4] = {'S', 'F', 'N', 'T'};
constexpr char kGbtMagic[4] = {'S', 'G', 'B', 'T'};
constexpr char kEnsembleMagic[4] = {'S', 'E', 'N', 'S'};
constexpr std::uint16_t kVersion = 1;

void write_featnet_bytes(const FeatNet& net, ByteWriter& w) {
    const NetConfig& cfg = net.config();
    w.magic(kFeatnetMagic);
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(cfg.input_height));
    w.u32(static_cast<std::uint32_t>(cfg.input_width));
    w.u32(static_cast<std::uint32_t>(cfg.conv_blocks.size()));
    for (const ConvSpec& b : cfg.conv_blocks) {
        w.u32(static_cast<std::uint32_t>(b.out_channels));
        w.u32(static_cast<std::uint32_t>(b.kernel));
        w.u32(static_cast<std::uint32_t>(b.stride));
    }
    w.u32(static_cast<std::uint32_t>(cfg.feature_dim));
    w.u32(static_cast<std::uint32_t>(cfg.num_writers));
    w.u8(cfg.forgery_head ? 1 : 0);
    w.u64(cfg.seed);
    for (double p : net.parameters()) w.f32(static_cast<float>(p));
}

FeatNet read_featnet_bytes(ByteReader& r) {
    r.expect_magic(kFeatnetMagic);
    if (r.u16() != kVersion) raise(ErrorCode::CorruptFile, r.path() + ": unsupported version");

    NetConfig cfg;
    cfg.input_height = static_cast<int>(r.u32());
    cfg.input_width = static_cast<int>(r.u32());
    std::uint32_t nb = r.u32();
    if (nb > 64) raise(ErrorCode::CorruptFile, r.path() + ": implausible block count");
    for (std::uint32_t i = 0; i < nb; ++i) {
        ConvSpec b;
        b.out_channels = static_cast<int>(r.u32());
        b.kernel = static_cast<int>(r.u32());
        b.stride = static_cast<int>(r.u32());
        cfg.conv_blocks.push_back(b);
    }
    cfg.feature_dim = static_cast<int>(r.u32());
    cfg.num_writers = static_cast<int>(r.u32());
    cfg.forgery_head = r.u8() != 0;
    cfg.seed = r.u64();

    try {
        cfg.validate();
    } catch (const Error&) {
        raise(ErrorCode::CorruptFile, r.path() + ": invalid stored config");
    }

    FeatNet net(cfg);
    for (double& p : net.parameters()) p = static_cast<double>(r.f32());
    return net;
}

void write_tree_bytes(const Tree& tree, int node, ByteWriter& w) {
    const TreeNode& n = tree.nodes[node];
    if (n.is_leaf) {
        w.u8(0);
        w.f64(n.weight);
    } else {
        w.u8(1);
        w.u32(static_cast<std::uint32_t>(n.feature));
        w.f64(n.threshold);
        write_tree_bytes(tree, n.left, w);
        write_tree_bytes(tree, n.right, w);
    }
}

int read_tree_bytes(Tree& tree, ByteReader& r, int depth) {
    if (depth > 64) raise(ErrorCode::CorruptFile, r.path() + ": implausible tree depth");
    int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::uint8_t tag = r.u8();
    if (tag == 0) {
        tree.nodes[index].is_leaf = true;
        tree.nodes[index].weight = r.f64();
    } else if (tag == 1) {
        int feature = static_cast<int>(r.u32());
        double threshold = r.f64();
        int left = read_tree_bytes(tree, r, depth + 1);
        int right = read_tree_bytes(tree, r, depth + 1);
        tree.nodes[index].is_leaf = false;
        tree.nodes[index].feature = feature;
        tree.nodes[index].threshold = threshold;
        tree.nodes[index].left = left;
        tree.nodes[index].right = right;
    } else {
        raise(ErrorCode::CorruptFile, r.path() + ": bad node tag");
    }
    return index;
}

void write_gbt_bytes(const GbtModel& model, ByteWriter& w) {
    w.magic(kGbtMagic);
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(model.params.n_rounds));
    w.u32(static_cast<std::uint32_t>(model.params.max_depth));
    w.f64(model.params.learning_rate);
    w.f64(model.params.l2_lambda);
    w.f64(model.params.min_gain);
    w.f64(model.params.min_child_hessian);
    w.u32(static_cast<std::uint32_t>(model.n_features));
    w.f64(model.base_margin);
    w.u32(static_cast<std::uint32_t>(model.trees.size()));
    for (const Tree& t : model.trees) write_tree_bytes(t, 0, w);
}

GbtModel read_gbt_bytes(ByteReader& r) {
    r.expect_magic(kGbtMagic);
    if (r.u16() != kVersion) raise(ErrorCode::CorruptFile, r.path() + ": unsupported version");

    GbtModel model;
    model.params.n_rounds = static_cast<int>(r.u32());
    model.params.max_depth = static_cast<int>(r.u32());
    model.params.learning_rate = r.f64();
    model.params.l2_lambda = r.f64();
    model.params.min_gain = r.f64();
    model.params.min_child_hessian = r.f64();
    model.n_features = r.u32();
    model.base_margin = r.f64();
    std::uint32_t count = r.u32();
    if (count > 1u << 20) raise(ErrorCode::CorruptFile, r.path() + ": implausible tree count");
    model.trees.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) read_tree_bytes(model.trees[i], r, 0);
    return model;
}

} // namespace

void save_featnet(const FeatNet& net, const std::string& path) {
    ByteWriter w;
    write_featnet_bytes(net, w);
    write_file(path, w.bytes());
}

FeatNet load_featnet(const std::string& path) {
    ByteReader r(read_file(path), path);
    FeatNet net = read_featnet_bytes(r);
    r.expect_end();
    return net;
}

void save_gbt(const GbtModel& model, const std::string& path) {
    ByteWriter w;
    write_gbt_bytes(model, w);
    write_file(path, w.bytes());
}

GbtModel load_gbt(const std::string& path) {
    ByteReader r(read_file(path), path);
    GbtModel model = read_gbt_bytes(r);
    r.expect_end();
    return model;
}

void save_ensemble(const EnsembleModel& model, const std::string& path) {
    ByteWriter w;
    w.magic(kEnsembleMagic);
    w.u16(kVersion);
    write_gbt_bytes(model.gbt_signet, w);
    write_gbt_bytes(model.gbt_signetf, w);
    w.f64(model.combiner.w0);
    w.f64(model.combiner.w1);
    w.f64(model.combiner.bias);
    write_file(path, w.bytes());
}

EnsembleModel load_ensemble(const std::string& path) {
    ByteReader r(read_file(path), path);
    r.expect_magic(kEnsembleMagic);
    if (r.u16() != kVersion) raise(ErrorCode::CorruptFile, path + ": unsupported version");
    EnsembleModel model;
    model.gbt_signet = read_gbt_bytes(r);
    model.gbt_signetf = read_gbt_bytes(r);
    model.combiner.w0 = r.f64();
    model.combiner.w1 = r.f64();
    model.combiner.bias = r.f64();
    r.expect_end();
    return model;
}

} // namespace sigver
