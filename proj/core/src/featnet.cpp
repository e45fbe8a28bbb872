#include "sigver/featnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sigver/error.hpp"
#include "sigver/gbt.hpp" // sigmoid
#include "sigver/rng.hpp"

namespace sigver {

namespace {

struct Tensor3 {
    int channels = 0, height = 0, width = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int c, int h, int w) : channels(c), height(h), width(w),
        v(static_cast<std::size_t>(c) * h * w, 0.0) {}

    double& at(int c, int y, int x) {
        return v[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return v[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

int conv_out_dim(int in, int kernel, int stride) {
    return (in - kernel) / stride + 1;
}

int pool_out_dim(int in) { return (in + 1) / 2; } // ceil-mode 2x2 stride 2

} // namespace

void NetConfig::validate() const {
    if (input_height < 1 || input_width < 1)
        raise(ErrorCode::InvalidConfig, "input dimensions must be positive");
    if (feature_dim < 1) raise(ErrorCode::InvalidConfig, "feature_dim must be >= 1");
    if (num_writers < 2) raise(ErrorCode::InvalidConfig, "at least two writers required");

    int h = input_height, w = input_width;
    for (const ConvSpec& b : conv_blocks) {
        if (b.out_channels < 1) raise(ErrorCode::InvalidConfig, "conv out_channels must be >= 1");
        if (b.kernel < 1 || b.kernel % 2 == 0)
            raise(ErrorCode::InvalidConfig, "conv kernels must be odd and positive");
        if (b.stride < 1) raise(ErrorCode::InvalidConfig, "conv stride must be >= 1");
        if (h < b.kernel || w < b.kernel)
            raise(ErrorCode::InvalidConfig, "input too small for the conv stack");
        h = pool_out_dim(conv_out_dim(h, b.kernel, b.stride));
        w = pool_out_dim(conv_out_dim(w, b.kernel, b.stride));
    }
}

void TrainSpec::validate() const {
    if (epochs < 1) raise(ErrorCode::InvalidConfig, "epochs must be >= 1");
    if (batch_size < 1) raise(ErrorCode::InvalidConfig, "batch_size must be >= 1");
    if (learning_rate < 0.0) raise(ErrorCode::InvalidConfig, "learning_rate must be nonnegative");
    if (momentum < 0.0 || momentum >= 1.0)
        raise(ErrorCode::InvalidConfig, "momentum must lie in [0,1)");
    if (forgery_loss_weight < 0.0)
        raise(ErrorCode::InvalidConfig, "forgery_loss_weight must be nonnegative");
}

FeatNet::FeatNet(NetConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();

    int in_ch = 1;
    auto add_tensor = [&](std::size_t size) {
        offsets_.push_back(offsets_.empty() ? 0 : offsets_.back() + sizes_.back());
        sizes_.push_back(size);
    };
    for (const ConvSpec& b : cfg_.conv_blocks) {
        add_tensor(static_cast<std::size_t>(b.out_channels) * in_ch * b.kernel * b.kernel);
        add_tensor(static_cast<std::size_t>(b.out_channels));
        in_ch = b.out_channels;
    }
    gap_channels_ = in_ch;
    add_tensor(static_cast<std::size_t>(cfg_.feature_dim) * gap_channels_);
    add_tensor(static_cast<std::size_t>(cfg_.feature_dim));
    add_tensor(static_cast<std::size_t>(cfg_.num_writers) * cfg_.feature_dim);
    add_tensor(static_cast<std::size_t>(cfg_.num_writers));
    if (cfg_.forgery_head) {
        add_tensor(static_cast<std::size_t>(cfg_.feature_dim));
        add_tensor(1);
    }
    params_.assign(offsets_.back() + sizes_.back(), 0.0);

    // Weights: fan-in-scaled uniform; biases stay zero.
    Rng rng(cfg_.seed);
    int block = 0;
    in_ch = 1;
    for (const ConvSpec& b : cfg_.conv_blocks) {
        double bound = 1.0 / std::sqrt(static_cast<double>(in_ch) * b.kernel * b.kernel);
        for (double& w : conv_weight(block)) w = rng.uniform(-bound, bound);
        in_ch = b.out_channels;
        ++block;
    }
    double bound = 1.0 / std::sqrt(static_cast<double>(gap_channels_));
    for (double& w : dense_weight()) w = rng.uniform(-bound, bound);
    bound = 1.0 / std::sqrt(static_cast<double>(cfg_.feature_dim));
    for (double& w : writer_weight()) w = rng.uniform(-bound, bound);
    if (cfg_.forgery_head)
        for (double& w : forgery_weight()) w = rng.uniform(-bound, bound);
}

std::span<double> FeatNet::tensor(std::size_t i) {
    return {params_.data() + offsets_[i], sizes_[i]};
}
std::span<const double> FeatNet::tensor(std::size_t i) const {
    return {params_.data() + offsets_[i], sizes_[i]};
}

std::span<double> FeatNet::conv_weight(int block) { return tensor(2 * block); }
std::span<double> FeatNet::conv_bias(int block) { return tensor(2 * block + 1); }
std::span<double> FeatNet::dense_weight() { return tensor(2 * cfg_.conv_blocks.size()); }
std::span<double> FeatNet::dense_bias() { return tensor(2 * cfg_.conv_blocks.size() + 1); }
std::span<double> FeatNet::writer_weight() { return tensor(2 * cfg_.conv_blocks.size() + 2); }
std::span<double> FeatNet::writer_bias() { return tensor(2 * cfg_.conv_blocks.size() + 3); }
std::span<double> FeatNet::forgery_weight() { return tensor(2 * cfg_.conv_blocks.size() + 4); }
std::span<double> FeatNet::forgery_bias() { return tensor(2 * cfg_.conv_blocks.size() + 5); }

std::span<const double> FeatNet::conv_weight(int block) const { return tensor(2 * block); }
std::span<const double> FeatNet::conv_bias(int block) const { return tensor(2 * block + 1); }
std::span<const double> FeatNet::dense_weight() const { return tensor(2 * cfg_.conv_blocks.size()); }
std::span<const double> FeatNet::dense_bias() const { return tensor(2 * cfg_.conv_blocks.size() + 1); }
std::span<const double> FeatNet::writer_weight() const { return tensor(2 * cfg_.conv_blocks.size() + 2); }
std::span<const double> FeatNet::writer_bias() const { return tensor(2 * cfg_.conv_blocks.size() + 3); }
std::span<const double> FeatNet::forgery_weight() const { return tensor(2 * cfg_.conv_blocks.size() + 4); }
std::span<const double> FeatNet::forgery_bias() const { return tensor(2 * cfg_.conv_blocks.size() + 5); }

namespace {

// Forward state kept per sample for the backward pass.
struct Workspace {
    std::vector<Tensor3> conv_in;   // input to each conv
    std::vector<Tensor3> conv_pre;  // pre-ReLU conv output
    std::vector<Tensor3> pool_out;  // post-pool activation
    std::vector<std::vector<int>> pool_argmax; // flat index into relu output
    std::vector<double> gap;
    std::vector<double> feat_pre;
    std::vector<double> feat;
    std::vector<double> writer_logits;
    double forgery_logit = 0.0;
};

Tensor3 image_to_tensor(const FloatImage& img) {
    Tensor3 t(1, img.height, img.width);
    for (std::size_t i = 0; i < img.values.size(); ++i) t.v[i] = img.values[i];
    return t;
}

void conv_forward(const Tensor3& in, std::span<const double> weight,
                  std::span<const double> bias, int out_ch, int kernel, int stride,
                  Tensor3& out) {
    int oh = conv_out_dim(in.height, kernel, stride);
    int ow = conv_out_dim(in.width, kernel, stride);
    out = Tensor3(out_ch, oh, ow);
    const std::size_t k2 = static_cast<std::size_t>(kernel) * kernel;
    for (int o = 0; o < out_ch; ++o) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double acc = bias[o];
                for (int c = 0; c < in.channels; ++c) {
                    const double* w = weight.data() + (o * in.channels + c) * k2;
                    for (int dy = 0; dy < kernel; ++dy)
                        for (int dx = 0; dx < kernel; ++dx)
                            acc += w[dy * kernel + dx] * in.at(c, y * stride + dy, x * stride + dx);
                }
                out.at(o, y, x) = acc;
            }
        }
    }
}

// ReLU then 2x2/2 ceil-mode max pool; records the argmax (first maximum in
// scan order) as a flat index into the ReLU activation.
void relu_pool_forward(const Tensor3& pre, Tensor3& out, std::vector<int>* argmax) {
    int oh = pool_out_dim(pre.height);
    int ow = pool_out_dim(pre.width);
    out = Tensor3(pre.channels, oh, ow);
    if (argmax) argmax->assign(out.v.size(), -1);
    for (int c = 0; c < pre.channels; ++c) {
        for (int py = 0; py < oh; ++py) {
            for (int px = 0; px < ow; ++px) {
                double best = -1.0;
                int best_idx = -1;
                for (int y = 2 * py; y < std::min(2 * py + 2, pre.height); ++y) {
                    for (int x = 2 * px; x < std::min(2 * px + 2, pre.width); ++x) {
                        double r = std::max(0.0, pre.at(c, y, x));
                        if (best_idx < 0 || r > best) {
                            best = r;
                            best_idx = (c * pre.height + y) * pre.width + x;
                        }
                    }
                }
                out.at(c, py, px) = best;
                if (argmax) (*argmax)[(static_cast<std::size_t>(c) * oh + py) * ow + px] = best_idx;
            }
        }
    }
}

void forward(const FeatNet& net, const FloatImage& img, Workspace& ws, bool keep_state) {
    const NetConfig& cfg = net.config();
    if (img.height != cfg.input_height || img.width != cfg.input_width)
        raise(ErrorCode::ShapeMismatch, "image dimensions do not match the network input");

    std::size_t nb = cfg.conv_blocks.size();
    ws.conv_in.resize(nb);
    ws.conv_pre.resize(nb);
    ws.pool_out.resize(nb);
    ws.pool_argmax.resize(nb);

    Tensor3 x = image_to_tensor(img);
    for (std::size_t b = 0; b < nb; ++b) {
        const ConvSpec& spec = cfg.conv_blocks[b];
        Tensor3 pre;
        conv_forward(x, net.conv_weight(static_cast<int>(b)), net.conv_bias(static_cast<int>(b)),
                     spec.out_channels, spec.kernel, spec.stride, pre);
        Tensor3 pooled;
        relu_pool_forward(pre, pooled, keep_state ? &ws.pool_argmax[b] : nullptr);
        if (keep_state) {
            ws.conv_in[b] = std::move(x);
            ws.conv_pre[b] = std::move(pre);
        }
        x = std::move(pooled);
        if (keep_state) ws.pool_out[b] = x; // copy: needed as next conv input too
    }

    // Global average pool.
    int ch = x.channels;
    double inv_area = 1.0 / (static_cast<double>(x.height) * x.width);
    ws.gap.assign(ch, 0.0);
    for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int y = 0; y < x.height; ++y)
            for (int xx = 0; xx < x.width; ++xx) s += x.at(c, y, xx);
        ws.gap[c] = s * inv_area;
    }

    // Dense feature layer.
    std::span<const double> dw = net.dense_weight();
    std::span<const double> db = net.dense_bias();
    ws.feat_pre.assign(cfg.feature_dim, 0.0);
    ws.feat.assign(cfg.feature_dim, 0.0);
    for (int f = 0; f < cfg.feature_dim; ++f) {
        double acc = db[f];
        for (int c = 0; c < ch; ++c) acc += dw[f * ch + c] * ws.gap[c];
        ws.feat_pre[f] = acc;
        ws.feat[f] = std::max(0.0, acc);
    }

    // Heads.
    std::span<const double> ww = net.writer_weight();
    std::span<const double> wb = net.writer_bias();
    ws.writer_logits.assign(cfg.num_writers, 0.0);
    for (int k = 0; k < cfg.num_writers; ++k) {
        double acc = wb[k];
        for (int f = 0; f < cfg.feature_dim; ++f) acc += ww[k * cfg.feature_dim + f] * ws.feat[f];
        ws.writer_logits[k] = acc;
    }
    if (cfg.forgery_head) {
        std::span<const double> fw = net.forgery_weight();
        double acc = net.forgery_bias()[0];
        for (int f = 0; f < cfg.feature_dim; ++f) acc += fw[f] * ws.feat[f];
        ws.forgery_logit = acc;
    }
}

double log_sum_exp(std::span<const double> z) {
    double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

// Stable binary cross-entropy from a raw logit.
double bce_from_logit(double z, bool positive) {
    double t = positive ? 1.0 : 0.0;
    return std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::fabs(z)));
}

// Backward from head deltas down to parameter gradients. dfeat is the
// gradient w.r.t. the post-ReLU feature vector.
void backward(const FeatNet& net, const Workspace& ws, std::span<const double> dfeat_in,
              std::span<const double> dwriter_logits, double dforgery_logit,
              std::vector<double>& grad) {
    const NetConfig& cfg = net.config();
    const int fd = cfg.feature_dim;
    const int ch = net.gap_channels();
    std::size_t nb = cfg.conv_blocks.size();

    auto grad_tensor = [&](std::span<const double> t) -> double* {
        return grad.data() + (t.data() - net.parameters().data());
    };

    std::vector<double> dfeat(dfeat_in.begin(), dfeat_in.end());

    // Heads.
    if (!dwriter_logits.empty()) {
        double* gww = grad_tensor(net.writer_weight());
        double* gwb = grad_tensor(net.writer_bias());
        std::span<const double> ww = net.writer_weight();
        for (int k = 0; k < cfg.num_writers; ++k) {
            double d = dwriter_logits[k];
            if (d == 0.0) continue;
            gwb[k] += d;
            for (int f = 0; f < fd; ++f) {
                gww[k * fd + f] += d * ws.feat[f];
                dfeat[f] += d * ww[k * fd + f];
            }
        }
    }
    if (dforgery_logit != 0.0) {
        double* gfw = grad_tensor(net.forgery_weight());
        double* gfb = grad_tensor(net.forgery_bias());
        std::span<const double> fw = net.forgery_weight();
        gfb[0] += dforgery_logit;
        for (int f = 0; f < fd; ++f) {
            gfw[f] += dforgery_logit * ws.feat[f];
            dfeat[f] += dforgery_logit * fw[f];
        }
    }

    // Dense layer (through the feature ReLU).
    std::vector<double> dgap(ch, 0.0);
    double* gdw = grad_tensor(net.dense_weight());
    double* gdb = grad_tensor(net.dense_bias());
    std::span<const double> dw = net.dense_weight();
    for (int f = 0; f < fd; ++f) {
        double d = ws.feat_pre[f] > 0.0 ? dfeat[f] : 0.0;
        if (d == 0.0) continue;
        gdb[f] += d;
        for (int c = 0; c < ch; ++c) {
            gdw[f * ch + c] += d * ws.gap[c];
            dgap[c] += d * dw[f * ch + c];
        }
    }

    if (nb == 0) return; // no conv stack: gap is the (constant) input average

    // GAP backward into the last pooled map.
    const Tensor3& last = ws.pool_out[nb - 1];
    Tensor3 dx(last.channels, last.height, last.width);
    double inv_area = 1.0 / (static_cast<double>(last.height) * last.width);
    for (int c = 0; c < last.channels; ++c) {
        double d = dgap[c] * inv_area;
        for (int y = 0; y < last.height; ++y)
            for (int x = 0; x < last.width; ++x) dx.at(c, y, x) = d;
    }

    for (std::size_t bi = nb; bi-- > 0;) {
        const ConvSpec& spec = cfg.conv_blocks[bi];
        const Tensor3& pre = ws.conv_pre[bi];
        const Tensor3& in = ws.conv_in[bi];

        // Unpool: route each pooled gradient to its argmax cell, then gate by
        // the ReLU derivative.
        Tensor3 dpre(pre.channels, pre.height, pre.width);
        const std::vector<int>& amax = ws.pool_argmax[bi];
        for (std::size_t i = 0; i < dx.v.size(); ++i) {
            int idx = amax[i];
            dpre.v[idx] += dx.v[i];
        }
        for (std::size_t i = 0; i < dpre.v.size(); ++i)
            if (pre.v[i] <= 0.0) dpre.v[i] = 0.0;

        // Conv backward.
        double* gw = grad_tensor(net.conv_weight(static_cast<int>(bi)));
        double* gb = grad_tensor(net.conv_bias(static_cast<int>(bi)));
        std::span<const double> w = net.conv_weight(static_cast<int>(bi));
        Tensor3 din(in.channels, in.height, in.width);
        const int k = spec.kernel, s = spec.stride;
        const std::size_t k2 = static_cast<std::size_t>(k) * k;
        for (int o = 0; o < dpre.channels; ++o) {
            for (int y = 0; y < dpre.height; ++y) {
                for (int x = 0; x < dpre.width; ++x) {
                    double d = dpre.at(o, y, x);
                    if (d == 0.0) continue;
                    gb[o] += d;
                    for (int c = 0; c < in.channels; ++c) {
                        const double* wk = w.data() + (o * in.channels + c) * k2;
                        double* gwk = gw + (o * in.channels + c) * k2;
                        for (int dy = 0; dy < k; ++dy) {
                            for (int ddx = 0; ddx < k; ++ddx) {
                                gwk[dy * k + ddx] += d * in.at(c, y * s + dy, x * s + ddx);
                                din.at(c, y * s + dy, x * s + ddx) += d * wk[dy * k + ddx];
                            }
                        }
                    }
                }
            }
        }
        dx = std::move(din);
    }
}

} // namespace

std::vector<float> FeatNet::forward_features(const FloatImage& img) const {
    Workspace ws;
    forward(*this, img, ws, false);
    std::vector<float> out(ws.feat.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(ws.feat[i]);
    return out;
}

std::vector<double> FeatNet::forward_writer_logits(const FloatImage& img) const {
    Workspace ws;
    forward(*this, img, ws, false);
    return ws.writer_logits;
}

double FeatNet::forward_forgery_logit(const FloatImage& img) const {
    if (!cfg_.forgery_head) raise(ErrorCode::MissingForgeryHead, "network has no forgery head");
    Workspace ws;
    forward(*this, img, ws, false);
    return ws.forgery_logit;
}

double loss_and_gradient(const FeatNet& net, std::span<const TrainSample> samples,
                         std::span<const std::size_t> indices, Objective objective,
                         double lambda_f, std::vector<double>* grad) {
    const NetConfig& cfg = net.config();
    if (indices.empty()) raise(ErrorCode::EmptyInput, "loss over an empty batch");
    if (objective == Objective::signet_f && !cfg.forgery_head)
        raise(ErrorCode::MissingForgeryHead, "signet-f objective needs a forgery head");

    std::size_t n_genuine = 0;
    for (std::size_t i : indices) {
        const TrainSample& s = samples[i];
        bool counts_for_writer = objective == Objective::signet || !s.forged;
        if (counts_for_writer && (s.writer_id < 0 || s.writer_id >= cfg.num_writers))
            raise(ErrorCode::UnknownWriter, "writer_id outside [0, num_writers)");
        if (!s.forged || objective == Objective::signet) ++n_genuine;
    }
    // For signet every sample enters the writer term; for signet-f only the
    // genuine ones do.
    double writer_norm = objective == Objective::signet
                             ? static_cast<double>(indices.size())
                             : static_cast<double>(n_genuine);
    double all_norm = static_cast<double>(indices.size());

    if (grad) grad->assign(net.parameters().size(), 0.0);

    double total = 0.0;
    Workspace ws;
    std::vector<double> dlogits;
    for (std::size_t i : indices) {
        const TrainSample& s = samples[i];
        forward(net, s.image, ws, grad != nullptr);

        bool writer_term = objective == Objective::signet || !s.forged;
        double dforgery = 0.0;
        dlogits.assign(cfg.num_writers, 0.0);

        if (writer_term && writer_norm > 0.0) {
            double lse = log_sum_exp(ws.writer_logits);
            total += (lse - ws.writer_logits[s.writer_id]) / writer_norm;
            if (grad) {
                for (int k = 0; k < cfg.num_writers; ++k)
                    dlogits[k] = std::exp(ws.writer_logits[k] - lse) / writer_norm;
                dlogits[s.writer_id] -= 1.0 / writer_norm;
            }
        }
        if (objective == Objective::signet_f) {
            total += lambda_f * bce_from_logit(ws.forgery_logit, s.forged) / all_norm;
            if (grad) {
                double p = sigmoid(ws.forgery_logit);
                dforgery = lambda_f * (p - (s.forged ? 1.0 : 0.0)) / all_norm;
            }
        }
        if (grad) {
            std::vector<double> dfeat(cfg.feature_dim, 0.0);
            backward(net, ws, dfeat, dlogits, dforgery, *grad);
        }
    }
    return total;
}

double loss_signet(const FeatNet& net, std::span<const TrainSample> batch) {
    std::vector<std::size_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), 0);
    return loss_and_gradient(net, batch, idx, Objective::signet, 0.0, nullptr);
}

double loss_signet_f(const FeatNet& net, std::span<const TrainSample> batch, double lambda_f) {
    std::vector<std::size_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), 0);
    return loss_and_gradient(net, batch, idx, Objective::signet_f, lambda_f, nullptr);
}

FeatNet train(FeatNet net, std::span<const TrainSample> samples, const TrainSpec& spec,
              Objective objective) {
    spec.validate();
    if (samples.empty()) raise(ErrorCode::EmptyInput, "no training samples");
    if (objective == Objective::signet) {
        for (const TrainSample& s : samples)
            if (s.forged)
                raise(ErrorCode::InvalidArgument, "signet objective trains on genuine samples only");
    }

    std::vector<double> velocity(net.parameters().size(), 0.0);
    std::vector<double> grad;
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    // Batch-order stream, decoupled from the init stream.
    Rng rng(net.config().seed ^ 0xA5A5A5A5A5A5A5A5ULL);

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(spec.batch_size)) {
            std::size_t len = std::min(order.size() - start,
                                       static_cast<std::size_t>(spec.batch_size));
            std::span<const std::size_t> batch(order.data() + start, len);
            loss_and_gradient(net, samples, batch, objective, spec.forgery_loss_weight, &grad);
            std::span<double> params = net.parameters();
            for (std::size_t i = 0; i < params.size(); ++i) {
                velocity[i] = spec.momentum * velocity[i] - spec.learning_rate * grad[i];
                params[i] += velocity[i];
            }
        }
    }
    return net;
}

FeatureMatrix extract_batch(const FeatNet& net, std::span<const FloatImage> images) {
    FeatureMatrix out(images.size(), static_cast<std::size_t>(net.config().feature_dim));
    for (std::size_t i = 0; i < images.size(); ++i) {
        std::vector<float> f = net.forward_features(images[i]);
        std::copy(f.begin(), f.end(), out.row(i).begin());
    }
    return out;
}

} // namespace sigver
