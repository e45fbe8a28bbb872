#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sigver/image.hpp"
#include "sigver/matrix.hpp"

namespace sigver {

struct ConvSpec {
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
};

struct NetConfig {
    int input_height = 0;
    int input_width = 0;
    std::vector<ConvSpec> conv_blocks; // each block: valid conv -> ReLU -> 2x2/2 max pool
    int feature_dim = 128;
    int num_writers = 2;
    bool forgery_head = false;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig on even/nonpositive kernels, bad dims, or an
    /// input too small to survive the conv stack.
    void validate() const;
};

struct TrainSample {
    FloatImage image;
    int writer_id = 0;
    bool forged = false;
};

struct TrainSpec {
    int epochs = 1;
    int batch_size = 32;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double forgery_loss_weight = 1.0;

    void validate() const;
};

enum class Objective { signet, signet_f };

/// Compact convolutional feature extractor: conv blocks, global average
/// pool, dense feature layer (ReLU), then a writer-classification head and
/// an optional forgery head. Feature extraction returns the post-activation
/// dense layer, before either head.
///
/// Parameters live in one flat double vector in declaration order (per conv
/// block weights [out][in][ky][kx] then biases, dense weights [feat][ch]
/// then biases, writer head, forgery head) — the same order as the SFNT
/// file. Max pooling is 2x2 stride 2 with clipped (ceil-mode) windows.
class FeatNet {
public:
    /// Deterministic init from cfg.seed: weights uniform on
    /// (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
    explicit FeatNet(NetConfig cfg);

    const NetConfig& config() const { return cfg_; }

    std::vector<float> forward_features(const FloatImage& img) const;
    std::vector<double> forward_writer_logits(const FloatImage& img) const;
    double forward_forgery_logit(const FloatImage& img) const;

    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    std::span<double> conv_weight(int block);
    std::span<double> conv_bias(int block);
    std::span<double> dense_weight();
    std::span<double> dense_bias();
    std::span<double> writer_weight();
    std::span<double> writer_bias();
    std::span<double> forgery_weight();
    std::span<double> forgery_bias();

    std::span<const double> conv_weight(int block) const;
    std::span<const double> conv_bias(int block) const;
    std::span<const double> dense_weight() const;
    std::span<const double> dense_bias() const;
    std::span<const double> writer_weight() const;
    std::span<const double> writer_bias() const;
    std::span<const double> forgery_weight() const;
    std::span<const double> forgery_bias() const;

    /// Channel count feeding the dense layer (after the conv stack + GAP).
    int gap_channels() const { return gap_channels_; }

private:
    NetConfig cfg_;
    std::vector<double> params_;
    std::vector<std::size_t> offsets_; // tensor start offsets, declaration order
    std::vector<std::size_t> sizes_;
    int gap_channels_ = 0;

    std::span<double> tensor(std::size_t i);
    std::span<const double> tensor(std::size_t i) const;
};

/// Mean softmax cross-entropy of the writer head over the batch.
double loss_signet(const FeatNet& net, std::span<const TrainSample> batch);

/// Writer cross-entropy on genuine samples plus lambda_f times the mean
/// forgery-head binary cross-entropy over the whole batch.
double loss_signet_f(const FeatNet& net, std::span<const TrainSample> batch, double lambda_f);

/// Loss and (optionally) its gradient w.r.t. every parameter, mean over the
/// indexed samples. grad may be null for loss-only evaluation.
double loss_and_gradient(const FeatNet& net, std::span<const TrainSample> samples,
                         std::span<const std::size_t> indices, Objective objective,
                         double lambda_f, std::vector<double>* grad);

/// Minibatch SGD with momentum; batch order reshuffled each epoch from a
/// stream derived from the net seed. Returns the trained net.
FeatNet train(FeatNet net, std::span<const TrainSample> samples, const TrainSpec& spec,
              Objective objective);

/// Row i = forward_features(images[i]).
FeatureMatrix extract_batch(const FeatNet& net, std::span<const FloatImage> images);

} // namespace sigver
